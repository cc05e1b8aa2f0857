"""Orthodiagonal maps: embedded bipartite quad meshes with orthogonal diagonals.

A map stores vertex positions, a primal/dual coloring, and a list of quad
faces ``[v1, w1, v2, w2]`` traversed counterclockwise with ``v1, v2`` primal
and ``w1, w2`` dual.  Everything else (edges, boundary walk, vertex
partitions, the weighted primal/dual networks) is derived deterministically
from the face list.

Faces are the single source of truth.  Edge ``i`` of the primal network, edge
``i`` of the dual network and face ``i`` of the map always correspond: the
primal edge joins ``v1, v2`` with conductance |w1 w2| / |v1 v2| and the dual
edge joins ``w1, w2`` with the reciprocal weight, so the index-level bijection
between primal and dual edges is available everywhere for free.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateFaceError, GeometryError, StructuralError
from .geometry import dist, hull_diameter, signed_area
from .network import Network

PRIMAL = True
DUAL = False


class OrthodiagonalMap:
    """Finite plane quad mesh with orthogonal diagonals.

    The constructor stores raw data without validating it; run
    :func:`validate` to obtain a full report, or access derived attributes
    (which raise ``StructuralError`` on combinatorially broken input).
    Instances are immutable once built.
    """

    def __init__(self, positions, primal_mask, faces, ids=None):
        self.positions = np.asarray(positions, float).reshape(-1, 2)
        self.primal_mask = np.asarray(primal_mask, bool).reshape(-1)
        self.faces = np.asarray(faces, int).reshape(-1, 4)
        n = len(self.positions)
        if len(self.primal_mask) != n:
            raise StructuralError("positions and colors disagree in length")
        self.ids = np.arange(n) if ids is None else np.asarray(ids, int).reshape(-1)
        if len(self.ids) != n:
            raise StructuralError("ids and positions disagree in length")

    # -- basic counts ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def _check_face_indices(self):
        if self.n_faces and (self.faces.min() < 0 or self.faces.max() >= self.n_vertices):
            raise StructuralError("face refers to a vertex index that does not exist")

    # -- derived combinatorics --------------------------------------------

    @cached_property
    def edges(self) -> np.ndarray:
        """Undirected G-edges (k, 2), each row sorted, lexicographically ordered."""
        self._check_face_indices()
        pairs = set()
        for f in self.faces:
            for a, b in zip(f, np.roll(f, -1)):
                if a == b:
                    raise StructuralError("face repeats a vertex on consecutive corners")
                pairs.add((min(a, b), max(a, b)))
        return np.array(sorted(pairs), int).reshape(-1, 2)

    @cached_property
    def edge_face_count(self) -> dict:
        count: dict = {}
        for i, f in enumerate(self.faces):
            for a, b in zip(f, np.roll(f, -1)):
                count.setdefault((min(a, b), max(a, b)), []).append(i)
        return count

    @cached_property
    def boundary_edges(self) -> list:
        return sorted(e for e, fs in self.edge_face_count.items() if len(fs) == 1)

    @cached_property
    def boundary_walk(self) -> np.ndarray:
        """Cyclic vertex sequence of the outer face, oriented counterclockwise.

        Raises StructuralError when the boundary is not a single simple
        closed walk.
        """
        adj: dict = {}
        for a, b in self.boundary_edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        if not adj:
            raise StructuralError("map has no boundary edges")
        for v, nbs in adj.items():
            if len(nbs) != 2:
                raise StructuralError(f"boundary is not simple at vertex {v}")
        start = min(adj)
        walk = [start, min(adj[start])]
        while True:
            prev, cur = walk[-2], walk[-1]
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            if nxt == start:
                break
            if len(walk) > len(self.boundary_edges):
                raise StructuralError("boundary walk does not close up")
            walk.append(nxt)
        if len(walk) != len(self.boundary_edges):
            raise StructuralError("boundary edges form more than one cycle")
        walk_arr = np.array(walk, int)
        if signed_area(self.positions[walk_arr]) < 0:
            walk_arr = walk_arr[::-1].copy()
        return walk_arr

    @cached_property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, bool)
        mask[self.boundary_walk] = True
        return mask

    @property
    def primal_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.primal_mask)

    @property
    def dual_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.primal_mask)

    def boundary_vertices(self):
        """(boundary primal, boundary dual) index arrays."""
        m = self.boundary_vertex_mask
        return np.flatnonzero(m & self.primal_mask), np.flatnonzero(m & ~self.primal_mask)

    def interior_vertices(self):
        m = self.boundary_vertex_mask
        return np.flatnonzero(~m & self.primal_mask), np.flatnonzero(~m & ~self.primal_mask)

    # -- metric quantities -------------------------------------------------

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        p = self.positions
        e = self.edges
        return np.hypot(*(p[e[:, 1]] - p[e[:, 0]]).T)

    def mesh_size(self) -> float:
        """Maximal G-edge length (the quantity the convergence bounds call eps)."""
        if len(self.edges) == 0:
            raise StructuralError("map has no edges")
        return float(self.edge_lengths.max())

    def diagonal_lengths(self):
        """Per-face primal and dual diagonal lengths (|v1 v2|, |w1 w2|)."""
        p = self.positions
        f = self.faces
        dp = np.hypot(*(p[f[:, 2]] - p[f[:, 0]]).T)
        dd = np.hypot(*(p[f[:, 3]] - p[f[:, 1]]).T)
        return dp, dd

    def face_areas(self) -> np.ndarray:
        """Shoelace area per face (equals half the diagonal product)."""
        p = self.positions
        return np.array([signed_area(p[f]) for f in self.faces])

    def area(self) -> float:
        """Area of the region covered by the map (sum of face areas)."""
        return float(self.face_areas().sum())

    def diameter(self) -> float:
        return hull_diameter(self.positions)

    def face_polygon(self, i: int) -> np.ndarray:
        return self.positions[self.faces[i]]

    # -- networks ------------------------------------------------------------

    @cached_property
    def _diag_conductances(self):
        dp, dd = self.diagonal_lengths()
        if np.any(dp <= 0) or np.any(dd <= 0):
            raise DegenerateFaceError("face with zero-length diagonal")
        return dd / dp, dp / dd

    def primal_network(self) -> Network:
        """Network on the primal vertices, one edge per face, c = |w1w2|/|v1v2|."""
        cp, _ = self._diag_conductances
        tails = self.faces[:, 0]
        heads = self.faces[:, 2]
        labels = self.primal_vertices
        return Network(labels, tails, heads, cp, positions=self.positions[labels])

    def dual_network(self) -> Network:
        """Network on the dual vertices, one edge per face, c = |v1v2|/|w1w2|."""
        _, cd = self._diag_conductances
        tails = self.faces[:, 1]
        heads = self.faces[:, 3]
        labels = self.dual_vertices
        return Network(labels, tails, heads, cd, positions=self.positions[labels])

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        order = np.argsort(self.ids)
        verts = [
            {
                "id": int(self.ids[i]),
                "x": float(self.positions[i, 0]),
                "y": float(self.positions[i, 1]),
                "color": "primal" if self.primal_mask[i] else "dual",
            }
            for i in order
        ]
        faces = [[int(self.ids[v]) for v in f] for f in self.faces]
        return {"format": "odmap/1", "vertices": verts, "faces": faces}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_json_dict(), sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json_dict(cls, data: dict) -> "OrthodiagonalMap":
        if data.get("format", "odmap/1") != "odmap/1":
            raise StructuralError(f"unsupported map format {data.get('format')!r}")
        verts = data["vertices"]
        ids = np.array([v["id"] for v in verts], int)
        if len(set(ids.tolist())) != len(ids):
            raise StructuralError("duplicate vertex ids")
        index_of = {int(v): i for i, v in enumerate(ids)}
        positions = np.array([[v["x"], v["y"]] for v in verts], float).reshape(-1, 2)
        primal = np.array([v["color"] == "primal" for v in verts], bool)
        faces = []
        for f in data["faces"]:
            if len(f) != 4:
                raise StructuralError("face is not a quad")
            try:
                faces.append([index_of[int(v)] for v in f])
            except KeyError as exc:
                raise StructuralError(f"face references unknown vertex id {exc}") from exc
        return cls(positions, primal, np.array(faces, int).reshape(-1, 4), ids=ids)

    @classmethod
    def from_json(cls, path) -> "OrthodiagonalMap":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    # -- submaps ---------------------------------------------------------------

    def submap(self, face_indices) -> "OrthodiagonalMap":
        """Map made of a subset of faces (vertices renumbered, ids preserved)."""
        face_indices = np.asarray(face_indices, int)
        used = np.unique(self.faces[face_indices].ravel())
        remap = -np.ones(self.n_vertices, int)
        remap[used] = np.arange(len(used))
        return OrthodiagonalMap(
            self.positions[used],
            self.primal_mask[used],
            remap[self.faces[face_indices]],
            ids=self.ids[used],
        )


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)
    worst_orthogonality: float = 0.0
    offending_faces: list = field(default_factory=list)
    offending_edges: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = (bool(ok), detail)

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {k: {"passed": ok, "detail": d} for k, (ok, d) in self.checks.items()},
            "worst_orthogonality": self.worst_orthogonality,
            "offending_faces": self.offending_faces,
            "offending_edges": [list(e) for e in self.offending_edges],
        }

    def __str__(self) -> str:
        lines = [f"{'PASS' if ok else 'FAIL'}  {k}" + (f"  ({d})" if d else "") for k, (ok, d) in self.checks.items()]
        return "\n".join(lines)


def validate(omap: OrthodiagonalMap, tol: float = 1e-9) -> ValidationReport:
    """Check every defining invariant of an orthodiagonal map.

    Structural problems (dangling ids, non-simple boundary) and geometric
    failures (orthogonality, orientation) are reported under separate check
    names; nothing is raised.
    """
    report = ValidationReport()
    p = omap.positions

    try:
        omap._check_face_indices()
        report.add("structure/face_ids", True)
    except StructuralError as exc:
        report.add("structure/face_ids", False, str(exc))
        return report

    if not np.all(np.isfinite(p)):
        report.add("structure/finite_positions", False, "NaN or infinite coordinate")
        return report
    report.add("structure/finite_positions", True)

    distinct = all(len(set(f.tolist())) == 4 for f in omap.faces)
    report.add("structure/distinct_corners", distinct)
    if not distinct:
        return report

    # colors alternate primal, dual, primal, dual
    pm = omap.primal_mask
    color_ok = np.all(pm[omap.faces[:, 0]] & ~pm[omap.faces[:, 1]] & pm[omap.faces[:, 2]] & ~pm[omap.faces[:, 3]])
    bad_color = [int(i) for i in np.flatnonzero(
        ~(pm[omap.faces[:, 0]] & ~pm[omap.faces[:, 1]] & pm[omap.faces[:, 2]] & ~pm[omap.faces[:, 3]])
    )]
    report.add("faces/alternating_colors", bool(color_ok), f"faces {bad_color[:8]}" if bad_color else "")

    # orthogonality of diagonals, relative to diagonal lengths
    f = omap.faces
    dv = p[f[:, 2]] - p[f[:, 0]]
    dw = p[f[:, 3]] - p[f[:, 1]]
    lv = np.hypot(*dv.T)
    lw = np.hypot(*dw.T)
    degenerate = np.flatnonzero((lv <= 0) | (lw <= 0))
    report.add("faces/nondegenerate_diagonals", degenerate.size == 0, f"faces {degenerate[:8].tolist()}")
    if degenerate.size:
        return report
    resid = np.abs(np.sum(dv * dw, axis=1)) / (lv * lw)
    report.worst_orthogonality = float(resid.max()) if len(resid) else 0.0
    bad = np.flatnonzero(resid > tol)
    report.offending_faces = bad.tolist()
    report.add(
        "faces/orthogonal_diagonals",
        bad.size == 0,
        f"worst residual {report.worst_orthogonality:.3e}" + (f", faces {bad[:8].tolist()}" if bad.size else ""),
    )

    # counterclockwise orientation
    areas = omap.face_areas()
    bad_orient = np.flatnonzero(areas <= 0)
    report.add("faces/ccw_orientation", bad_orient.size == 0, f"faces {bad_orient[:8].tolist()}")

    # edge/face incidence and boundary structure
    over = [e for e, fs in omap.edge_face_count.items() if len(fs) > 2]
    report.add("edges/at_most_two_faces", not over, f"edges {over[:8]}")
    report.offending_edges = over

    bip = np.flatnonzero(pm[omap.edges[:, 0]] == pm[omap.edges[:, 1]])
    report.add("edges/bipartite", bip.size == 0, f"edges {bip[:8].tolist()}")

    try:
        walk = omap.boundary_walk
        report.add("boundary/single_simple_walk", True, f"length {len(walk)}")
        alternating = all(pm[a] != pm[b] for a, b in zip(walk, np.roll(walk, -1)))
        report.add("boundary/alternating", alternating)
    except StructuralError as exc:
        report.add("boundary/single_simple_walk", False, str(exc))

    # connectivity over G-edges, including isolated vertices
    try:
        adj: dict = {}
        for a, b in omap.edges:
            adj.setdefault(int(a), []).append(int(b))
            adj.setdefault(int(b), []).append(int(a))
        seen = set()
        stack = [0] if omap.n_vertices else []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj.get(v, []))
        report.add("graph/connected", len(seen) == omap.n_vertices,
                   f"{omap.n_vertices - len(seen)} unreachable vertices")
    except StructuralError as exc:
        report.add("graph/connected", False, str(exc))

    return report


def require_valid(omap: OrthodiagonalMap, tol: float = 1e-9):
    """Raise GeometryError/StructuralError unless the map validates."""
    report = validate(omap, tol)
    if not report.passed:
        failed = [k for k, (ok, _) in report.checks.items() if not ok]
        if any(k.startswith("structure") or k.startswith("boundary") or k.startswith("graph") for k in failed):
            raise StructuralError(f"map failed validation: {failed}")
        raise GeometryError(f"map failed validation: {failed}")
    return report


# ---------------------------------------------------------------------------
# martingale / orientation diagnostics


def martingale_residuals(omap: OrthodiagonalMap) -> np.ndarray:
    """|sum_Q c(e_Q)(v_Q - v)| at each interior primal vertex.

    The canonical weights make the coordinate functions discrete harmonic,
    so these vanish up to rounding; values are returned unnormalized (callers
    compare against tol * pi(v) * mesh).
    """
    net = omap.primal_network()
    interior, _ = omap.interior_vertices()
    pos = omap.positions
    acc = np.zeros((omap.n_vertices, 2))
    f = omap.faces
    c = net.conductances
    for k in (0, 2):
        v = f[:, k]
        v_opp = f[:, 2 - k]
        np.add.at(acc, v, c[:, None] * (pos[v_opp] - pos[v]))
    return np.hypot(acc[interior, 0], acc[interior, 1])


def orientation_residuals(omap: OrthodiagonalMap) -> np.ndarray:
    """|rot90(unit v1->v2) - unit w1->w2| per face (zero for valid maps)."""
    p = omap.positions
    f = omap.faces
    dv = p[f[:, 2]] - p[f[:, 0]]
    dw = p[f[:, 3]] - p[f[:, 1]]
    dv = dv / np.hypot(*dv.T)[:, None]
    dw = dw / np.hypot(*dw.T)[:, None]
    rot = np.column_stack([-dv[:, 1], dv[:, 0]])
    return np.hypot(*(rot - dw).T)


# ---------------------------------------------------------------------------
# augmented primal/dual pair (exact plane duals)


@dataclass
class AugmentedDuals:
    """Primal/dual pair completed into exact plane duals.

    ``primal`` extends the primal network with one new edge per boundary dual
    vertex, joining the flanking boundary primal vertices.  ``dual_pairs[i]``
    holds the dual endpoints of primal edge ``i``; the apex vertex (a single
    new dual vertex in the outer face) is encoded as ``APEX``.  Augmented
    primal edges carry unit conductance; they exist for the duality
    combinatorics only and never enter energies.
    """

    APEX = -1

    omap: OrthodiagonalMap
    primal: Network
    dual_pairs: np.ndarray          # (m + k, 2) map vertex indices, APEX allowed
    n_core_edges: int               # edges 0..n_core-1 are the original ones
    apex_pos: np.ndarray
    new_edge_polylines: list        # per new edge: (v_j, bend, v_{j+1}) points

    @property
    def augmented_edge_indices(self) -> np.ndarray:
        return np.arange(self.n_core_edges, len(self.dual_pairs))

    def dual_adjacency(self) -> dict:
        """Adjacency over dual vertices through core dual edges (apex excluded)."""
        adj: dict = {}
        for w1, w2 in self.dual_pairs[: self.n_core_edges]:
            adj.setdefault(int(w1), []).append(int(w2))
            adj.setdefault(int(w2), []).append(int(w1))
        return adj


def augmented_duals(omap: OrthodiagonalMap, apex_norm: float | None = None) -> AugmentedDuals:
    """Build the augmented primal graph and its exact plane dual.

    One new primal edge joins each consecutive pair of boundary primal
    vertices inside the outer face (bent within distance mesh of the boundary
    dual vertex it separates from infinity), and one new dual edge joins each
    boundary dual vertex to an apex placed at distance ``apex_norm`` from the
    origin (default: far outside the map).
    """
    walk = omap.boundary_walk
    pm = omap.primal_mask
    # rotate the walk to start at a primal vertex
    start = next(i for i, v in enumerate(walk) if pm[v])
    walk = np.roll(walk, -start)
    if not all(pm[a] != pm[b] for a, b in zip(walk, np.roll(walk, -1))):
        raise StructuralError("boundary walk does not alternate primal/dual")

    eps = omap.mesh_size()
    if apex_norm is None:
        apex_norm = 10.0 * float(np.abs(omap.positions).max() + 1.0)
    apex_pos = np.array([apex_norm, 0.0])

    base = omap.primal_network()
    tails = list(base.tails_labels)
    heads = list(base.heads_labels)
    cond = list(base.conductances)
    dual_pairs = [(int(f[1]), int(f[3])) for f in omap.faces]
    polylines = []

    k = len(walk) // 2
    centroid = omap.positions.mean(axis=0)
    for j in range(k):
        v_j = int(walk[2 * j])
        w_j = int(walk[2 * j + 1])
        v_next = int(walk[(2 * j + 2) % len(walk)])
        tails.append(v_j)
        heads.append(v_next)
        cond.append(1.0)
        dual_pairs.append((w_j, AugmentedDuals.APEX))
        # bend point just outside w_j, away from the map, within eps of w_j
        w = omap.positions[w_j]
        out = w - centroid
        nrm = np.hypot(*out)
        out = out / nrm if nrm > 0 else np.array([1.0, 0.0])
        t = 0.25 * min(eps, dist(w, omap.positions[v_j]), dist(w, omap.positions[v_next]))
        polylines.append((omap.positions[v_j], w + t * out, omap.positions[v_next]))

    labels = omap.primal_vertices
    primal = Network(labels, np.array(tails), np.array(heads), np.array(cond),
                     positions=omap.positions[labels])
    return AugmentedDuals(
        omap=omap,
        primal=primal,
        dual_pairs=np.array(dual_pairs, int),
        n_core_edges=omap.n_faces,
        apex_pos=apex_pos,
        new_edge_polylines=polylines,
    )


# ---------------------------------------------------------------------------
# block decomposition


def blocks(omap: OrthodiagonalMap) -> list:
    """2-connected components of the map, each re-emitted as a map.

    Accepts quad meshes whose outer boundary is not simple (e.g. clipped
    maps with pinch points).  Faces are partitioned among the blocks; the
    union of the returned face sets is the original face set.
    """
    omap._check_face_indices()
    edges = omap.edges
    n = omap.n_vertices
    adj: list = [[] for _ in range(n)]
    for idx, (a, b) in enumerate(edges):
        adj[a].append((int(b), idx))
        adj[b].append((int(a), idx))

    # iterative Hopcroft-Tarjan biconnected components over edges
    visited = np.zeros(n, bool)
    depth = np.zeros(n, int)
    low = np.zeros(n, int)
    comp_of_edge = -np.ones(len(edges), int)
    n_comps = 0
    edge_stack: list = []

    for root in range(n):
        if visited[root] or not adj[root]:
            continue
        stack = [(root, -1, iter(adj[root]))]
        visited[root] = True
        depth[root] = 0
        low[root] = 0
        while stack:
            v, parent_edge, it = stack[-1]
            advanced = False
            for u, eidx in it:
                if eidx == parent_edge:
                    continue
                if not visited[u]:
                    edge_stack.append(eidx)
                    visited[u] = True
                    depth[u] = depth[v] + 1
                    low[u] = depth[u]
                    stack.append((u, eidx, iter(adj[u])))
                    advanced = True
                    break
                elif depth[u] < depth[v] and comp_of_edge[eidx] < 0:
                    edge_stack.append(eidx)
                    low[v] = min(low[v], depth[u])
            if advanced:
                continue
            stack.pop()
            if stack:
                pv = stack[-1][0]
                low[pv] = min(low[pv], low[v])
                if low[v] >= depth[pv]:
                    # pv is a cut vertex (or root); pop one component
                    comp = []
                    while edge_stack:
                        e = edge_stack.pop()
                        comp.append(e)
                        if e == parent_edge:
                            break
                    for e in comp:
                        comp_of_edge[e] = n_comps
                    n_comps += 1
        if edge_stack:
            for e in edge_stack:
                comp_of_edge[e] = n_comps
            n_comps += 1
            edge_stack = []

    if n_comps == 0:
        return []

    edge_pos = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    face_comp = np.zeros(omap.n_faces, int)
    for i, f in enumerate(omap.faces):
        a, b = int(f[0]), int(f[1])
        face_comp[i] = comp_of_edge[edge_pos[(min(a, b), max(a, b))]]

    out = []
    for comp in range(n_comps):
        fidx = np.flatnonzero(face_comp == comp)
        if fidx.size:
            out.append(omap.submap(fidx))
    out.sort(key=lambda m: (-m.n_faces, int(m.ids.min())))
    return out
