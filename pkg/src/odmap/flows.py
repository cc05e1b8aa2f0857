"""Explicit low-energy flows on the primal network and the circle-straddling
edge/path machinery that feeds them.

The argument flow pushes unit current from a disk around a vertex out to the
map boundary using increments of the angular coordinate across the dual
diagonals; its strength before normalization is 2 pi (a winding-number
identity).  The random-path flow averages indicator flows of paths made of
rho-edges (primal edges whose dual endpoints straddle the circle of radius
rho), with the paper's 1/t density replaced by a deterministic midpoint
quadrature in log t.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core_map import AugmentedDuals, OrthodiagonalMap, augmented_duals
from .errors import GeometryError, RhoPathError
from .geometry import cross2, seg_point_distance
from .network import EdgeField, VertexFunction, energy, energy_of_function, strength


@dataclass
class FlowReport:
    """A flow together with its certified strength/energy and the shape of
    the theoretical bound it is compared against (any universal constant is
    reported as the ratio energy / bound_shape, never asserted)."""

    flow: EdgeField
    strength: float
    energy: float
    bound_shape: float
    ratio: float
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "strength": self.strength,
            "energy": self.energy,
            "bound_shape": self.bound_shape,
            "ratio": self.ratio,
            "edges": [{"id": int(i), "value": float(v)}
                      for i, v in enumerate(self.flow.values)],
        }


@dataclass
class RhoEdgeSet:
    center: np.ndarray
    rho: float
    edge_indices: np.ndarray  # indices into the (augmented) primal edge list
    augmented: bool = False


# ---------------------------------------------------------------------------
# argument flow


def _face_corner_reflex(quad: np.ndarray) -> int:
    """Index of the reflex corner of a simple CCW quad, or -1 if convex."""
    for k in range(4):
        a = quad[(k - 1) % 4]
        b = quad[k]
        c = quad[(k + 1) % 4]
        if cross2(b - a, c - b) < 0:
            return k
    return -1


def _delta_arg(a: np.ndarray, b: np.ndarray) -> float:
    """Change of the angular coordinate along the segment a -> b (|.| < pi)."""
    return float(np.arctan2(cross2(a, b), float(a @ b)))


def argument_flow(omap: OrthodiagonalMap, x: int, r: float,
                  relax_radius_hypothesis: bool = False) -> FlowReport:
    """Unit flow from the vertices inside B(x, r) to the map boundary.

    Per face the flow carries the increment of arg (about x) between the two
    dual endpoints, evaluated along the actual dual edge (bent through the
    midpoint of the primal diagonal for concave quads, so the winding-number
    divergence identity is exact).  Edges with both endpoints inside the disk
    are zeroed, then the whole field is normalized by 2 pi.
    """
    pos = omap.positions
    xp = pos[x]
    if not omap.primal_mask[x]:
        raise GeometryError("center vertex must be primal")
    eps = omap.mesh_size()
    if r < 3.0 * eps:
        if not relax_radius_hypothesis:
            raise GeometryError(
                f"radius {r} is below 3*mesh ({3 * eps:.3g}); the energy bound may fail "
                "(pass relax_radius_hypothesis=True to proceed)")
        warnings.warn("radius below 3*mesh; energy bound hypothesis relaxed")
    # the closed disk must avoid the boundary walk
    walk = omap.boundary_walk
    best = np.inf
    best_seg = None
    for a, b in zip(walk, np.roll(walk, -1)):
        d = seg_point_distance(pos[a], pos[b], xp)
        if d < best:
            best = d
            best_seg = (pos[a], pos[b])
    if best <= r:
        a, b = best_seg
        t = np.clip(np.dot(xp - a, b - a) / max(float((b - a) @ (b - a)), 1e-300), 0, 1)
        p = a + t * (b - a)
        raise GeometryError(
            f"disk of radius {r} reaches the boundary near ({p[0]:.6g}, {p[1]:.6g})")

    net = omap.primal_network()
    phi = np.zeros(omap.n_faces)
    f = omap.faces
    for i in range(omap.n_faces):
        quad = pos[f[i]] - xp
        w1 = quad[1]
        w2 = quad[3]
        if _face_corner_reflex(pos[f[i]]) in (0, 2):
            mid = 0.5 * (quad[0] + quad[2])  # dual edge bends through the primal midpoint
            phi[i] = _delta_arg(w1, mid) + _delta_arg(mid, w2)
        else:
            phi[i] = _delta_arg(w1, w2)

    A_mask = np.hypot(*(pos[omap.primal_vertices] - xp).T) <= r
    A = set(int(v) for v in omap.primal_vertices[A_mask])
    phi1 = phi.copy()
    for i in range(omap.n_faces):
        if int(f[i, 0]) in A and int(f[i, 2]) in A:
            phi1[i] = 0.0
    theta = EdgeField(net, phi1 / (2.0 * np.pi))

    bdry_primal, _ = omap.boundary_vertices()
    A_labels = sorted(A)
    sink = [int(v) for v in bdry_primal if int(v) not in A]
    s = strength(net, theta, A_labels, sink)
    en = energy(net, theta)
    shape = float(np.log(omap.diameter() / r))
    div = theta.divergence()
    off = [k for k, lab in enumerate(net.labels)
           if int(lab) not in A and not omap.boundary_vertex_mask[int(lab)]]
    return FlowReport(
        flow=theta,
        strength=s,
        energy=en,
        bound_shape=shape,
        ratio=en / shape if shape > 0 else np.inf,
        meta={
            "x": int(x),
            "r": float(r),
            "A": A_labels,
            "max_divergence_off_A": float(np.abs(div[off]).max()) if off else 0.0,
            "raw_field": phi,
        },
    )


def argument_field(omap: OrthodiagonalMap, x: int) -> EdgeField:
    """The raw (unnormalized, un-truncated) argument field about vertex x.

    Its divergence is 2 pi at x and 0 at every other interior primal vertex,
    by the winding number of the dual cycle around each vertex.
    """
    pos = omap.positions
    xp = pos[x]
    f = omap.faces
    phi = np.zeros(omap.n_faces)
    for i in range(omap.n_faces):
        quad = pos[f[i]] - xp
        if _face_corner_reflex(pos[f[i]]) in (0, 2):
            mid = 0.5 * (quad[0] + quad[2])
            phi[i] = _delta_arg(quad[1], mid) + _delta_arg(mid, quad[3])
        else:
            phi[i] = _delta_arg(quad[1], quad[3])
    return EdgeField(omap.primal_network(), phi)


# ---------------------------------------------------------------------------
# rho-edges and paths


def _dual_endpoint_norms(source, center):
    """Per-edge (min, max) distance of the dual endpoints from the center."""
    center = np.asarray(center, float)
    if isinstance(source, AugmentedDuals):
        omap = source.omap
        pairs = source.dual_pairs
        norms = np.hypot(*(omap.positions - center).T)
        lo = np.empty(len(pairs))
        hi = np.empty(len(pairs))
        for i, (w1, w2) in enumerate(pairs):
            a = norms[w1] if w1 != AugmentedDuals.APEX else np.inf
            b = norms[w2] if w2 != AugmentedDuals.APEX else np.inf
            lo[i], hi[i] = min(a, b), max(a, b)
        return lo, hi
    omap = source
    f = omap.faces
    norms = np.hypot(*(omap.positions - center).T)
    a = norms[f[:, 1]]
    b = norms[f[:, 3]]
    return np.minimum(a, b), np.maximum(a, b)


def rho_edges(source, center, rho: float) -> RhoEdgeSet:
    """Primal edges whose dual endpoints w, w' satisfy |w| < rho <= |w'|
    (distances measured from the center)."""
    lo, hi = _dual_endpoint_norms(source, center)
    members = np.flatnonzero((lo < rho) & (rho <= hi))
    return RhoEdgeSet(np.asarray(center, float), float(rho), members,
                      augmented=isinstance(source, AugmentedDuals))


def rho_path(aug: AugmentedDuals, rho: float, A, B_prime, center=(0.0, 0.0)) -> dict:
    """Simple path of rho-edges from A to B' inside the original primal graph.

    Follows the boundary-of-f_out construction: grow the set S_rho of dual
    vertices reachable inside the open rho-disk from a dual vertex next to
    the most central A-vertex, take the edges with exactly one dual endpoint
    in S_rho (all of them rho-edges), and breadth-first search that cut for
    the shortest A -> B' path that avoids the augmented edges.
    Returns {"vertices": [...], "edges": [...]}.
    """
    omap = aug.omap
    center = np.asarray(center, float)
    A = set(int(v) for v in A)
    Bp = set(int(v) for v in B_prime)
    if not A or not Bp:
        raise RhoPathError("A and B' must be nonempty")
    if A & Bp:
        raise RhoPathError("A and B' must be disjoint")

    pos = omap.positions
    bdry = omap.boundary_vertex_mask

    # connectivity-to-boundary hypotheses
    net = aug.primal
    adj_primal: dict = {}
    for t, h in zip(net.tails_labels, net.heads_labels):
        adj_primal.setdefault(int(t), set()).add(int(h))
        adj_primal.setdefault(int(h), set()).add(int(t))

    def reaches_boundary(inside: set) -> bool:
        seen = set()
        for s in inside:
            if s in seen:
                continue
            stack = [s]
            seen.add(s)
            while stack:
                v = stack.pop()
                if bdry[v]:
                    return True
                for u in adj_primal.get(v, ()):  # paths stay inside the set
                    if u in inside and u not in seen:
                        seen.add(u)
                        stack.append(u)
        return False

    if not reaches_boundary(A):
        raise RhoPathError("no path from A to the map boundary stays inside A")
    if not reaches_boundary(Bp):
        raise RhoPathError("no path from B' to the map boundary stays inside B'")

    # x: most central A-vertex; u: its most central dual neighbor
    x = min(A, key=lambda v: (np.hypot(*(pos[v] - center)), v))
    dual_nbs = set()
    for a, b in omap.edges:
        if int(a) == x:
            dual_nbs.add(int(b))
        elif int(b) == x:
            dual_nbs.add(int(a))
    dual_nbs = sorted(dual_nbs, key=lambda w: (np.hypot(*(pos[w] - center)), w))
    if not dual_nbs or np.hypot(*(pos[dual_nbs[0]] - center)) >= rho:
        raise RhoPathError(
            f"no dual vertex within radius {rho} next to the central A-vertex; "
            "the construction degenerates")
    u = dual_nbs[0]

    # S_rho: dual BFS inside the open rho-disk
    norms = np.hypot(*(pos - center).T)
    dual_adj = aug.dual_adjacency()
    S = {u}
    stack = [u]
    while stack:
        w = stack.pop()
        for w2 in dual_adj.get(w, ()):
            if w2 not in S and norms[w2] < rho:
                S.add(w2)
                stack.append(w2)

    # cut edges: exactly one dual endpoint in S_rho; all are rho-edges
    cut_adj: dict = {}
    for e, (w1, w2) in enumerate(aug.dual_pairs):
        in1 = int(w1) in S
        in2 = int(w2) in S
        if in1 == in2:
            continue
        if e >= aug.n_core_edges:
            continue  # augmented edges never enter the path
        t = int(net.tails_labels[e])
        h = int(net.heads_labels[e])
        cut_adj.setdefault(t, []).append((h, e))
        cut_adj.setdefault(h, []).append((t, e))

    # multi-source BFS from A; stop at B'; internal vertices avoid A u B'
    sources = sorted(v for v in A if v in cut_adj)
    if not sources:
        raise RhoPathError(
            f"no A-vertex touches the rho-cut (rho={rho}, |S_rho|={len(S)}, "
            f"cut size {sum(len(v) for v in cut_adj.values()) // 2})")
    parent = {v: (None, None) for v in sources}
    queue = list(sources)
    qi = 0
    goal = None
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        if v in Bp:
            goal = v
            break
        for (w, e) in sorted(cut_adj.get(v, [])):
            if w in parent or w in A:  # internal vertices avoid A
                continue
            parent[w] = (v, e)
            queue.append(w)
    if goal is None:
        raise RhoPathError(
            f"no rho-edge path from A to B' (rho={rho}, |S_rho|={len(S)}, "
            f"A-contacts {len(sources)})")
    verts = [goal]
    edges = []
    while parent[verts[-1]][0] is not None:
        v, e = parent[verts[-1]]
        edges.append(e)
        verts.append(v)
    verts.reverse()
    edges.reverse()
    return {"vertices": verts, "edges": edges, "rho": float(rho), "S_size": len(S)}


# ---------------------------------------------------------------------------
# random path flow


def random_path_flow(omap: OrthodiagonalMap, S, T, r1: float, r2: float,
                     m: int = 32, center=(0.0, 0.0), seed: int | None = None,
                     aug: AugmentedDuals | None = None,
                     relax_radius_hypothesis: bool = False) -> FlowReport:
    """Unit flow from S to T averaging indicator flows of rho-edge paths.

    rho runs over a deterministic midpoint quadrature of the 1/t density on
    [r1, r2] in log t (m cells of equal mass); passing a seed replaces the
    grid by m independent samples of the same density for cross-validation.
    """
    eps = omap.mesh_size()
    if r1 < eps or r2 < 2 * r1:
        msg = (f"radii (r1={r1}, r2={r2}) violate r1 >= mesh ({eps:.3g}) or "
               "r2 >= 2 r1; the energy bound may fail")
        if not relax_radius_hypothesis:
            raise GeometryError(msg + " (pass relax_radius_hypothesis=True to proceed)")
        warnings.warn(msg)
    if m < 1:
        raise GeometryError("need at least one quadrature point")
    if aug is None:
        aug = augmented_duals(omap, apex_norm=10 * (r2 + float(np.abs(omap.positions).max()) + 1))
    net = omap.primal_network()

    if seed is None:
        grid = r1 * (r2 / r1) ** ((np.arange(m) + 0.5) / m)
    else:
        rng = np.random.default_rng(seed)
        grid = r1 * (r2 / r1) ** rng.random(m)

    values = np.zeros(net.n_edges)
    failures = []
    paths = []
    for rho in grid:
        try:
            res = rho_path(aug, float(rho), S, T, center=center)
        except RhoPathError as exc:
            failures.append((float(rho), str(exc)))
            continue
        paths.append(res)
        for v, e in zip(res["vertices"][:-1], res["edges"]):
            sign = 1.0 if int(net.tails_labels[e]) == v else -1.0
            values[e] += sign / m
    if failures:
        raise RhoPathError(
            f"{len(failures)} of {m} quadrature radii have no rho-edge path: "
            + ", ".join(f"rho={r:.5g}" for r, _ in failures[:6]))

    theta = EdgeField(net, values)
    s = strength(net, theta, sorted(set(int(v) for v in S)), sorted(set(int(v) for v in T)))
    en = energy(net, theta)
    shape = 1.0 / float(np.log(r2 / r1))
    return FlowReport(
        flow=theta,
        strength=s,
        energy=en,
        bound_shape=shape,
        ratio=en / shape,
        meta={"r1": r1, "r2": r2, "m": m, "rhos": grid.tolist(), "paths": paths},
    )


# ---------------------------------------------------------------------------
# equicontinuity probe


def equicontinuity_probe(omap: OrthodiagonalMap, h: VertexFunction, x: int, y: int,
                         R: float):
    """The three quantities of the discrete-smoothness estimate:
    |h(x)-h(y)|, sqrt(E(h)) / sqrt(log(R/(r+eps))), and the boundary
    oscillation beta over the primal boundary vertices inside the R-disk."""
    pos = omap.positions
    eps = omap.mesh_size()
    r = 0.5 * float(np.hypot(*(pos[x] - pos[y])))
    if R < 2 * r + 3 * eps:
        raise GeometryError(f"R = {R} must be at least 2r + 3 eps = {2 * r + 3 * eps:.6g}")
    center = 0.5 * (pos[x] + pos[y])
    net = h.network
    lhs = abs(h.at(x) - h.at(y))
    en = energy_of_function(net, h)
    denom = float(np.sqrt(np.log(R / (r + eps))))
    rhs_shape = float(np.sqrt(en)) / denom

    bdry_primal, _ = omap.boundary_vertices()
    in_disk = [int(v) for v in bdry_primal
               if np.hypot(*(pos[v] - center)) <= R]
    if in_disk:
        vals = np.array([h.at(v) for v in in_disk])
        beta = float(vals.max() - vals.min())
    else:
        beta = 0.0
    return lhs, rhs_shape, beta
