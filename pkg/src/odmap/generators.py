"""Map families for experiments: structured grids, constraint-respecting
perturbations, packed triangulations, and domain clipping."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg as sparse_cg

from .core_map import OrthodiagonalMap, blocks, validate
from .domains import DomainSpec, hausdorff_delta, unit_disk, unit_square
from .errors import GeometryError
from .packing import (
    PlanarMap3C,
    Triangulation,
    double_pack,
    orthodiagonal_from_double_packing,
    orthodiagonal_from_packing,
    pack_in_disk,
    triangulation_from_points,
)

__all__ = [
    "DomainSpec", "GeneratorSpec", "unit_disk", "unit_square", "hausdorff_delta",
    "diamond_map", "rotated_grid", "rect_nonuniform", "perturbed", "clip_to_domain",
    "random_delaunay_triangulation", "triangular_disk_triangulation",
    "k4_map", "prism_map", "cube_map", "octahedron_map", "build_generator_level",
]


# ---------------------------------------------------------------------------
# small fixtures


def diamond_map(scale: float = 1.0, center=(0.0, 0.0)) -> OrthodiagonalMap:
    """Four congruent quads around the origin; the smallest interesting map."""
    cx, cy = center
    pts = np.array([
        [0, 0], [2, 0], [0, 2], [-2, 0], [0, -2],   # primal
        [1, 1], [-1, 1], [-1, -1], [1, -1],         # dual
    ], float) * scale + np.array([cx, cy])
    primal = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0], bool)
    faces = np.array([
        [0, 8, 1, 5],
        [0, 5, 2, 6],
        [0, 6, 3, 7],
        [0, 7, 4, 8],
    ])
    return OrthodiagonalMap(pts, primal, faces)


def two_diamonds_sharing_vertex() -> OrthodiagonalMap:
    """Two diamond maps glued at one primal vertex (non-simple boundary)."""
    m1 = diamond_map()
    pts = [tuple(p) for p in m1.positions]
    primal = list(m1.primal_mask)
    index = {p: i for i, p in enumerate(pts)}
    faces = [list(f) for f in m1.faces]
    shift = np.array([4.0, 0.0])
    m2 = diamond_map(center=(4.0, 0.0))
    remap = {}
    for i, p in enumerate(m2.positions):
        key = tuple(p)
        if key in index:
            remap[i] = index[key]
        else:
            index[key] = len(pts)
            pts.append(key)
            primal.append(m2.primal_mask[i])
            remap[i] = index[key]
    for f in m2.faces:
        faces.append([remap[int(v)] for v in f])
    return OrthodiagonalMap(np.array(pts), np.array(primal, bool), np.array(faces, int))


# ---------------------------------------------------------------------------
# structured grids


def _lattice_map(face_centers, n: float) -> OrthodiagonalMap:
    """Map whose faces are the diamonds around the given lattice centers."""
    verts = {}
    faces = []

    def vid(i, j):
        if (i, j) not in verts:
            verts[(i, j)] = len(verts)
        return verts[(i, j)]

    for (p, q) in face_centers:
        e = (p + 1, q)
        nn = (p, q + 1)
        w = (p - 1, q)
        s = (p, q - 1)
        corners = [e, nn, w, s]
        # v1 must be primal: even first coordinate
        if e[0] % 2 != 0:
            corners = [nn, w, s, e]
        faces.append([vid(*c) for c in corners])

    idx = np.array(list(verts.keys()), float)
    positions = idx / n
    primal = (np.array([k[0] for k in verts], int) % 2) == 0
    omap = OrthodiagonalMap(positions, primal, np.array(faces, int))
    bl = blocks(omap)
    if not bl:
        raise GeometryError("no faces survive clipping; increase n")
    return bl[0]


def rotated_grid(domain: DomainSpec | str, n: int) -> OrthodiagonalMap:
    """45-degree rotated square lattice clipped to the domain.

    All faces are congruent squares with axis-parallel diagonals of length
    2/n; the edge length (mesh size) is sqrt(2)/n and every conductance is 1.
    """
    if isinstance(domain, str):
        domain = DomainSpec(domain)
    if n < 2:
        raise GeometryError("need n >= 2")
    if domain.kind == "square":
        lo_i, hi_i = 0, n
        lo_j, hi_j = 0, n
    else:
        lo, hi = domain.bounding_box()
        lo_i, lo_j = np.floor(lo * n).astype(int)
        hi_i, hi_j = np.ceil(hi * n).astype(int)
    centers = []
    for p in range(lo_i + 1, hi_i):
        for q in range(lo_j + 1, hi_j):
            if (p + q) % 2 != 0:
                continue
            quad = np.array([[p + 1, q], [p, q + 1], [p - 1, q], [p, q - 1]], float) / n
            if domain.kind == "square":
                ok = np.all((quad >= -1e-12) & (quad <= 1.0 + 1e-12))
            else:
                ok = domain.face_inside(quad)
            if ok:
                centers.append((p, q))
    return _lattice_map(centers, float(n))


def rect_nonuniform(x_cuts, y_cuts) -> OrthodiagonalMap:
    """Rectangle mesh with primal vertices at grid corners and dual vertices
    at cell centers; diagonals are the axis-parallel segments, so unequal
    cut spacings produce genuinely heterogeneous conductances."""
    x = np.asarray(x_cuts, float)
    y = np.asarray(y_cuts, float)
    if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
        raise GeometryError("cut sequences must be strictly increasing")
    p, q = len(x) - 1, len(y) - 1
    if p < 1 or q < 1:
        raise GeometryError("need at least one cell per direction")

    corners = {}
    centers = {}
    positions = []
    primal = []

    def corner(i, j):
        if (i, j) not in corners:
            corners[(i, j)] = len(positions)
            positions.append([x[i], y[j]])
            primal.append(True)
        return corners[(i, j)]

    def center(i, j):
        if (i, j) not in centers:
            centers[(i, j)] = len(positions)
            positions.append([(x[i] + x[i + 1]) / 2, (y[j] + y[j + 1]) / 2])
            primal.append(False)
        return centers[(i, j)]

    faces = []
    # vertical interior grid edges: quad [bottom, right center, top, left center]
    for i in range(1, p):
        for j in range(q):
            faces.append([corner(i, j), center(i, j), corner(i, j + 1), center(i - 1, j)])
    # horizontal interior grid edges: quad [left, below center, right, above center]
    for j in range(1, q):
        for i in range(p):
            faces.append([corner(i, j), center(i, j - 1), corner(i + 1, j), center(i, j)])
    if not faces:
        raise GeometryError("mesh has no interior grid edges; refine the cuts")

    omap = OrthodiagonalMap(np.array(positions), np.array(primal, bool), np.array(faces, int))
    return blocks(omap)[0]


# ---------------------------------------------------------------------------
# constraint-respecting perturbation


def perturbed(base: OrthodiagonalMap, amplitude: float, seed: int = 0,
              max_tries: int = 20) -> OrthodiagonalMap:
    """Random orthogonality-preserving displacement of the dual vertices.

    Moving a dual vertex w is admissible only along directions orthogonal to
    the primal diagonals of every face containing w, and the moves of the two
    dual endpoints of a face are coupled; the set of admissible displacement
    fields is the null space of one linear constraint per face.  A random
    element of that null space is sampled and scaled so no dual vertex moves
    farther than amplitude * mesh.  amplitude = 0 returns the base map.
    """
    if amplitude == 0:
        return base
    eps = base.mesh_size()
    duals = base.dual_vertices
    dual_pos = {int(v): k for k, v in enumerate(duals)}
    nd = len(duals)
    p = base.positions
    f = base.faces

    rows_i, cols_j, vals = [], [], []
    for i, face in enumerate(f):
        t = p[face[2]] - p[face[0]]
        w1, w2 = dual_pos[int(face[1])], dual_pos[int(face[3])]
        # (d_{w2} - d_{w1}) . t = 0
        rows_i += [i, i, i, i]
        cols_j += [2 * w2, 2 * w2 + 1, 2 * w1, 2 * w1 + 1]
        vals += [t[0], t[1], -t[0], -t[1]]
    A = sp.csr_matrix((vals, (rows_i, cols_j)), shape=(len(f), 2 * nd))

    rng = np.random.default_rng(seed)
    scale = float(amplitude)
    for _ in range(max_tries):
        g = rng.standard_normal(2 * nd)
        # project g onto null(A):  d = g - A^T (A A^T)^+ (A g)
        AAt = (A @ A.T).tocsr()
        rhs = A @ g
        y, _ = sparse_cg(AAt, rhs, rtol=1e-13, atol=1e-14, maxiter=20 * len(f))
        d = g - A.T @ y
        disp = d.reshape(nd, 2)
        mx = np.abs(disp).max()
        if mx < 1e-12:
            warnings.warn("base map admits no dual-vertex perturbation; returning base")
            return base
        disp = disp * (scale * eps / mx)
        new_pos = p.copy()
        new_pos[duals] += disp
        cand = OrthodiagonalMap(new_pos, base.primal_mask.copy(), base.faces.copy(),
                                ids=base.ids.copy())
        if validate(cand, tol=1e-9).passed:
            return cand
        scale *= 0.5
    raise GeometryError("could not find a valid perturbation; amplitude too large")


# ---------------------------------------------------------------------------
# clipping to a domain


def clip_to_domain(omap: OrthodiagonalMap, domain: DomainSpec, buffer: float = 0.0) -> list:
    """Keep the faces whose closure sits inside the domain at distance at
    least ``buffer`` from its boundary, and return the blocks of the kept
    subgraph (largest first).  An empty list means nothing survived."""
    keep = []
    for i in range(omap.n_faces):
        quad = omap.face_polygon(i)
        if not domain.face_inside(quad):
            continue
        if buffer > 0 and domain.face_distance(quad) < buffer:
            continue
        keep.append(i)
    if not keep:
        return []
    return blocks(omap.submap(keep))


# ---------------------------------------------------------------------------
# triangulation sources for the packing families


def random_delaunay_triangulation(n_points: int, seed: int = 0) -> Triangulation:
    """Delaunay triangulation of seeded uniform points in the unit disk."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(n_points))
    t = 2 * np.pi * rng.random(n_points)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return triangulation_from_points(pts)


def triangular_disk_triangulation(rows: int) -> Triangulation:
    """Triangular-lattice triangulation clipped to the unit disk.

    ``rows`` controls resolution (lattice spacing ~ 2/rows); the boundary
    hugs the circle, which makes these good disk approximants.
    """
    s = 2.0 / rows
    pts = []
    index = {}
    jmax = int(np.ceil(1.0 / (s * np.sqrt(3) / 2))) + 2
    imax = int(np.ceil(1.0 / s)) + 2
    for j in range(-jmax, jmax + 1):
        y = j * s * np.sqrt(3) / 2
        off = 0.5 * s if j % 2 else 0.0
        for i in range(-imax, imax + 1):
            x = i * s + off
            index[(i, j)] = len(pts)
            pts.append([x, y])
    pts = np.array(pts)
    inside = np.hypot(pts[:, 0], pts[:, 1]) <= 1.0
    faces = []
    for j in range(-jmax, jmax):
        for i in range(-imax, imax):
            # two triangles per lattice cell; neighbor pattern depends on row parity
            if j % 2 == 0:
                tris = [
                    (index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]),
                    (index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]),
                ]
            else:
                tris = [
                    (index[(i, j)], index[(i + 1, j)], index[(i + 1, j + 1)]),
                    (index[(i, j)], index[(i + 1, j + 1)], index[(i, j + 1)]),
                ]
            for tri in tris:
                if all(inside[v] for v in tri):
                    faces.append(tri)
    if not faces:
        raise GeometryError("no triangles survive the disk clip; increase rows")
    faces = np.array(faces, int)
    for k, fc in enumerate(faces):
        a, b, c = pts[fc]
        if (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0] < 0:
            faces[k] = fc[::-1]
    # keep the largest edge-connected component of triangles
    edge_faces: dict = {}
    for k, fc in enumerate(faces):
        for a, b in ((fc[0], fc[1]), (fc[1], fc[2]), (fc[2], fc[0])):
            edge_faces.setdefault((min(a, b), max(a, b)), []).append(k)
    comp = -np.ones(len(faces), int)
    cid = 0
    for start in range(len(faces)):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = cid
        while stack:
            cur = stack.pop()
            fc = faces[cur]
            for a, b in ((fc[0], fc[1]), (fc[1], fc[2]), (fc[2], fc[0])):
                for other in edge_faces[(min(a, b), max(a, b))]:
                    if comp[other] < 0:
                        comp[other] = cid
                        stack.append(other)
        cid += 1
    best = np.argmax(np.bincount(comp))
    faces = faces[comp == best]
    used = np.unique(faces)
    remap = -np.ones(len(pts), int)
    remap[used] = np.arange(len(used))
    return Triangulation(len(used), remap[faces], positions=pts[used]).validate()


def single_interior_triangulation() -> Triangulation:
    """Three boundary vertices around one interior vertex of degree 3."""
    faces = np.array([[0, 1, 3], [1, 2, 3], [2, 0, 3]])
    return Triangulation(4, faces).validate()


def bare_triangle_triangulation() -> Triangulation:
    return Triangulation(3, np.array([[0, 1, 2]])).validate()


# ---------------------------------------------------------------------------
# 3-connected planar map fixtures


def k4_map() -> PlanarMap3C:
    return PlanarMap3C(4, [[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]])


def prism_map() -> PlanarMap3C:
    return PlanarMap3C(6, [
        [0, 2, 1],            # outer
        [0, 1, 4, 3],
        [1, 2, 5, 4],
        [2, 0, 3, 5],
        [3, 4, 5],
    ])


def cube_map() -> PlanarMap3C:
    return PlanarMap3C(8, [
        [0, 3, 2, 1],         # outer (bottom)
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ])


def octahedron_map() -> PlanarMap3C:
    return PlanarMap3C(6, [
        [0, 2, 1],            # outer
        [0, 1, 4],
        [1, 2, 5],
        [2, 0, 3],
        [0, 4, 3],
        [1, 5, 4],
        [2, 3, 5],
        [3, 4, 5],
    ])


# ---------------------------------------------------------------------------
# generator specs (CLI / sweep front end)


@dataclass
class GeneratorSpec:
    """Declarative description of a map family for sweeps and the CLI."""

    family: str
    n: int = 8
    seed: int = 0
    domain: str = "square"
    params: dict = field(default_factory=dict)

    def domain_spec(self) -> DomainSpec:
        if self.domain == "disk":
            return unit_disk()
        if self.domain == "square":
            return unit_square()
        raise GeometryError(f"unknown domain {self.domain!r}")

    def to_json_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "seed": self.seed,
                "domain": self.domain, "params": self.params}


def build_generator_level(spec: GeneratorSpec, n: int | None = None):
    """Build one map of the family at size n; returns (map, domain)."""
    n = spec.n if n is None else n
    fam = spec.family
    if fam == "rotated_grid":
        dom = spec.domain_spec()
        return rotated_grid(dom, n), dom
    if fam == "rect_nonuniform":
        rng = np.random.default_rng(spec.seed)
        jitter = spec.params.get("jitter", 0.3)
        x = _jittered_cuts(n, jitter, rng)
        y = _jittered_cuts(n, jitter, rng)
        return rect_nonuniform(x, y), unit_square()
    if fam == "perturbed":
        dom = spec.domain_spec()
        base = rotated_grid(dom, n)
        amp = spec.params.get("amplitude", 0.3)
        return perturbed(base, amp, seed=spec.seed), dom
    if fam == "packed_triangulation":
        tri = random_delaunay_triangulation(n, seed=spec.seed)
        packing = pack_in_disk(tri, tol=spec.params.get("tol", 1e-7))
        return orthodiagonal_from_packing(tri, packing), unit_disk()
    if fam == "packed_lattice":
        tri = triangular_disk_triangulation(n)
        packing = pack_in_disk(tri, tol=spec.params.get("tol", 1e-7))
        return orthodiagonal_from_packing(tri, packing), unit_disk()
    if fam == "double_packed":
        shape = spec.params.get("shape", "cube")
        builders = {"k4": k4_map, "prism": prism_map, "cube": cube_map,
                    "octahedron": octahedron_map}
        if shape not in builders:
            raise GeometryError(f"unknown double_packed shape {shape!r}")
        h = builders[shape]()
        dp = double_pack(h, outer_face=0, tol=spec.params.get("tol", 1e-8))
        return orthodiagonal_from_double_packing(h, dp), unit_disk()
    raise GeometryError(f"unknown family {fam!r}")


def _jittered_cuts(n: int, jitter: float, rng) -> np.ndarray:
    cuts = np.linspace(0.0, 1.0, n + 1)
    inner = cuts[1:-1] + jitter * (rng.random(n - 1) - 0.5) / n
    return np.concatenate([[0.0], np.sort(inner), [1.0]])
