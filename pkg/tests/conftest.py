import numpy as np
import pytest

import odmap


@pytest.fixture
def diamond():
    return odmap.diamond_map()


@pytest.fixture(scope="session")
def grid16_square():
    return odmap.rotated_grid("square", 16)


@pytest.fixture(scope="session")
def grid32_centered():
    """Rotated grid on the unit square, translated so the center is at 0."""
    g = odmap.rotated_grid("square", 32)
    return odmap.OrthodiagonalMap(g.positions - 0.5, g.primal_mask, g.faces)


@pytest.fixture(scope="session")
def packed500():
    """500-vertex random Delaunay triangulation packed in the disk."""
    tri = odmap.random_delaunay_triangulation(500, seed=1)
    packing = odmap.pack_in_disk(tri, tol=1e-7)
    omap = odmap.orthodiagonal_from_packing(tri, packing)
    return tri, packing, omap


def random_network(rng, max_edges=200):
    """Random connected multigraph with log-uniform conductances."""
    n = int(rng.integers(5, 40))
    tails = []
    heads = []
    for v in range(1, n):
        tails.append(int(rng.integers(0, v)))
        heads.append(v)
    extra = int(rng.integers(0, min(max_edges - (n - 1), 3 * n)))
    for _ in range(extra):
        a, b = rng.integers(0, n, size=2)
        if a == b:
            continue
        tails.append(int(a))
        heads.append(int(b))
    m = len(tails)
    c = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=m))
    return odmap.Network(np.arange(n), np.array(tails), np.array(heads), c)


def central_primal_vertex(omap, target=(0.0, 0.0)):
    pv = omap.primal_vertices
    pos = omap.positions[pv]
    t = np.asarray(target, float)
    return int(pv[np.argmin(np.hypot(pos[:, 0] - t[0], pos[:, 1] - t[1]))])


@pytest.fixture
def concave_fan():
    """Three quads around an interior vertex x whose first face is a dart
    with the reflex corner at x itself (interior angle > pi there), so the
    dual edge must bend through the primal midpoint and its angular
    increment about x differs from the straight chord's by a full turn."""
    pts = np.array([
        [0.0, 0.0],      # 0 x (primal, interior, reflex corner of face 0)
        [-0.5, 0.0],     # 1 far primal corner of the dart
        [0.64, -0.24],   # 2 primal
        [0.64, 0.24],    # 3 primal
        [1.0, 0.8],      # 4 dual w1
        [1.0, -0.8],     # 5 dual w2
        [1.3, 0.0],      # 6 dual w3
    ])
    primal = np.array([1, 1, 1, 1, 0, 0, 0], bool)
    faces = np.array([
        [0, 4, 1, 5],    # dart: covers the angle sector through 180 degrees
        [0, 5, 2, 6],
        [0, 6, 3, 4],
    ])
    return odmap.OrthodiagonalMap(pts, primal, faces)
