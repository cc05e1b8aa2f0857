import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import odmap
from odmap.network import (
    DirichletProblem,
    EdgeField,
    bfs_spanning_tree,
    cycle_law_residuals,
    dirichlet_thomson_check,
    discrete_gradient,
    energy,
    energy_of_function,
    gap,
    harmonic_extension,
    harmonic_residuals,
    inner_r,
    project_to_current,
    random_walk_exit_measure,
    sandwich_check,
    star_cycle_decomposition,
    strength,
)

from conftest import random_network


def path_network(conductances):
    n = len(conductances) + 1
    return odmap.Network(np.arange(n), np.arange(n - 1), np.arange(1, n),
                         np.asarray(conductances, float))


def grid_network(n):
    """(n+1) x (n+1) unit-conductance grid graph with labels row*(n+1)+col."""
    tails, heads = [], []
    for i in range(n + 1):
        for j in range(n + 1):
            v = i * (n + 1) + j
            if j < n:
                tails.append(v)
                heads.append(v + 1)
            if i < n:
                tails.append(v)
                heads.append(v + n + 1)
    m = len(tails)
    return odmap.Network(np.arange((n + 1) ** 2), tails, heads, np.ones(m))


def grid_boundary_labels(n):
    out = []
    for i in range(n + 1):
        for j in range(n + 1):
            if i in (0, n) or j in (0, n):
                out.append(i * (n + 1) + j)
    return out


# ---------------------------------------------------------------------------
# gradient and energy


def test_gradient_path():
    net = path_network([1.0, 1.0])
    g = discrete_gradient(net, np.array([0.0, 0.75, 1.0]))
    assert np.allclose(g.values, [0.75, 0.25])


def test_gradient_constant_is_zero():
    net = path_network([2.0, 5.0, 0.3])
    g = discrete_gradient(net, np.full(4, 3.7))
    assert np.allclose(g.values, 0.0)


def test_gradient_coordinate_on_diamond(diamond):
    net = diamond.primal_network()
    f = diamond.positions[net.labels, 0]
    g = discrete_gradient(net, f)
    vals = sorted(np.round(g.values, 12))
    assert vals == [-2.0, 0.0, 0.0, 2.0]


def test_energy_single_edge():
    net = odmap.Network([0, 1], [0], [1], [2.0])
    assert energy_of_function(net, np.array([0.0, 3.0])) == pytest.approx(18.0)


def test_energy_path_series():
    net = path_network([1.0, 3.0])
    h = harmonic_extension(DirichletProblem(net, {0: 0.0, 2: 1.0}))
    assert energy_of_function(net, h) == pytest.approx(0.75)


def test_energy_triangle_inequality_spot():
    rng = np.random.default_rng(0)
    net = random_network(rng)
    for _ in range(20):
        th = net.field(rng.standard_normal(net.n_edges))
        ph = net.field(rng.standard_normal(net.n_edges))
        assert energy(net, th + ph) <= 2 * energy(net, th) + 2 * energy(net, ph) + 1e-12


@given(s=st.floats(-10, 10, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_energy_scaling(s):
    rng = np.random.default_rng(7)
    net = random_network(rng)
    th = net.field(rng.standard_normal(net.n_edges))
    assert energy(net, s * th) == pytest.approx(s * s * energy(net, th), rel=1e-12, abs=1e-12)


@given(c=st.lists(st.floats(0.05, 20.0), min_size=3, max_size=3),
       g0=st.floats(-5, 5), g2=st.floats(-5, 5))
@settings(max_examples=40, deadline=None)
def test_strength_gap_inequality_hypothesis(c, g0, g2):
    # a triangle network with arbitrary weights and boundary data: the
    # strength-gap product never beats the energy product
    import warnings

    net = odmap.Network([0, 1, 2], [0, 1, 2], [1, 2, 0], np.array(c))
    prob = DirichletProblem(net, {0: g0, 2: g2})
    h = harmonic_extension(prob)
    theta = discrete_gradient(net, h)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # negative-gap cases are flagged vacuous
        lhs, rhs = dirichlet_thomson_check(net, theta, h.values, [0], [2])
    assert lhs <= rhs + 1e-9 * (1 + abs(rhs))


@given(vals=st.lists(st.floats(-100, 100), min_size=2, max_size=2))
@settings(max_examples=30, deadline=None)
def test_field_antisymmetry_semantics(vals):
    net = path_network([2.0])
    f = np.array(vals)
    th = discrete_gradient(net, f)
    # reversing the function reverses the field; energy is orientation-free
    rev = discrete_gradient(net, f[::-1].copy())
    assert rev.values[0] == pytest.approx(-th.values[0], rel=1e-12, abs=1e-12)
    assert energy(net, rev) == pytest.approx(energy(net, th), rel=1e-12, abs=1e-12)


def test_inner_product_symmetric():
    rng = np.random.default_rng(3)
    net = random_network(rng)
    th = net.field(rng.standard_normal(net.n_edges))
    ph = net.field(rng.standard_normal(net.n_edges))
    assert inner_r(th, ph) == pytest.approx(inner_r(ph, th), rel=1e-13)


# ---------------------------------------------------------------------------
# harmonic extension


def test_harmonic_extension_path_examples():
    net = path_network([1.0, 1.0])
    h = harmonic_extension(DirichletProblem(net, {0: 0.0, 2: 1.0}))
    assert h.at(1) == pytest.approx(0.5)
    net = path_network([1.0, 3.0])
    h = harmonic_extension(DirichletProblem(net, {0: 0.0, 2: 1.0}))
    assert h.at(1) == pytest.approx(0.75)


def test_harmonic_extension_dense_oracle():
    net = grid_network(4)
    b = grid_boundary_labels(4)
    vals = {v: (v % 5) ** 2 - (v // 5) ** 2 for v in b}
    prob = DirichletProblem(net, {k: float(v) for k, v in vals.items()})
    h = harmonic_extension(prob)
    L = net.laplacian.toarray()
    I, B = prob.interior_idx, prob.boundary_idx
    x = np.linalg.solve(L[np.ix_(I, I)], -L[np.ix_(I, B)] @ prob.boundary_vals)
    assert np.abs(h.values[I] - x).max() <= 1e-10


def test_harmonic_extension_residuals_and_max_principle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        net = random_network(rng)
        b = sorted(rng.choice(net.n_vertices, size=max(2, net.n_vertices // 4),
                              replace=False).tolist())
        g = {int(v): float(rng.standard_normal()) for v in b}
        prob = DirichletProblem(net, g)
        h = harmonic_extension(prob)
        gmax = max(g.values())
        gmin = min(g.values())
        assert np.all(h.values <= gmax + 1e-10)
        assert np.all(h.values >= gmin - 1e-10)
        res = harmonic_residuals(prob, h)
        pi = net.pi[prob.interior_idx]
        ginf = max(abs(gmax), abs(gmin)) + 1e-30
        assert np.all(np.abs(res) <= 1e-9 * pi * ginf)


def test_harmonic_extension_uniqueness():
    rng = np.random.default_rng(4)
    net = random_network(rng)
    b = [0, net.n_vertices - 1]
    g = {0: 1.3, net.n_vertices - 1: -0.4}
    h1 = harmonic_extension(DirichletProblem(net, g))
    h2 = harmonic_extension(DirichletProblem(net, dict(reversed(list(g.items())))))
    assert np.abs(h1.values - h2.values).max() <= 1e-9 * 1.3


def test_empty_interior_returns_boundary():
    net = path_network([1.0])
    h = harmonic_extension(DirichletProblem(net, {0: 2.0, 1: 5.0}))
    assert np.allclose(h.values, [2.0, 5.0])


def test_disconnected_network_raises():
    net = odmap.Network([0, 1, 2, 3], [0, 2], [1, 3], [1.0, 1.0])
    with pytest.raises(odmap.DisconnectedNetworkError):
        harmonic_extension(DirichletProblem(net, {0: 0.0}))


# ---------------------------------------------------------------------------
# Kirchhoff laws


def test_gradient_satisfies_cycle_law():
    rng = np.random.default_rng(8)
    for _ in range(10):
        net = random_network(rng)
        f = rng.standard_normal(net.n_vertices)
        res = cycle_law_residuals(net, discrete_gradient(net, f))
        if len(res):
            assert np.abs(res).max() <= 1e-12 * (1 + np.abs(f).max())


def test_node_law_residuals_characterize_flows():
    from odmap.network import node_law_residuals

    net = grid_network(3)
    b = grid_boundary_labels(3)
    prob = DirichletProblem(net, {v: float(v % 4) for v in b})
    h = harmonic_extension(prob)
    theta = discrete_gradient(net, h)
    interior = [int(net.labels[i]) for i in prob.interior_idx]
    res = node_law_residuals(net, theta, interior)
    assert np.abs(res).max() <= 1e-10
    # a generic gradient is not a flow at interior vertices
    rng = np.random.default_rng(0)
    bad = discrete_gradient(net, rng.standard_normal(net.n_vertices))
    assert np.abs(node_law_residuals(net, bad, interior)).max() > 1e-3


def test_star_inner_product_is_net_outflow():
    rng = np.random.default_rng(9)
    net = random_network(rng)
    th = net.field(rng.standard_normal(net.n_edges))
    for v in range(min(net.n_vertices, 6)):
        out = inner_r(th, net.star(v))
        assert out == pytest.approx(th.divergence()[net.index_of(v)], rel=1e-10, abs=1e-12)


def test_cycle_residual_triangle():
    net = odmap.Network([0, 1, 2], [0, 1, 2], [1, 2, 0], [1.0, 2.0, 4.0])
    th = net.field([0.3, -1.1, 0.7])
    res = cycle_law_residuals(net, th)
    assert len(res) == 1
    # direct r-weighted sum around the directed triangle
    direct = 1.0 * 0.3 + 0.5 * (-1.1) + 0.25 * 0.7
    assert res[0] == pytest.approx(direct, rel=1e-12) or res[0] == pytest.approx(-direct, rel=1e-12)


def test_star_derivative_lemma():
    # c df + sum_x f(x) star_x = 0
    rng = np.random.default_rng(12)
    for _ in range(5):
        net = random_network(rng)
        f = rng.standard_normal(net.n_vertices)
        total = discrete_gradient(net, f)
        for v in range(net.n_vertices):
            total = total + f[v] * net.star(v)
        assert np.abs(total.values).max() <= 1e-10 * (1 + np.abs(f).max())


def test_flow_inner_product_lemma():
    # (theta, c df)_r = sum_{x notin U} f(x) * net inflow at x
    rng = np.random.default_rng(13)
    for _ in range(10):
        net = random_network(rng)
        b = sorted(rng.choice(net.n_vertices, size=max(2, net.n_vertices // 3),
                              replace=False).tolist())
        g = {int(v): float(rng.standard_normal()) for v in b}
        prob = DirichletProblem(net, g)
        h = harmonic_extension(prob)
        theta = discrete_gradient(net, h)  # flow on U
        f = rng.standard_normal(net.n_vertices)
        lhs = inner_r(theta, discrete_gradient(net, f))
        div = theta.divergence()
        rhs = sum(f[net.index_of(v)] * (-div[net.index_of(v)]) for v in b)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


# ---------------------------------------------------------------------------
# strength and gap


def test_strength_on_path_flow():
    net = path_network([1.0, 3.0])
    h = harmonic_extension(DirichletProblem(net, {0: 0.0, 2: 1.0}))
    th = discrete_gradient(net, h)
    assert strength(net, th, [0], [2]) == pytest.approx(0.75)
    assert strength(net, 4.0 * th, [0], [2]) == pytest.approx(3.0)


def test_gap_on_grid():
    net = grid_network(3)
    f = np.array([v % 4 for v in range(16)], float)  # x coordinate
    left = [v for v in range(16) if v % 4 == 0]
    right = [v for v in range(16) if v % 4 == 3]
    assert gap(net, f, left, right) == pytest.approx(3.0)


def test_overlapping_sets_rejected():
    net = path_network([1.0, 1.0])
    with pytest.raises(odmap.StructuralError):
        gap(net, np.zeros(3), [0, 1], [1, 2])


# ---------------------------------------------------------------------------
# projection, sandwich, Dirichlet-Thomson


def test_projection_fixed_point():
    net = path_network([1.0, 3.0])
    prob = DirichletProblem(net, {0: 0.0, 2: 1.0})
    h = harmonic_extension(prob)
    out = project_to_current(prob, h)
    assert np.allclose(out.values, discrete_gradient(net, h).values, atol=1e-12)


def test_projection_x_squared_on_path():
    net = path_network([1.0, 1.0])
    f = np.array([0.0, 1.0, 4.0])  # x^2 at x = 0, 1, 2
    prob = DirichletProblem(net, {0: 0.0, 2: 4.0})
    out = project_to_current(prob, f)
    assert np.allclose(out.values, [2.0, 2.0], atol=1e-10)  # linear interpolation


def test_projection_decreases_energy_and_is_orthogonal():
    rng = np.random.default_rng(21)
    net = grid_network(3)
    b = grid_boundary_labels(3)
    f = rng.standard_normal(net.n_vertices)
    prob = DirichletProblem(net, {v: float(f[net.index_of(v)]) for v in b})
    out = project_to_current(prob, f)
    cdf = discrete_gradient(net, f)
    assert energy(net, out) <= energy_of_function(net, f) + 1e-12
    assert abs(inner_r(cdf - out, out)) <= 1e-9 * (1 + energy(net, out))


def test_sandwich_identity_cases():
    net = grid_network(4)
    b = grid_boundary_labels(4)
    rng = np.random.default_rng(5)
    f = rng.standard_normal(net.n_vertices)
    prob = DirichletProblem(net, {v: float(f[net.index_of(v)]) for v in b})
    h = harmonic_extension(prob)
    cdh = discrete_gradient(net, h)

    # theta = c dh exactly: middle term 0, first = third
    e1, e2, e3 = sandwich_check(prob, f, cdh)
    assert e2 <= 1e-18 * (1 + e3)
    assert e1 == pytest.approx(e3, rel=1e-10)

    # f = h: first term 0, second = third
    theta = cdh + _random_cycle_field(net, rng, 0.5)
    e1, e2, e3 = sandwich_check(prob, h.values, theta)
    assert e1 <= 1e-16 * (1 + e3)
    assert e2 == pytest.approx(e3, rel=1e-8)

    # random admissible pair: full Pythagoras identity
    f2 = h.values.copy()
    for i in prob.interior_idx:
        f2[i] += rng.standard_normal()
    e1, e2, e3 = sandwich_check(prob, f2, theta)
    assert e1 + e2 == pytest.approx(e3, rel=1e-8)


def _tree_path_edges(net, parent, parent_edge, parent_sign, order, t, h):
    """Edges of the tree path h -> t as (vertex, edge index, sign along path)."""
    depth = {order[0]: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v]] + 1
    a, b = int(h), int(t)
    path_a = []
    path_b = []
    while depth[a] > depth[b]:
        path_a.append((a, parent_edge[a], -parent_sign[a]))
        a = parent[a]
    while depth[b] > depth[a]:
        path_b.append((b, parent_edge[b], parent_sign[b]))
        b = parent[b]
    while a != b:
        path_a.append((a, parent_edge[a], -parent_sign[a]))
        a = parent[a]
        path_b.append((b, parent_edge[b], parent_sign[b]))
        b = parent[b]
    return path_a + path_b[::-1]


def _fundamental_cycle_field(net, parent, parent_edge, parent_sign, order, e):
    """chi of the fundamental cycle of non-tree edge e (flow at every vertex)."""
    vals = np.zeros(net.n_edges)
    vals[e] = 1.0
    for _, eidx, sgn in _tree_path_edges(net, parent, parent_edge, parent_sign,
                                         order, net.tails[e], net.heads[e]):
        vals[eidx] += sgn
    return EdgeField(net, vals)


def _random_cycle_field(net, rng, scale):
    """Random element of the cycle space (a flow at every vertex)."""
    parent, parent_edge, parent_sign, order = bfs_spanning_tree(net)
    tree = set(int(e) for e in parent_edge if e >= 0)
    field = EdgeField(net, np.zeros(net.n_edges))
    for e in range(net.n_edges):
        if e in tree:
            continue
        coeff = scale * rng.standard_normal()
        field = field + coeff * _fundamental_cycle_field(net, parent, parent_edge,
                                                         parent_sign, order, e)
    return field


def test_dirichlet_thomson_equality_case():
    net = path_network([1.0, 3.0])
    prob = DirichletProblem(net, {0: 0.0, 2: 1.0})
    h = harmonic_extension(prob)
    th = discrete_gradient(net, h)
    lhs, rhs = dirichlet_thomson_check(net, th, h.values, [0], [2])
    assert lhs == pytest.approx(0.75)
    assert rhs == pytest.approx(0.75)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_dirichlet_thomson_random_networks():
    rng = np.random.default_rng(42)
    for _ in range(30):
        net = random_network(rng)
        labels = list(range(net.n_vertices))
        rng.shuffle(labels)
        ka = max(1, net.n_vertices // 5)
        kb = max(1, net.n_vertices // 5)
        A = labels[:ka]
        B = labels[ka:ka + kb]
        g = {**{int(a): 0.0 for a in A}, **{int(b): 1.0 for b in B}}
        prob = DirichletProblem(net, g)
        h = harmonic_extension(prob)
        theta = discrete_gradient(net, h) + _random_cycle_field(net, rng, 0.3)
        f = h.values.copy()
        for i in prob.interior_idx:
            f[i] += 0.2 * rng.standard_normal()
        lhs, rhs = dirichlet_thomson_check(net, theta, f, A, B)
        assert lhs <= rhs + 1e-10 * (1 + abs(rhs))


# ---------------------------------------------------------------------------
# star / cycle decomposition


def test_fully_harmonic_gradient_vanishes():
    # only constants are harmonic everywhere, so theta = c d(const) = 0
    net = grid_network(2)
    th = discrete_gradient(net, np.full(net.n_vertices, 2.5))
    s, c = star_cycle_decomposition(net, th)
    assert np.abs(s.values).max() <= 1e-14
    assert np.abs(c.values).max() <= 1e-14


def test_cycle_field_has_no_star_part():
    net = odmap.Network([0, 1, 2], [0, 1, 2], [1, 2, 0], [1.0, 2.0, 4.0])
    th = net.field([1.0, 1.0, 1.0])  # directed triangle indicator
    s, c = star_cycle_decomposition(net, th)
    assert np.abs(s.values).max() <= 1e-12
    assert np.allclose(c.values, th.values, atol=1e-12)


def test_decomposition_recomposes_and_is_orthogonal():
    rng = np.random.default_rng(77)
    net = grid_network(3)
    th = net.field(rng.standard_normal(net.n_edges))
    s, c = star_cycle_decomposition(net, th)
    assert np.abs((s + c - th).values).max() <= 1e-10
    assert abs(inner_r(s, c)) <= 1e-9 * (1 + energy(net, th))
    # star part satisfies the cycle law; cycle part satisfies node law
    assert np.abs(cycle_law_residuals(net, s)).max() <= 1e-9
    assert np.abs(c.divergence()).max() <= 1e-9


def test_subspace_dimensions_by_rank():
    rng = np.random.default_rng(5)
    for _ in range(5):
        net = random_network(rng)
        stars = np.array([net.star(v).values for v in range(net.n_vertices)])
        assert np.linalg.matrix_rank(stars, tol=1e-9) == net.n_vertices - 1
        # fundamental cycles
        parent, parent_edge, parent_sign, order = bfs_spanning_tree(net)
        tree = set(int(e) for e in parent_edge if e >= 0)
        cycles = []
        for e in range(net.n_edges):
            if e in tree:
                continue
            cycles.append(_fundamental_cycle_field(net, parent, parent_edge,
                                                   parent_sign, order, e).values)
        expected = net.n_edges - net.n_vertices + 1
        if cycles:
            assert np.linalg.matrix_rank(np.array(cycles), tol=1e-9) == expected
        else:
            assert expected == 0


# ---------------------------------------------------------------------------
# exit measure


def test_exit_measure_diamond_uniform(diamond):
    net = diamond.primal_network()
    prob = DirichletProblem(net, {v: 0.0 for v in [1, 2, 3, 4]})
    mu = random_walk_exit_measure(prob, 0)
    assert set(mu) == {1, 2, 3, 4}
    for v in mu:
        assert mu[v] == pytest.approx(0.25, abs=1e-12)
    assert sum(mu.values()) == pytest.approx(1.0, abs=1e-12)


def test_exit_measure_weighted_path():
    net = path_network([1.0, 3.0])
    prob = DirichletProblem(net, {0: 0.0, 2: 0.0})
    mu = random_walk_exit_measure(prob, 1)
    assert mu[2] == pytest.approx(0.75, abs=1e-12)


def test_exit_measure_sampled_matches_exact():
    net = grid_network(8)
    b = grid_boundary_labels(8)
    prob = DirichletProblem(net, {v: 0.0 for v in b})
    start = 4 * 9 + 4  # center
    exact = random_walk_exit_measure(prob, start)
    n = 100_000
    sampled = random_walk_exit_measure(prob, start, n_samples=n, seed=123)
    for v in exact:
        p = exact[v]
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(sampled.get(v, 0.0) - p) <= 3 * sigma + 1e-4
