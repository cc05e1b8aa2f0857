"""Electric networks: flows, energies, harmonic extension, and the
star/cycle calculus.

A network is a finite weighted multigraph.  Edges are stored with a fixed
reference orientation (tail -> head); an :class:`EdgeField` holds one value
per edge under that orientation and is antisymmetric by convention, i.e. its
value on the reversed edge is the negation.  The inner product is

    (theta, phi)_r = sum_e r(e) theta(e) phi(e)      (sum over undirected edges)

which matches the half-sum over directed edges.  Current is oriented from
lower to higher voltage: the discrete gradient is c df(e) = c(e) [f(head) -
f(tail)].
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DisconnectedNetworkError, StructuralError


class Network:
    """Weighted multigraph with positive conductances.

    ``labels`` are caller-facing vertex names (e.g. map vertex indices);
    internally vertices are dense 0..n-1.  Parallel edges are kept distinct.
    Immutable after construction.
    """

    def __init__(self, labels, tails, heads, conductances, positions=None):
        self.labels = np.asarray(labels).reshape(-1)
        self._index = {int(l): i for i, l in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise StructuralError("duplicate vertex labels")
        tails = np.asarray(tails).reshape(-1)
        heads = np.asarray(heads).reshape(-1)
        self.tails = np.array([self._index[int(t)] for t in tails], int)
        self.heads = np.array([self._index[int(h)] for h in heads], int)
        self.conductances = np.asarray(conductances, float).reshape(-1)
        if not (len(self.tails) == len(self.heads) == len(self.conductances)):
            raise StructuralError("edge arrays disagree in length")
        if np.any(self.conductances <= 0) or not np.all(np.isfinite(self.conductances)):
            raise StructuralError("conductances must be positive and finite")
        if np.any(self.tails == self.heads):
            raise StructuralError("self-loops are not supported")
        self.positions = None if positions is None else np.asarray(positions, float)

    # -- basics -------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    def index_of(self, label) -> int:
        return self._index[int(label)]

    def indices_of(self, labels) -> np.ndarray:
        return np.array([self._index[int(l)] for l in labels], int)

    @property
    def tails_labels(self) -> np.ndarray:
        return self.labels[self.tails]

    @property
    def heads_labels(self) -> np.ndarray:
        return self.labels[self.heads]

    @property
    def resistances(self) -> np.ndarray:
        return 1.0 / self.conductances

    @cached_property
    def pi(self) -> np.ndarray:
        """Stationary measure pi(x) = sum of conductances at x."""
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.tails, self.conductances)
        np.add.at(out, self.heads, self.conductances)
        return out

    @cached_property
    def adjacency(self) -> list:
        """Per-vertex list of (edge index, sign, neighbor), sorted by neighbor."""
        adj: list = [[] for _ in range(self.n_vertices)]
        for e, (t, h) in enumerate(zip(self.tails, self.heads)):
            adj[t].append((e, +1, int(h)))
            adj[h].append((e, -1, int(t)))
        for lst in adj:
            lst.sort(key=lambda x: (x[2], x[0]))
        return adj

    @cached_property
    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return True
        seen = np.zeros(self.n_vertices, bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for _, _, u in self.adjacency[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
        return bool(seen.all())

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        n, m = self.n_vertices, self.n_edges
        i = np.concatenate([self.tails, self.heads, self.tails, self.heads])
        j = np.concatenate([self.tails, self.heads, self.heads, self.tails])
        v = np.concatenate([self.conductances, self.conductances,
                            -self.conductances, -self.conductances])
        return sp.csr_matrix((v, (i, j)), shape=(n, n))

    # -- fields ----------------------------------------------------------------

    def zero_field(self) -> "EdgeField":
        return EdgeField(self, np.zeros(self.n_edges))

    def field(self, values) -> "EdgeField":
        return EdgeField(self, np.asarray(values, float))

    def chi(self, edge_index: int, sign: int = +1) -> "EdgeField":
        v = np.zeros(self.n_edges)
        v[edge_index] = sign
        return EdgeField(self, v)

    def star(self, label) -> "EdgeField":
        """The star field at a vertex: sum of c(e) chi^e over edges leaving it."""
        x = self.index_of(label)
        v = np.zeros(self.n_edges)
        v[self.tails == x] += self.conductances[self.tails == x]
        v[self.heads == x] -= self.conductances[self.heads == x]
        return EdgeField(self, v)


@dataclass
class EdgeField:
    """Antisymmetric edge function, stored under the reference orientation."""

    network: Network
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float).reshape(-1)
        if len(self.values) != self.network.n_edges:
            raise StructuralError("field length does not match edge count")

    def __add__(self, other):
        return EdgeField(self.network, self.values + other.values)

    def __sub__(self, other):
        return EdgeField(self.network, self.values - other.values)

    def __mul__(self, s: float):
        return EdgeField(self.network, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return EdgeField(self.network, -self.values)

    def divergence(self) -> np.ndarray:
        """Net outflow at each vertex (dense indexing)."""
        out = np.zeros(self.network.n_vertices)
        np.add.at(out, self.network.tails, self.values)
        np.add.at(out, self.network.heads, -self.values)
        return out

    def to_json_dict(self) -> dict:
        return {"edges": [{"id": int(i), "value": float(v)} for i, v in enumerate(self.values)]}


@dataclass
class VertexFunction:
    """Real function on the vertices of a network."""

    network: Network
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float).reshape(-1)
        if len(self.values) != self.network.n_vertices:
            raise StructuralError("function length does not match vertex count")

    def at(self, label) -> float:
        return float(self.values[self.network.index_of(label)])

    def to_json_dict(self) -> dict:
        return {"values": [{"id": int(l), "value": float(v)}
                           for l, v in zip(self.network.labels, self.values)]}


@dataclass
class DirichletProblem:
    """Boundary-value problem: prescribe values off U, extend harmonically on U."""

    network: Network
    boundary_values: dict  # label -> value

    def __post_init__(self):
        if not self.boundary_values:
            raise StructuralError("boundary set must be nonempty")
        if len(self.boundary_values) >= self.network.n_vertices:
            if len(self.boundary_values) > self.network.n_vertices:
                raise StructuralError("boundary set larger than vertex set")
        self.boundary_idx = self.network.indices_of(self.boundary_values.keys())
        self.boundary_vals = np.array([float(v) for v in self.boundary_values.values()])
        mask = np.ones(self.network.n_vertices, bool)
        mask[self.boundary_idx] = False
        self.interior_idx = np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# gradient, energy, Kirchhoff laws


def discrete_gradient(network: Network, f) -> EdgeField:
    """c df(e) = c(e) [f(head) - f(tail)] (Ohm's law orientation)."""
    vals = f.values if isinstance(f, VertexFunction) else np.asarray(f, float)
    return EdgeField(network, network.conductances * (vals[network.heads] - vals[network.tails]))


def inner_r(theta: EdgeField, phi: EdgeField) -> float:
    return float(np.sum(theta.network.resistances * theta.values * phi.values))


def energy(network: Network, theta: EdgeField) -> float:
    """E(theta) = sum_e r(e) theta(e)^2."""
    return float(np.sum(network.resistances * theta.values**2))


def energy_of_function(network: Network, f) -> float:
    """Dirichlet energy E(f) = E(c df) = sum_e c(e) [df(e)]^2."""
    return energy(network, discrete_gradient(network, f))


def node_law_residuals(network: Network, theta: EdgeField, U=None) -> np.ndarray:
    """Net outflow at each vertex of U (theta is a flow on U iff these vanish)."""
    div = theta.divergence()
    if U is None:
        return div
    return div[network.indices_of(U)]


def bfs_spanning_tree(network: Network, root: int = 0):
    """Deterministic BFS tree: (parent vertex, parent edge, parent sign, order).

    sign +1 means the tree edge is traversed tail->head going root -> leaf.
    """
    if not network.is_connected:
        raise DisconnectedNetworkError("spanning tree requires a connected network")
    n = network.n_vertices
    parent = -np.ones(n, int)
    parent_edge = -np.ones(n, int)
    parent_sign = np.zeros(n, int)
    order = [root]
    seen = np.zeros(n, bool)
    seen[root] = True
    qi = 0
    while qi < len(order):
        v = order[qi]
        qi += 1
        for e, sgn, u in network.adjacency[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                parent_edge[u] = e
                parent_sign[u] = sgn
                order.append(u)
    return parent, parent_edge, parent_sign, order


def cycle_law_residuals(network: Network, theta: EdgeField) -> np.ndarray:
    """r-weighted sums of theta around the fundamental cycles of a BFS tree.

    All residuals vanish iff theta is a discrete gradient.
    """
    parent, parent_edge, parent_sign, order = bfs_spanning_tree(network)
    r = network.resistances
    psi = np.zeros(network.n_vertices)
    for v in order[1:]:
        psi[v] = psi[parent[v]] + parent_sign[v] * r[parent_edge[v]] * theta.values[parent_edge[v]]
    tree_edges = set(int(e) for e in parent_edge if e >= 0)
    out = []
    for e in range(network.n_edges):
        if e in tree_edges:
            continue
        t, h = network.tails[e], network.heads[e]
        out.append(r[e] * theta.values[e] - (psi[h] - psi[t]))
    return np.array(out)


def is_gradient(network: Network, theta: EdgeField, tol: float = 1e-10) -> bool:
    res = cycle_law_residuals(network, theta)
    scale = 1.0 + float(np.abs(theta.values).max(initial=0.0))
    return bool(np.all(np.abs(res) <= tol * scale))


# ---------------------------------------------------------------------------
# harmonic extension (preconditioned conjugate gradient)


def _pcg(A: sp.csr_matrix, b: np.ndarray, inv_diag: np.ndarray, tol_abs: float,
         maxiter: int, x0=None) -> np.ndarray:
    # solve at unit scale so tiny right-hand sides cannot underflow the
    # inner products
    scale = float(np.abs(b).max())
    if scale == 0.0:
        return np.zeros_like(b)
    b = b / scale
    tol_abs = tol_abs / scale
    x = np.zeros_like(b) if x0 is None else x0.astype(float) / scale
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    norm_r = float(np.linalg.norm(r))
    it = 0
    while norm_r > tol_abs and it < maxiter:
        Ap = A @ p
        denom = float(p @ Ap)
        if denom <= 0:
            break
        alpha = rz / denom
        x += alpha * p
        r -= alpha * Ap
        norm_r = float(np.linalg.norm(r))
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    return scale * x


def harmonic_extension(problem: DirichletProblem, tol_factor: float = 1e-12) -> VertexFunction:
    """Unique function matching the boundary data and harmonic elsewhere.

    Solves the SPD interior Laplacian system by Jacobi-preconditioned
    conjugate gradient; iteration stops when the residual drops below
    tol_factor * (initial residual + ||rhs||).  The node-law postcondition
    (residual at each interior vertex below 1e-9 pi(x) ||g||_inf) is checked,
    with one tighter retry before giving up.
    """
    net = problem.network
    if not net.is_connected:
        raise DisconnectedNetworkError("harmonic extension requires a connected network")
    h = np.zeros(net.n_vertices)
    h[problem.boundary_idx] = problem.boundary_vals
    I = problem.interior_idx
    if I.size == 0:
        return VertexFunction(net, h)
    L = net.laplacian
    L_II = L[I][:, I].tocsr()
    B = problem.boundary_idx
    rhs = -(L[I][:, B] @ problem.boundary_vals)
    maxiter = max(1000, 40 * I.size)
    g_inf = float(np.abs(problem.boundary_vals).max())
    bound = 1e-9 * net.pi[I] * g_inf
    x = None
    for factor in (tol_factor, tol_factor * 1e-2):
        tol_abs = factor * (float(np.linalg.norm(rhs)) * 2.0 + 1e-300)
        x = _pcg(L_II, rhs, 1.0 / L_II.diagonal(), tol_abs, maxiter, x0=x)
        if np.all(np.abs(L_II @ x - rhs) <= bound + 1e-305):
            break
    else:
        worst = float(np.abs(L_II @ x - rhs).max())
        raise RuntimeError(f"conjugate gradient stalled; worst node residual {worst:.3e}")
    h[I] = x
    return VertexFunction(net, h)


def harmonic_residuals(problem: DirichletProblem, h: VertexFunction) -> np.ndarray:
    """Node-law residuals of c dh at the interior vertices."""
    theta = discrete_gradient(problem.network, h)
    return theta.divergence()[problem.interior_idx]


# ---------------------------------------------------------------------------
# strength, gap, projection, sandwich, Dirichlet-Thomson


def strength(network: Network, theta: EdgeField, A, B, check_tol: float | None = 1e-10):
    """Net throughput of a flow between A and B (two equivalent formulas).

    Returns the out-of-A value; when ``check_tol`` is set, verifies it agrees
    with the into-B value.
    """
    A_idx = set(int(i) for i in network.indices_of(A))
    B_idx = set(int(i) for i in network.indices_of(B))
    if A_idx & B_idx:
        raise StructuralError("source and sink sets overlap")
    out_A = 0.0
    in_B = 0.0
    for e in range(network.n_edges):
        t, h = int(network.tails[e]), int(network.heads[e])
        v = theta.values[e]
        if t in A_idx:
            out_A += v
        if h in A_idx:
            out_A -= v
        if h in B_idx:
            in_B += v
        if t in B_idx:
            in_B -= v
    if check_tol is not None:
        scale = 1.0 + abs(out_A) + abs(in_B)
        if abs(out_A - in_B) > check_tol * scale:
            raise ValueError(
                f"strength formulas disagree ({out_A} vs {in_B}); theta is not a flow off A u B"
            )
    return out_A


def gap(network: Network, f, A, B) -> float:
    """gap_{A,B}(f) = min over B of f minus max over A of f."""
    vals = f.values if isinstance(f, VertexFunction) else np.asarray(f, float)
    A_idx = network.indices_of(A)
    B_idx = network.indices_of(B)
    if set(A_idx.tolist()) & set(B_idx.tolist()):
        raise StructuralError("source and sink sets overlap")
    return float(vals[B_idx].min() - vals[A_idx].max())


def project_to_current(problem: DirichletProblem, f) -> EdgeField:
    """Orthogonal projection of c df onto the current flows on U.

    Equals c dh where h is the harmonic extension of f's boundary values;
    the projection can only decrease energy.
    """
    net = problem.network
    vals = f.values if isinstance(f, VertexFunction) else np.asarray(f, float)
    data = {int(net.labels[i]): float(vals[i]) for i in problem.boundary_idx}
    h = harmonic_extension(DirichletProblem(net, data))
    return discrete_gradient(net, h)


def sandwich_check(problem: DirichletProblem, f, theta: EdgeField,
                   pre_tol: float = 1e-8):
    """Pythagoras split E(c df - c dh) + E(theta - c dh) = E(c df - theta).

    Preconditions (theta a flow on U, f matching the boundary data) are
    verified and violations reported as exceptions.
    """
    net = problem.network
    vals = f.values if isinstance(f, VertexFunction) else np.asarray(f, float)
    div = theta.divergence()[problem.interior_idx]
    scale = 1.0 + float(np.abs(theta.values).max(initial=0.0))
    if np.any(np.abs(div) > pre_tol * scale):
        raise ValueError("theta is not a flow on the interior set")
    if np.any(np.abs(vals[problem.boundary_idx] - problem.boundary_vals) > pre_tol * (1 + np.abs(problem.boundary_vals))):
        raise ValueError("f does not match the boundary data")
    h = harmonic_extension(problem)
    cdh = discrete_gradient(net, h)
    cdf = discrete_gradient(net, vals)
    return (
        energy(net, cdf - cdh),
        energy(net, theta - cdh),
        energy(net, cdf - theta),
    )


def dirichlet_thomson_check(network: Network, theta: EdgeField, f, A, B):
    """(strength(theta) * gap(f), sqrt(E(theta) E(f))) of the two-sided bound."""
    g = gap(network, f, A, B)
    s = strength(network, theta, A, B)
    lhs = s * g
    rhs = float(np.sqrt(energy(network, theta) * energy_of_function(network, f)))
    if g < 0:
        import warnings

        warnings.warn("gap is negative; the strength-gap inequality is vacuous here")
    return lhs, rhs


# ---------------------------------------------------------------------------
# star / cycle decomposition


def star_cycle_decomposition(network: Network, theta: EdgeField):
    """Split theta into its star-space and cycle-space components.

    The star space is exactly the space of discrete gradients; the component
    is c da where L a = -div(theta) (grounded at vertex 0).
    """
    if not network.is_connected:
        raise DisconnectedNetworkError("decomposition requires a connected network")
    b = -theta.divergence()
    n = network.n_vertices
    a = np.zeros(n)
    if n > 1:
        L = network.laplacian
        keep = np.arange(1, n)
        L_red = L[keep][:, keep].tocsr()
        rhs = b[keep]
        tol_abs = 1e-14 * (float(np.linalg.norm(rhs)) * 2.0 + 1e-300)
        a[keep] = _pcg(L_red, rhs, 1.0 / L_red.diagonal(), tol_abs, max(1000, 40 * n))
    star_part = discrete_gradient(network, a)
    return star_part, theta - star_part


def star_space_dimension(network: Network) -> int:
    return network.n_vertices - 1


def cycle_space_dimension(network: Network) -> int:
    return network.n_edges - network.n_vertices + 1


# ---------------------------------------------------------------------------
# exit measure of the weighted random walk


def random_walk_exit_measure(problem: DirichletProblem, start,
                             n_samples: int | None = None, seed: int | None = None,
                             max_steps: int = 10_000_000) -> dict:
    """Distribution of the walk's exit position over the boundary set.

    Exact mode (default) uses one transposed interior solve; sampled mode
    simulates ``n_samples`` weighted walks with the given seed.
    Returns {boundary label: probability}.
    """
    net = problem.network
    if not net.is_connected:
        raise DisconnectedNetworkError("exit measure requires a connected network")
    s = net.index_of(start)
    B = problem.boundary_idx
    if s in set(B.tolist()):
        return {int(net.labels[s]): 1.0}
    I = problem.interior_idx
    if n_samples is None:
        L = net.laplacian
        L_II = L[I][:, I].tocsr()
        e_s = np.zeros(I.size)
        e_s[np.flatnonzero(I == s)[0]] = 1.0
        tol_abs = 1e-14 * 2.0
        y = _pcg(L_II, e_s, 1.0 / L_II.diagonal(), tol_abs, max(1000, 40 * I.size))
        mu = -(L[B][:, I] @ y)
        return {int(net.labels[b]): float(p) for b, p in zip(B, mu)}

    rng = np.random.default_rng(seed)
    # flat per-vertex cumulative conductances for O(log deg) transitions
    indptr = np.zeros(net.n_vertices + 1, int)
    flat_nb = []
    flat_c = []
    for v in range(net.n_vertices):
        for e, sgn, u in net.adjacency[v]:
            flat_nb.append(u)
            flat_c.append(net.conductances[e])
        indptr[v + 1] = len(flat_nb)
    flat_nb = np.array(flat_nb, int)
    cum = np.cumsum(np.array(flat_c))
    base = np.concatenate([[0.0], cum])[indptr[:-1]]
    seg_total = np.concatenate([[0.0], cum])[indptr[1:]] - base

    is_boundary = np.zeros(net.n_vertices, bool)
    is_boundary[B] = True
    counts: dict = {}
    pos = np.full(n_samples, s, int)
    active = np.arange(n_samples)
    steps = 0
    while active.size and steps < max_steps:
        u = rng.random(active.size)
        target = base[pos[active]] + u * seg_total[pos[active]]
        k = np.searchsorted(cum, target, side="right")
        pos[active] = flat_nb[np.minimum(k, len(flat_nb) - 1)]
        done = is_boundary[pos[active]]
        for v in pos[active[done]]:
            counts[int(v)] = counts.get(int(v), 0) + 1
        active = active[~done]
        steps += 1
    total = sum(counts.values())
    return {int(net.labels[b]): counts.get(int(b), 0) / total for b in B}
