"""Dirichlet solver on the canonical primal network, discrete-vs-continuous
energy comparisons, and the convergence sweep harness.

Ground truth comes from a catalog of entire harmonic functions with closed
form gradients, Hessians, and harmonic conjugates, so the continuous
solution is exact and every measured error is purely discretization error.
The universal constants of the convergence theorem are never asserted; the
harness reports the empirical ratio of the measured error to the theorem's
shape and only checks that it stays bounded.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .core_map import OrthodiagonalMap
from .domains import DomainSpec, hausdorff_delta
from .errors import GeometryError
from .generators import GeneratorSpec, build_generator_level
from .geometry import integrate_over_quad
from .network import (
    DirichletProblem,
    VertexFunction,
    energy_of_function,
    harmonic_extension,
    random_walk_exit_measure,
)


# ---------------------------------------------------------------------------
# catalog of harmonic test functions


@dataclass
class TestFunction:
    """Entire harmonic function with analytic derivative data.

    sup_grad/sup_hess return sup |grad| and sup ||Hess||_2 over an axis
    aligned box (lo, hi); the catalog entries all have monotone closed forms
    attained at box corners.
    """

    name: str
    f: callable
    grad: callable
    hess: callable
    conjugate: callable
    sup_grad: callable
    sup_hess: callable

    def __call__(self, pts):
        return self.f(np.atleast_2d(np.asarray(pts, float)))


def _box_absmax(lo, hi):
    mx = np.maximum(np.abs(lo), np.abs(hi))
    return float(mx[0]), float(mx[1])


def _catalog() -> dict:
    cat = {}

    def add(name, f, grad, hess, conj, sup_grad, sup_hess):
        cat[name] = TestFunction(name, f, grad, hess, conj, sup_grad, sup_hess)

    add(
        "coord_x",
        lambda p: p[:, 0],
        lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]),
        lambda p: np.zeros((len(p), 2, 2)),
        lambda p: p[:, 1],
        lambda lo, hi: 1.0,
        lambda lo, hi: 0.0,
    )
    add(
        "coord_y",
        lambda p: p[:, 1],
        lambda p: np.column_stack([np.zeros(len(p)), np.ones(len(p))]),
        lambda p: np.zeros((len(p), 2, 2)),
        lambda p: -p[:, 0],
        lambda lo, hi: 1.0,
        lambda lo, hi: 0.0,
    )
    add(
        "xy",
        lambda p: p[:, 0] * p[:, 1],
        lambda p: np.column_stack([p[:, 1], p[:, 0]]),
        lambda p: np.broadcast_to(np.array([[0.0, 1.0], [1.0, 0.0]]), (len(p), 2, 2)).copy(),
        lambda p: 0.5 * (p[:, 1] ** 2 - p[:, 0] ** 2),
        lambda lo, hi: float(np.hypot(*_box_absmax(lo, hi))),
        lambda lo, hi: 1.0,
    )
    add(
        "x2_minus_y2",
        lambda p: p[:, 0] ** 2 - p[:, 1] ** 2,
        lambda p: np.column_stack([2 * p[:, 0], -2 * p[:, 1]]),
        lambda p: np.broadcast_to(np.array([[2.0, 0.0], [0.0, -2.0]]), (len(p), 2, 2)).copy(),
        lambda p: 2 * p[:, 0] * p[:, 1],
        lambda lo, hi: 2.0 * float(np.hypot(*_box_absmax(lo, hi))),
        lambda lo, hi: 2.0,
    )

    def _re_z3(p):
        return p[:, 0] ** 3 - 3 * p[:, 0] * p[:, 1] ** 2

    def _im_z3(p):
        return 3 * p[:, 0] ** 2 * p[:, 1] - p[:, 1] ** 3

    add(
        "re_z3",
        _re_z3,
        lambda p: np.column_stack([3 * (p[:, 0] ** 2 - p[:, 1] ** 2), -6 * p[:, 0] * p[:, 1]]),
        lambda p: np.stack([
            np.stack([6 * p[:, 0], -6 * p[:, 1]], axis=1),
            np.stack([-6 * p[:, 1], -6 * p[:, 0]], axis=1),
        ], axis=1),
        _im_z3,
        lambda lo, hi: 3.0 * (_box_absmax(lo, hi)[0] ** 2 + _box_absmax(lo, hi)[1] ** 2),
        lambda lo, hi: 6.0 * float(np.hypot(*_box_absmax(lo, hi))),
    )
    add(
        "im_z3",
        _im_z3,
        lambda p: np.column_stack([6 * p[:, 0] * p[:, 1], 3 * (p[:, 0] ** 2 - p[:, 1] ** 2)]),
        lambda p: np.stack([
            np.stack([6 * p[:, 1], 6 * p[:, 0]], axis=1),
            np.stack([6 * p[:, 0], -6 * p[:, 1]], axis=1),
        ], axis=1),
        lambda p: -_re_z3(p),
        lambda lo, hi: 3.0 * (_box_absmax(lo, hi)[0] ** 2 + _box_absmax(lo, hi)[1] ** 2),
        lambda lo, hi: 6.0 * float(np.hypot(*_box_absmax(lo, hi))),
    )
    add(
        "exp_x_cos_y",
        lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1]),
        lambda p: np.column_stack([np.exp(p[:, 0]) * np.cos(p[:, 1]),
                                   -np.exp(p[:, 0]) * np.sin(p[:, 1])]),
        lambda p: np.stack([
            np.stack([np.exp(p[:, 0]) * np.cos(p[:, 1]), -np.exp(p[:, 0]) * np.sin(p[:, 1])], axis=1),
            np.stack([-np.exp(p[:, 0]) * np.sin(p[:, 1]), -np.exp(p[:, 0]) * np.cos(p[:, 1])], axis=1),
        ], axis=1),
        lambda p: np.exp(p[:, 0]) * np.sin(p[:, 1]),
        lambda lo, hi: float(np.exp(hi[0])),
        lambda lo, hi: float(np.exp(hi[0])),
    )
    return cat


CATALOG = _catalog()


def get_test_function(name: str) -> TestFunction:
    try:
        return CATALOG[name]
    except KeyError:
        raise GeometryError(f"unknown test function {name!r}; have {sorted(CATALOG)}")


# ---------------------------------------------------------------------------
# solver wrapper


def solve_dirichlet(omap: OrthodiagonalMap, g, tol_factor: float = 1e-12) -> VertexFunction:
    """Discrete harmonic extension of g from the primal boundary vertices.

    g may be a TestFunction (evaluated at vertex positions) or a dict mapping
    primal vertex index -> value covering the boundary.
    """
    net = omap.primal_network()
    bdry, _ = omap.boundary_vertices()
    if isinstance(g, TestFunction) or callable(g):
        vals = g(omap.positions[bdry])
        data = {int(v): float(val) for v, val in zip(bdry, vals)}
    else:
        data = {int(v): float(g[int(v)]) for v in bdry}
    return harmonic_extension(DirichletProblem(net, data), tol_factor=tol_factor)


def sup_error(omap: OrthodiagonalMap, domain: DomainSpec, tf: TestFunction,
              h_d: VertexFunction | None = None) -> float:
    """max over primal vertices inside the closed domain of |h_d - f|."""
    if h_d is None:
        h_d = solve_dirichlet(omap, tf)
    labels = h_d.network.labels
    pos = omap.positions[labels]
    inside = domain.contains(pos)
    exact = tf(pos)
    return float(np.abs(h_d.values[inside] - exact[inside]).max())


# ---------------------------------------------------------------------------
# energy comparisons


def _map_bbox(omap: OrthodiagonalMap):
    return omap.positions.min(axis=0), omap.positions.max(axis=0)


def energy_pair_check(omap: OrthodiagonalMap, tf: TestFunction, quad_tol: float = 1e-10):
    """Compare the averaged primal/dual energy of f with its Dirichlet integral.

    Returns dict with e_primal, e_dual, integral, discrepancy, and the bound
    area * (10 L M eps + 8 M^2 eps^2) it must respect.
    """
    pos = omap.positions
    pnet = omap.primal_network()
    dnet = omap.dual_network()
    e_p = energy_of_function(pnet, tf(pos[pnet.labels]))
    e_d = energy_of_function(dnet, tf(pos[dnet.labels]))

    def grad_sq(pts):
        g = tf.grad(pts)
        return g[:, 0] ** 2 + g[:, 1] ** 2

    integral = sum(
        integrate_over_quad(grad_sq, omap.face_polygon(i), tol=quad_tol)
        for i in range(omap.n_faces)
    )
    lo, hi = _map_bbox(omap)
    L = tf.sup_grad(lo, hi)
    M = tf.sup_hess(lo, hi)
    eps = omap.mesh_size()
    area = omap.area()
    disc = 0.5 * (e_p + e_d) - integral
    return {
        "e_primal": e_p,
        "e_dual": e_d,
        "integral": integral,
        "discrepancy": disc,
        "bound": area * (10 * L * M * eps + 8 * M**2 * eps**2),
        "L": L,
        "M": M,
        "eps": eps,
        "area": area,
    }


def energy_convergence_check(omap: OrthodiagonalMap, tf: TestFunction,
                             h_d: VertexFunction | None = None):
    """(E(h_c - h_d) on the primal network, explicit bound 32 area M^2 eps^2)."""
    if h_d is None:
        h_d = solve_dirichlet(omap, tf)
    net = h_d.network
    diff = tf(omap.positions[net.labels]) - h_d.values
    lhs = energy_of_function(net, diff)
    lo, hi = _map_bbox(omap)
    M = tf.sup_hess(lo, hi)
    rhs = 32.0 * omap.area() * M**2 * omap.mesh_size() ** 2
    return lhs, rhs


# ---------------------------------------------------------------------------
# convergence sweeps


@dataclass
class SweepRecord:
    family: str
    n: int
    eps: float
    delta: float
    sup_error: float
    energy_error: float
    prop52_bound: float
    prop51_disc: float
    prop51_bound: float
    thm1_shape: float
    runtime_ms: float
    error: str = ""

    CSV_COLUMNS = ("family", "n", "eps", "delta", "sup_error", "energy_error",
                   "prop52_bound", "prop51_disc", "prop51_bound", "thm1_shape",
                   "runtime_ms")

    def csv_row(self):
        return [self.family, self.n, f"{self.eps:.12g}", f"{self.delta:.12g}",
                f"{self.sup_error:.12g}", f"{self.energy_error:.12g}",
                f"{self.prop52_bound:.12g}", f"{self.prop51_disc:.12g}",
                f"{self.prop51_bound:.12g}", f"{self.thm1_shape:.12g}",
                f"{self.runtime_ms:.3f}"]

    def to_json_dict(self):
        d = {k: getattr(self, k) for k in self.CSV_COLUMNS}
        if self.error:
            d["error"] = self.error
        return d


def theorem_shape(omap: OrthodiagonalMap, domain: DomainSpec, tf: TestFunction,
                  eps: float, delta: float) -> float:
    """diam(Omega) (C1 + C2 eps) / sqrt(log(diam(Omega)/(delta v eps)))."""
    lo_m, hi_m = _map_bbox(omap)
    lo_d, hi_d = domain.bounding_box()
    lo = np.minimum(lo_m, lo_d)
    hi = np.maximum(hi_m, hi_d)
    c1 = tf.sup_grad(lo, hi)
    c2 = tf.sup_hess(lo, hi)
    diam = domain.diam()
    ratio = diam / max(delta, eps)
    if ratio <= 1.0:
        return float("inf")
    return diam * (c1 + c2 * eps) / float(np.sqrt(np.log(ratio)))


def convergence_sweep(spec: GeneratorSpec, levels, tf: TestFunction,
                      csv_path=None, hausdorff_samples: int = 2000) -> list:
    """One SweepRecord per refinement level; failures yield error markers."""
    if len(levels) < 2:
        raise GeometryError("a sweep needs at least two levels")
    records = []
    for n in levels:
        t0 = time.perf_counter()
        try:
            omap, domain = build_generator_level(spec, n)
            h_d = solve_dirichlet(omap, tf)
            eps = omap.mesh_size()
            delta = hausdorff_delta(omap, domain, hausdorff_samples)
            sup = sup_error(omap, domain, tf, h_d=h_d)
            e_err, p52 = energy_convergence_check(omap, tf, h_d=h_d)
            pair = energy_pair_check(omap, tf)
            rec = SweepRecord(
                family=spec.family, n=int(n), eps=eps, delta=delta,
                sup_error=sup, energy_error=e_err, prop52_bound=p52,
                prop51_disc=pair["discrepancy"], prop51_bound=pair["bound"],
                thm1_shape=theorem_shape(omap, domain, tf, eps, delta),
                runtime_ms=1000.0 * (time.perf_counter() - t0),
            )
        except Exception as exc:  # record and continue with the other levels
            rec = SweepRecord(spec.family, int(n), float("nan"), float("nan"),
                              float("nan"), float("nan"), float("nan"),
                              float("nan"), float("nan"), float("nan"),
                              1000.0 * (time.perf_counter() - t0), error=str(exc))
        records.append(rec)
    if csv_path is not None:
        write_sweep_csv(csv_path, records)
    return records


def write_sweep_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SweepRecord.CSV_COLUMNS)
        for rec in records:
            if not rec.error:
                writer.writerow(rec.csv_row())


# ---------------------------------------------------------------------------
# harmonic measure comparison


def poisson_arc_masses(r: float, phi0: float, k: int) -> np.ndarray:
    """Harmonic measure of k equal arcs of the unit circle from r e^{i phi0}.

    The measure of an arc is the (normalized) length of its image under the
    disk automorphism moving the evaluation point to the origin; r = 0 gives
    the uniform measure.
    """
    if r >= 1:
        raise GeometryError("evaluation point must be inside the disk")
    z = r * np.exp(1j * phi0)
    sub = 128  # subdivide so every unwrap step stays below pi
    t = np.linspace(0.0, 2 * np.pi, k * sub + 1)
    w = np.exp(1j * t)
    img = (w - z) / (1.0 - np.conj(z) * w)
    ang = np.unwrap(np.angle(img))
    return np.diff(ang[::sub]) / (2 * np.pi)


def exit_measure_vs_arcs(omap: OrthodiagonalMap, start: int, k: int = 16,
                         n_samples: int | None = None, seed: int | None = None,
                         center=(0.0, 0.0)) -> dict:
    """Exit distribution aggregated over k equal arcs vs its continuum limit.

    The reference is the Poisson kernel of the unit disk at the start
    position (uniform when the start vertex sits at the origin).  Returns
    the total-variation distance and both histograms.
    """
    net = omap.primal_network()
    bdry, _ = omap.boundary_vertices()
    problem = DirichletProblem(net, {int(v): 0.0 for v in bdry})
    mu = random_walk_exit_measure(problem, start, n_samples=n_samples, seed=seed)

    pos = omap.positions
    c = np.asarray(center, float)
    arc = np.zeros(k)
    for label, p in mu.items():
        ang = np.arctan2(pos[label][1] - c[1], pos[label][0] - c[0]) % (2 * np.pi)
        arc[int(ang / (2 * np.pi / k)) % k] += p

    z = pos[start] - c
    r = float(np.hypot(*z))
    if r < 1e-12:
        ref = np.full(k, 1.0 / k)
    else:
        ref = poisson_arc_masses(r, float(np.arctan2(z[1], z[0])), k)
    tv = 0.5 * float(np.abs(arc - ref).sum())
    return {"tv": tv, "arcs": arc, "reference": ref, "exit_measure": mu}
