"""Randomised property checks of the closed forms against independent references.

Each check returns a :class:`PropertyResult` carrying the worst deviation it
saw. The references are brute-force grids, central finite differences and
direct re-evaluation through the rate equations; none of them calls the
closed-form solver. Solver entry points are parameters so that a broken
solver can be injected and caught.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cell as cellmod
from .cell import case_bounds
from .channel import Layout, PhysicalParams, ScenarioTemplate
from .optimizer import OptimizerConfig, optimize
from .oracle import GridSpec, grid_error_bound, oracle_cell
from .rates import LN2, CellCoefficients, rate_strong, rate_weak_at_strong, rate_weak_direct

B_V = 2e7


@dataclass
class PropertyResult:
    name: str
    passed: bool
    worst: float
    threshold: float
    instances: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (f"[{status}] {self.name}: worst={self.worst:.3e} threshold={self.threshold:.3e} "
                f"n={self.instances} t={self.seconds:.1f}s{extra}")


def random_instances(rng: np.random.Generator, n: int, B_v: float = B_V):
    """Random per-cell instances (coefficients for n independent cells, p, R_th).

    Psi values are log-uniform over three decades, so strong/weak orderings
    and relay strengths of every kind occur.
    """
    psi_s = 10 ** rng.uniform(-1, 2, n)
    psi_w = 10 ** rng.uniform(-1, 2, n)
    r_rf = 10 ** rng.uniform(5, 8, n)
    p = rng.uniform(0.01, 0.36, n)
    r_th = rng.uniform(0, 0.5, n) * B_v / 2 * np.log2(1 + psi_s * p / 2)
    coef = CellCoefficients(c=1 / (2 * np.pi * np.e), B_v=B_v, Z_s=None, Z_w=None,
                            Psi_s=psi_s, Psi_w=psi_w, R_rf=r_rf)
    return coef, p, r_th


def _one(coef: CellCoefficients, k: int) -> CellCoefficients:
    return CellCoefficients(coef.c, coef.B_v, None, None, coef.Psi_s[k:k + 1],
                            coef.Psi_w[k:k + 1], coef.R_rf[k:k + 1])


def check_direct_optimality(seed=0, instances=1000, grid_points=100_000,
                            solve_direct: Callable = cellmod.solve_case_direct) -> PropertyResult:
    """Direct-link closed form is at least the grid maximum minus one Lipschitz step."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, r_th = random_instances(rng, instances)
    grid = GridSpec(grid_points)
    worst, failures, feasible_count = -np.inf, 0, 0
    for k in range(instances):
        one = _one(coef, k)
        ref = oracle_cell(one, p[k], r_th[k], 0, grid, allow_hybrid=False)
        got = solve_direct(one, p[k], r_th[k], 0)
        if not bool(ref.feasible):
            continue
        feasible_count += 1
        bound = float(grid_error_bound(one, p[k], 0, grid_points))
        if not bool(got.feasible):
            failures += 1
            worst = np.inf
            continue
        shortfall = (float(ref.cell_objective) - float(got.cell_objective)) / bound
        worst = max(worst, shortfall)
        failures += shortfall > 1.0
    return PropertyResult("direct-case closed form vs grid", failures == 0, worst, 1.0, instances,
                          time.perf_counter() - t0,
                          f"shortfall in units of the grid bound; {feasible_count} grid-feasible")


def _feasible_hybrid_instances(rng, count, batch=4000):
    """Instances whose relay-case window [A_bar, B_s] is non-empty."""
    picked = []
    while sum(len(x[1]) for x in picked) < count:
        coef, p, r_th = random_instances(rng, batch)
        bd = case_bounds(coef, p, r_th)
        ok = bd.A_bar <= bd.B_s
        sub = CellCoefficients(coef.c, coef.B_v, None, None, coef.Psi_s[ok], coef.Psi_w[ok], coef.R_rf[ok])
        picked.append((sub, p[ok], r_th[ok]))
    coef = CellCoefficients(picked[0][0].c, B_V, None, None,
                            *(np.concatenate([getattr(x[0], f) for x in picked])[:count]
                              for f in ("Psi_s", "Psi_w", "R_rf")))
    p = np.concatenate([x[1] for x in picked])[:count]
    r_th = np.concatenate([x[2] for x in picked])[:count]
    return coef, p, r_th


def check_hybrid_flatness(seed=0, instances=1000, samples=100) -> PropertyResult:
    """R_s + min(R_{w->s}, R_rf) is constant across the relay-case window."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, r_th = _feasible_hybrid_instances(rng, instances)
    bd = case_bounds(coef, p, r_th)
    u = rng.random((instances, samples))
    P_s = bd.A_bar[:, None] + u * (bd.B_s - bd.A_bar)[:, None]
    P_w = p[:, None] - P_s
    col = CellCoefficients(coef.c, coef.B_v, None, None, coef.Psi_s[:, None],
                           coef.Psi_w[:, None], coef.R_rf[:, None])
    obj = rate_strong(col, P_s) + np.minimum(rate_weak_at_strong(col, P_s, P_w), col.R_rf)
    rel = np.std(obj, axis=1) / np.abs(np.mean(obj, axis=1))
    worst = float(rel.max())
    return PropertyResult("relay-case objective flat over window", worst < 1e-12, worst, 1e-12,
                          instances, time.perf_counter() - t0)


def direct_derivative(coef, P_s, cell=None):
    """d(R_s + R_w)/dP_s with P_w = p - P_s, in bit/s per unit power."""
    psi_s = coef.Psi_s if cell is None else coef.Psi_s[cell]
    psi_w = coef.Psi_w if cell is None else coef.Psi_w[cell]
    return coef.B_v / (2 * LN2) * (1 / (1 / psi_s + P_s) - 1 / (1 / psi_w + P_s))


def check_derivative_sign(seed=0, instances=1000, points=100) -> PropertyResult:
    """Analytic derivative of the direct-case objective against central differences."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, _ = random_instances(rng, instances)
    P_s = rng.uniform(0, 0.5, (instances, points)) * p[:, None]
    h = 1e-6 * p[:, None]
    col = CellCoefficients(coef.c, coef.B_v, None, None, coef.Psi_s[:, None], coef.Psi_w[:, None], None)

    def objective(x):
        return rate_strong(col, x) + rate_weak_direct(col, x, p[:, None] - x)

    fd = (objective(P_s + h) - objective(P_s - h)) / (2 * h)
    analytic = direct_derivative(col, P_s)
    rel = np.abs(fd - analytic) / np.abs(analytic)
    sign_ok = np.sign(fd) == np.sign(coef.Psi_s - coef.Psi_w)[:, None]
    worst = float(rel.max())
    passed = worst < 1e-4 and bool(sign_ok.all())
    return PropertyResult("direct-case derivative vs finite differences", passed, worst, 1e-4,
                          instances * points, time.perf_counter() - t0,
                          f"sign mismatches={int((~sign_ok).sum())}")


def check_eta_equal_rates(seed=0, instances=1000) -> PropertyResult:
    """At P_s = eta (inside the window) the two VLC rates of the relay case coincide."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, r_th = _feasible_hybrid_instances(rng, 4 * instances)
    bd = case_bounds(coef, p, r_th)
    inside = np.flatnonzero((bd.A_bar < bd.eta) & (bd.eta < bd.B_s))[:instances]
    eta = bd.eta[inside]
    R_s = rate_strong(coef, eta, inside)
    R_ws = rate_weak_at_strong(coef, eta, p[inside] - eta, inside)
    rel = np.abs(R_s - R_ws) / R_s
    worst = float(rel.max())
    return PropertyResult("equal-rate split eta", worst < 1e-9 and len(inside) == instances,
                          worst, 1e-9, len(inside), time.perf_counter() - t0)


def check_selection_vs_oracle(seed=0, instances=300, grid_points=20_001,
                              solve: Callable = cellmod.solve_cell) -> PropertyResult:
    """Full per-cell solver (both links) against the exhaustive grid oracle."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, r_th = random_instances(rng, instances)
    worst, mismatches = 0.0, 0
    for k in range(instances):
        one = _one(coef, k)
        ref = oracle_cell(one, p[k], r_th[k], 0, GridSpec(grid_points))
        got = solve(one, p[k], r_th[k], 0)
        bound = float(grid_error_bound(one, p[k], 0, grid_points))
        if bool(ref.feasible) != bool(got.feasible):
            mismatches += 1
            worst = np.inf
            continue
        if not bool(ref.feasible):
            continue
        # a link choice that differs from the grid's is fine only as a near-tie
        gap = (float(ref.cell_objective) - float(got.cell_objective)) / bound
        worst = max(worst, gap)
        mismatches += gap > 1.0
    rate = mismatches / instances
    return PropertyResult("cell solver vs exhaustive oracle", rate <= 0.01, worst, 1.0, instances,
                          time.perf_counter() - t0, f"mismatch rate={rate:.3%}")


def check_window_edges(seed=0, instances=1000) -> PropertyResult:
    """Rates sit exactly on their targets at the window edges."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    coef, p, r_th = random_instances(rng, instances)
    bd = case_bounds(coef, p, r_th)
    errs = []
    m = bd.A_s > 0
    errs.append(np.abs(rate_strong(coef, bd.A_s)[m] - r_th[m]) / r_th[m])
    m = (bd.C_w < p / 2) & (bd.C_w > 0)
    errs.append(np.abs(rate_weak_direct(coef, bd.C_w, p - bd.C_w)[m] - r_th[m]) / r_th[m])
    m = (bd.B_s < p / 2) & (bd.B_s > 0)
    errs.append(np.abs(rate_weak_at_strong(coef, bd.B_s, p - bd.B_s)[m] - r_th[m]) / r_th[m])
    relay_floor = (p / np.exp2(2 * coef.R_rf / coef.B_v)
                   - (1 - np.exp2(-2 * coef.R_rf / coef.B_v)) / coef.Psi_s)
    m = (relay_floor > bd.A_s) & (relay_floor < p)
    errs.append(np.abs(rate_weak_at_strong(coef, relay_floor, p - relay_floor)[m] - coef.R_rf[m]) / coef.R_rf[m])
    worst = float(max((e.max() for e in errs if e.size), default=0.0))
    return PropertyResult("window edges hit their targets", worst < 1e-9, worst, 1e-9, instances,
                          time.perf_counter() - t0)


def check_outer_loop(seed=0, scenarios=3, r_th=4e6) -> PropertyResult:
    """Monotone sum-rate trace and exactly two evaluations per line-search step (2x2 grid)."""
    t0 = time.perf_counter()
    template = ScenarioTemplate(Layout.defaults(rows=2, cols=2), PhysicalParams.defaults())
    worst_drop, accounting_ok = 0.0, True
    for i in range(scenarios):
        scenario = template.draw(0.95, seed + i)
        _, _, trace = optimize(scenario, r_th, OptimizerConfig(max_rounds=4))
        worst_drop = max(worst_drop, float(np.max(-np.diff(trace.sum_rates), initial=0.0)))
        accounting_ok &= trace.search_evaluations == 2 * trace.search_iterations
    return PropertyResult("power loop monotone, 2 evaluations per step",
                          worst_drop <= 0.0 and accounting_ok, worst_drop, 0.0, scenarios,
                          time.perf_counter() - t0)


def run_all(seed: int = 0, quick: bool = False) -> list[PropertyResult]:
    n = 200 if quick else 1000
    return [
        check_direct_optimality(seed, n, 20_001 if quick else 100_000),
        check_hybrid_flatness(seed, n),
        check_derivative_sign(seed, n),
        check_eta_equal_rates(seed, n),
        check_window_edges(seed, n),
        check_selection_vs_oracle(seed, 100 if quick else 300),
        check_outer_loop(seed),
    ]
