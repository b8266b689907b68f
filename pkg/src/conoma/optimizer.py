"""Sequential per-AP transmit-power search over the whole network.

Starting from every AP at full power, APs are visited from the most to the
least interfering. Each visit runs a golden-section search on that AP's
power, scoring every candidate by re-solving all cells in closed form and
summing the network rate. A candidate is kept only if the network objective
does not drop, so the objective trace is monotone.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cell import solve_cells
from .channel import NetworkScenario
from .rates import CellCoefficients, PowerState, RateReport, compute_coefficients, evaluate_with

THETA = 1.618


@dataclass(frozen=True)
class OptimizerConfig:
    epsilon: float = 1e-3
    max_rounds: int = 3
    theta: float = THETA
    track_history: bool = True
    reset_bracket: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.theta != THETA:
            raise ValueError(f"theta is fixed at {THETA}")


@dataclass
class SearchStats:
    iterations: int = 0
    evaluations: int = 0


def golden_section(objective: Callable[[float], object], lo: float, hi: float,
                   epsilon: float, *, theta: float = THETA,
                   stats: SearchStats | None = None) -> float:
    """Maximise ``objective`` on ``[lo, hi]``; returns the midpoint of the final bracket.

    Both interior points are evaluated afresh on every iteration (two calls
    per iteration). Objective values only need to be mutually comparable,
    so tuples work as lexicographic scores. Equal scores shrink the bracket
    from both sides. For unimodal objectives the result is within
    ``epsilon`` of the maximiser; otherwise it is merely a local pick.
    """
    if lo > hi:
        raise ValueError(f"empty bracket: lo={lo} > hi={hi}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n, m = float(lo), float(hi)
    while m - n > epsilon:
        a = (theta - 1) * n + (2 - theta) * m
        b = (2 - theta) * n + (theta - 1) * m
        f_a, f_b = objective(a), objective(b)
        if stats is not None:
            stats.iterations += 1
            stats.evaluations += 2
        if f_a > f_b:
            m = b
        elif f_b > f_a:
            n = a
        else:
            n, m = a, b
    return (m + n) / 2


def p_min(coef: CellCoefficients, r_th: float, cell: int, P_max: float) -> float:
    """Least AP power that can meet both users' targets over the direct link."""
    A = 2.0 ** (2 * r_th / coef.B_v)
    if A == 1.0:
        return 0.0
    psi_s, psi_w = float(coef.Psi_s[cell]), float(coef.Psi_w[cell])
    if psi_s == 0.0 or psi_w == 0.0:
        return P_max
    return min(P_max, (A * A - A) / psi_s + (A - 1) / psi_w)


def interference_rank(scenario: NetworkScenario, p) -> list[int]:
    """Cells by descending p_k times the squared gain from AP k to every other cell's users."""
    p = np.asarray(p, dtype=float)
    to_others = (scenario.h_strong_sq.sum(axis=0) - np.diagonal(scenario.h_strong_sq)
                 + scenario.h_weak_sq.sum(axis=0) - np.diagonal(scenario.h_weak_sq))
    score = p * to_others
    return [int(k) for k in np.argsort(-score, kind="stable")]


@dataclass
class TraceRecord:
    iteration: int
    ap: int
    p_k: float
    sum_rate: float


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)
    rounds_completed: int = 0
    converged: bool = False
    network_evaluations: int = 0
    search_iterations: int = 0
    search_evaluations: int = 0

    @property
    def sum_rates(self) -> np.ndarray:
        return np.array([r.sum_rate for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["iteration", "ap", "p_k", "sum_rate"])
        for r in self.records:
            writer.writerow([r.iteration, r.ap, repr(r.p_k), repr(r.sum_rate)])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class NetworkPoint:
    """One fully solved power vector."""

    state: PowerState
    report: RateReport
    coef: CellCoefficients

    @property
    def score(self) -> tuple[int, float]:
        # Any fully feasible point outranks any infeasible one (an infeasible
        # candidate is worth -inf against a feasible incumbent); among
        # infeasible points, more satisfied cells wins.
        return (self.report.n_feasible, self.report.sum_rate)


def solve_network(scenario: NetworkScenario, p, r_th: float, allow_hybrid: bool = True) -> NetworkPoint:
    """Closed-form split and link choice in every cell at fixed AP powers."""
    p = np.asarray(p, dtype=float)
    coef = compute_coefficients(scenario, p)
    sol = solve_cells(coef, p, r_th, allow_hybrid)
    state = PowerState(p=p, P_s=sol.P_s, P_w=sol.P_w, x=sol.x)
    report = evaluate_with(coef, state, r_th, scenario.params.P_max)
    return NetworkPoint(state, report, coef)


def optimize(scenario: NetworkScenario, r_th: float, config: OptimizerConfig | None = None,
             allow_hybrid: bool = True) -> tuple[PowerState, RateReport, ConvergenceTrace]:
    config = config or OptimizerConfig()
    P_max = scenario.params.P_max
    trace = ConvergenceTrace()

    def evaluate_p(p):
        trace.network_evaluations += 1
        return solve_network(scenario, p, r_th, allow_hybrid)

    p = np.full(scenario.n_cells, P_max)
    best = evaluate_p(p)
    trace.records.append(TraceRecord(0, -1, P_max, best.report.sum_rate))
    stats = SearchStats()
    iteration = 0

    for _ in range(config.max_rounds):
        largest_move = 0.0
        for k in interference_rank(scenario, p):
            hi = P_max if config.reset_bracket else p[k]
            # the floor moves with everyone else's power; never above the bracket top
            lo = min(p_min(best.coef, r_th, k, P_max), hi)

            def score(pk, k=k):
                q = p.copy()
                q[k] = pk
                return evaluate_p(q).score

            before = stats.evaluations
            pk = golden_section(score, lo, hi, config.epsilon, theta=config.theta, stats=stats)
            trace.search_evaluations += stats.evaluations - before

            q = p.copy()
            q[k] = pk
            candidate = evaluate_p(q)
            if candidate.score >= best.score:
                largest_move = max(largest_move, abs(pk - p[k]))
                p, best = q, candidate
            iteration += 1
            if config.track_history:
                trace.records.append(TraceRecord(iteration, k, float(p[k]), best.report.sum_rate))
        trace.rounds_completed += 1
        if largest_move <= config.epsilon:
            trace.converged = True
            break

    trace.search_iterations = stats.iterations
    return best.state, best.report, trace


def fixed_power(scenario: NetworkScenario, r_th: float, allow_hybrid: bool = True,
                p=None) -> tuple[PowerState, RateReport]:
    """Per-cell closed forms with every AP at ``p`` (default full power)."""
    if p is None:
        p = np.full(scenario.n_cells, scenario.params.P_max)
    point = solve_network(scenario, p, r_th, allow_hybrid)
    return point.state, point.report
