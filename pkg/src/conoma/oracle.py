"""Brute-force reference solutions for small instances.

Nothing here touches the closed-form solver: the per-cell oracle sweeps the
strong user's share directly through the rate equations, and the network
oracle sweeps AP power vectors on a grid on top of it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cell import CellSolution
from .channel import NetworkScenario
from .rates import (
    LN2,
    CellCoefficients,
    PowerState,
    RateReport,
    compute_coefficients,
    evaluate_with,
    meets,
    rate_strong,
    rate_weak_at_strong,
    rate_weak_direct,
)


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int
    axes: tuple[str, ...] = ("P_s",)

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be at least 2")


CELL_GRID = GridSpec(100_000, ("P_s",))
NETWORK_GRID = GridSpec(64, ("p",))
NETWORK_CELL_GRID = GridSpec(2001, ("P_s",))


def _column(arr, cell):
    return np.asarray(arr if cell is None else arr[cell], dtype=float)[..., None]


def oracle_cell(coef: CellCoefficients, p_k, r_th: float, cell=None,
                grid: GridSpec = CELL_GRID, allow_hybrid: bool = True) -> CellSolution:
    """Grid maximiser of the per-cell problem over P_s in [0, p_k/2] and x in {0, 1}.

    Works on one cell or, with ``cell=None``, on every cell at once. When no
    grid point is feasible the point with the best worse-off user is returned
    with ``feasible=False``. Ties prefer x = 0, then the smaller P_s.
    """
    n = grid.points_per_axis
    p_k = np.asarray(p_k, dtype=float)
    P_s = p_k[..., None] * np.linspace(0.0, 0.5, n)
    P_w = p_k[..., None] - P_s
    psi_s, psi_w, r_rf = (_column(a, cell) for a in (coef.Psi_s, coef.Psi_w, coef.R_rf))
    sub = CellCoefficients(coef.c, coef.B_v, None, None, psi_s, psi_w, r_rf)

    R_s = rate_strong(sub, P_s)
    weak = [rate_weak_direct(sub, P_s, P_w)]
    if allow_hybrid:
        weak.append(np.minimum(rate_weak_at_strong(sub, P_s, P_w), r_rf))
    # candidates laid out x-major so argmax ties land on x = 0 first
    weak = np.concatenate(weak, axis=-1)
    R_s_all = np.concatenate([R_s] * (weak.shape[-1] // n), axis=-1)
    P_s_all = np.concatenate([P_s] * (weak.shape[-1] // n), axis=-1)

    feasible = meets(R_s_all, r_th) & meets(weak, r_th)
    any_feasible = feasible.any(axis=-1)
    score = np.where(feasible, R_s_all + weak, -np.inf)
    idx = np.where(any_feasible, np.argmax(score, axis=-1),
                   np.argmax(np.minimum(R_s_all, weak), axis=-1))

    def pick(arr):
        return np.take_along_axis(arr, np.asarray(idx)[..., None], axis=-1)[..., 0]

    chosen = pick(P_s_all)
    return CellSolution(
        P_s=chosen,
        P_w=p_k - chosen,
        x=np.asarray(idx // n, dtype=int),
        cell_objective=pick(R_s_all) + pick(weak),
        feasible=any_feasible,
        weak_rate=pick(weak),
        strong_rate=pick(R_s_all),
    )


def grid_error_bound(coef: CellCoefficients, p_k, cell=None,
                     n_points: int = CELL_GRID.points_per_axis):
    """Largest objective change across one P_s grid step (Lipschitz constant times step).

    Both per-cell objectives satisfy |d/dP_s| <= B_v/(2 ln 2) * (Psi_s + max(Psi_s, Psi_w)).
    """
    psi_s = coef.Psi_s if cell is None else coef.Psi_s[cell]
    psi_w = coef.Psi_w if cell is None else coef.Psi_w[cell]
    lipschitz = coef.B_v / (2 * LN2) * (psi_s + np.maximum(psi_s, psi_w))
    return lipschitz * np.asarray(p_k) / 2 / (n_points - 1)


def oracle_network(scenario: NetworkScenario, r_th: float, grid: GridSpec = NETWORK_GRID,
                   cell_grid: GridSpec = NETWORK_CELL_GRID,
                   p_range: tuple[float, float] | None = None,
                   allow_hybrid: bool = True) -> tuple[PowerState, RateReport]:
    """Exhaustive search over AP power vectors on a grid (N <= 3).

    Every grid point is solved cell by cell with :func:`oracle_cell`. The
    default power range is the whole box ``[0, P_max]``, a superset of every
    bracket the sequential search can visit. Points are ranked the way the
    optimizer ranks them: more feasible cells first, then sum rate.
    """
    n = scenario.n_cells
    if n > 3:
        raise ValueError("oracle_network is limited to N <= 3")
    P_max = scenario.params.P_max
    lo, hi = p_range if p_range is not None else (0.0, P_max)
    levels = np.unique(np.linspace(lo, hi, grid.points_per_axis))

    best = None
    for combo in itertools.product(levels, repeat=n):
        p = np.array(combo)
        coef = compute_coefficients(scenario, p)
        sol = oracle_cell(coef, p, r_th, None, cell_grid, allow_hybrid)
        state = PowerState(p=p, P_s=sol.P_s, P_w=sol.P_w, x=sol.x)
        report = evaluate_with(coef, state, r_th, P_max)
        key = (report.n_feasible, report.sum_rate)
        if best is None or key > best[0]:
            best = (key, state, report)
    return best[1], best[2]
