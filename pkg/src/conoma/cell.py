"""Closed-form power split and link selection for one cell at fixed AP power.

With the AP power ``p`` fixed, the weak user's power is ``p - P_s`` and the
problem reduces to choosing the strong user's share ``P_s`` in ``[0, p/2]``
and the serving link ``x``:

* ``x = 0`` (direct VLC): the objective is monotone in ``P_s`` with the sign
  of ``Psi_s - Psi_w``, so the optimum sits on an end of the QoS window
  ``[A_s, C_w]``.
* ``x = 1`` (VLC then RF relay): ``R_s + R_{w->s}`` does not depend on the
  split, so any point of ``[A_bar, B_s]`` is optimal; we pick the one that
  equalises the two VLC rates, clamped into the window.

All functions accept a single cell (``cell`` index) or every cell at once
(``cell=None``, arrays in and out).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rates import (
    CellCoefficients,
    meets,
    rate_strong,
    rate_weak_at_strong,
    rate_weak_direct,
)

DIRECT, HYBRID = 0, 1


def _over(num, psi):
    """``num / psi`` with the convention ``0 / 0 = 0`` (no requirement, no channel)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.divide(num, psi)
    return np.where(num == 0, 0.0, out)


def _sel(arr, cell):
    return arr if cell is None else arr[cell]


@dataclass(frozen=True, eq=False)
class CaseBounds:
    A_s: np.ndarray
    C_w: np.ndarray
    A_bar: np.ndarray
    B_s: np.ndarray
    eta: np.ndarray


def case_bounds(coef: CellCoefficients, p_k, r_th: float, cell=None) -> CaseBounds:
    psi_s = _sel(coef.Psi_s, cell)
    psi_w = _sel(coef.Psi_w, cell)
    r_rf = _sel(coef.R_rf, cell)
    p_k = np.asarray(p_k, dtype=float)
    half = p_k / 2

    # 2^(2R/B_v): the VLC rates carry a 1/2 pre-log
    A = np.exp2(2 * r_th / coef.B_v)
    with np.errstate(over="ignore"):
        # an unbounded relay gives D = inf, which is the right limit below
        D = np.exp2(2 * r_rf / coef.B_v)

    A_s = np.maximum(0.0, _over(A - 1, psi_s))
    # (1 + Psi p) / (Psi A) - 1/Psi, rearranged to stay finite for Psi -> 0
    C_w = np.minimum(half, p_k / A - _over(1 - 1 / A, psi_w))
    B_s = np.minimum(half, p_k / A - _over(1 - 1 / A, psi_s))
    # smallest P_s with R_{w->s} <= R_rf
    relay_floor = p_k / D - _over(1 - 1 / D, psi_s)
    A_bar = np.maximum(A_s, relay_floor)
    # (sqrt(1 + Psi p) - 1) / Psi without cancellation
    eta = p_k / (np.sqrt(1 + psi_s * p_k) + 1)
    return CaseBounds(A_s=A_s, C_w=C_w, A_bar=A_bar, B_s=B_s, eta=eta)


@dataclass(frozen=True, eq=False)
class CellSolution:
    """Chosen split for one cell (scalars) or for all cells (arrays)."""

    P_s: np.ndarray
    P_w: np.ndarray
    x: np.ndarray
    cell_objective: np.ndarray
    feasible: np.ndarray
    weak_rate: np.ndarray
    strong_rate: np.ndarray

    def item(self, k: int) -> CellSolution:
        return CellSolution(*(np.asarray(getattr(self, f))[k] for f in _SOLUTION_FIELDS))


_SOLUTION_FIELDS = ("P_s", "P_w", "x", "cell_objective", "feasible", "weak_rate", "strong_rate")


def _finish(coef, p_k, P_s, x, feasible, r_th, cell) -> CellSolution:
    P_w = p_k - P_s
    R_s = rate_strong(coef, P_s, cell)
    if x == DIRECT:
        R_w = rate_weak_direct(coef, P_s, P_w, cell)
    else:
        R_w = np.minimum(rate_weak_at_strong(coef, P_s, P_w, cell), _sel(coef.R_rf, cell))
    # keep the solver's flag honest against the rate equations it promises
    feasible = feasible & meets(R_s, r_th) & meets(R_w, r_th)
    return CellSolution(
        P_s=P_s,
        P_w=P_w,
        x=np.full(np.shape(P_s), x, dtype=int),
        cell_objective=R_s + R_w,
        feasible=feasible,
        weak_rate=R_w,
        strong_rate=R_s,
    )


def solve_case_direct(coef: CellCoefficients, p_k, r_th: float, cell=None,
                      bounds: CaseBounds | None = None) -> CellSolution:
    """Optimal split when the weak user is served over direct VLC (x = 0)."""
    bd = bounds or case_bounds(coef, p_k, r_th, cell)
    psi_s, psi_w = _sel(coef.Psi_s, cell), _sel(coef.Psi_w, cell)
    p_k = np.asarray(p_k, dtype=float)
    feasible = bd.A_s <= bd.C_w
    # ties (Psi_s == Psi_w) give a flat objective; A_s leaves the weak user the most margin
    P_s = np.where(psi_s > psi_w, bd.C_w, bd.A_s)
    # infeasible: meet the strong user's target as far as p/2 allows
    P_s = np.where(feasible, P_s, np.minimum(bd.A_s, p_k / 2))
    return _finish(coef, p_k, P_s, DIRECT, feasible, r_th, cell)


def solve_case_hybrid(coef: CellCoefficients, p_k, r_th: float, cell=None,
                      bounds: CaseBounds | None = None) -> CellSolution:
    """Split when the weak user is relayed by the strong user over RF (x = 1)."""
    bd = bounds or case_bounds(coef, p_k, r_th, cell)
    p_k = np.asarray(p_k, dtype=float)
    half = p_k / 2
    window = bd.A_bar <= bd.B_s
    P_s = np.clip(bd.eta, bd.A_bar, bd.B_s)

    # Relay-limited corner: R_{w->s} stays above R_rf over all of [0, p/2], so
    # the window above is empty even though the objective R_s + R_rf is
    # feasible and increasing; its maximiser is P_s = p/2.
    r_rf = _sel(coef.R_rf, cell)
    relay_limited = ~window & (bd.A_bar > half) & (bd.A_s <= half) & meets(r_rf, r_th)
    P_s = np.where(relay_limited, half, P_s)

    feasible = window | relay_limited
    P_s = np.where(feasible, P_s, bd.eta)
    return _finish(coef, p_k, P_s, HYBRID, feasible, r_th, cell)


def _choose(direct: CellSolution, hybrid: CellSolution) -> CellSolution:
    both = direct.feasible & hybrid.feasible
    take_hybrid = np.where(
        both,
        hybrid.cell_objective > direct.cell_objective,
        np.where(
            direct.feasible | hybrid.feasible,
            hybrid.feasible,
            # neither feasible: the case that serves its worse-off user better
            np.minimum(hybrid.strong_rate, hybrid.weak_rate)
            > np.minimum(direct.strong_rate, direct.weak_rate),
        ),
    )
    return CellSolution(*(np.where(take_hybrid, getattr(hybrid, f), getattr(direct, f))
                          for f in _SOLUTION_FIELDS))


def solve_cell(coef: CellCoefficients, p_k, r_th: float, cell=None,
               allow_hybrid: bool = True) -> CellSolution:
    """Best feasible (P_s, x) for the cell; ties go to the direct link.

    With ``allow_hybrid=False`` the relay option is withheld (plain NOMA).
    """
    bd = case_bounds(coef, p_k, r_th, cell)
    direct = solve_case_direct(coef, p_k, r_th, cell, bd)
    if not allow_hybrid:
        return direct
    return _choose(direct, solve_case_hybrid(coef, p_k, r_th, cell, bd))


def solve_cells(coef: CellCoefficients, p, r_th: float, allow_hybrid: bool = True) -> CellSolution:
    """Run the per-cell solver on every cell (array-valued solution)."""
    return solve_cell(coef, p, r_th, None, allow_hybrid)
