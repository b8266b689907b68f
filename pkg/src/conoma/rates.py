"""Achievable rates of the two-user cooperative NOMA cell and their coefficients.

Every rate is written in terms of the normalised coefficients ``Psi`` (the
channel gain over interference-plus-noise), so the functions work on one
cell or on all cells at once via numpy broadcasting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import NetworkScenario

LN2 = math.log(2.0)

# Relative slack when testing rate >= R_th; closed-form boundaries land on
# R_th up to rounding.
RATE_RTOL = 1e-9
POWER_RTOL = 1e-12


def compute_c(b: float, I_H: float) -> float:
    """Lower-bound constant of the optical-intensity channel capacity."""
    if not (b > 0 and I_H > 0):
        raise ValueError("b and I_H must be positive")
    if b > I_H:
        raise ValueError(f"DC bias b={b} exceeds the LED current limit I_H={I_H}")
    return min(1 / (2 * math.pi * math.e), math.e * b**2 / (I_H**2 * 2 * math.pi))


def log2_1p(x):
    return np.log1p(x) / LN2


@dataclass(frozen=True, eq=False)
class CellCoefficients:
    c: float
    B_v: float
    Z_s: np.ndarray
    Z_w: np.ndarray
    Psi_s: np.ndarray
    Psi_w: np.ndarray
    R_rf: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.Psi_s)


def rf_rate(scenario: NetworkScenario) -> np.ndarray:
    """Rate the strong user can relay to the weak user over RF, per cell."""
    p = scenario.params
    snr = scenario.harvested_power * scenario.h_rf**2 / (p.B_RF * p.N_RF)
    return p.B_RF * log2_1p(snr)


def compute_coefficients(scenario: NetworkScenario, p) -> CellCoefficients:
    params = scenario.params
    p = np.asarray(p, dtype=float)
    if p.shape != (scenario.n_cells,):
        raise ValueError(f"power vector must have length {scenario.n_cells}")
    c = compute_c(params.b, params.I_H)
    gain = c * params.nu**2 * params.rho**2
    noise = params.B_v * params.N_v

    hs2, hw2 = scenario.h_strong_sq, scenario.h_weak_sq
    own_s, own_w = np.diagonal(hs2), np.diagonal(hw2)
    interf_s = hs2 @ p - own_s * p
    interf_w = hw2 @ p - own_w * p
    # guard against tiny negative residue from the subtraction
    Z_s = noise + gain * np.maximum(interf_s, 0.0)
    Z_w = noise + gain * np.maximum(interf_w, 0.0)
    return CellCoefficients(
        c=c,
        B_v=params.B_v,
        Z_s=Z_s,
        Z_w=Z_w,
        Psi_s=gain * own_s / Z_s,
        Psi_w=gain * own_w / Z_w,
        R_rf=rf_rate(scenario),
    )


def _pick(arr, cell):
    return arr if cell is None else arr[cell]


def rate_strong(coef: CellCoefficients, P_s, cell=None):
    """Strong-user rate after SIC; ``cell=None`` means all cells."""
    return coef.B_v / 2 * log2_1p(_pick(coef.Psi_s, cell) * P_s)


def _sinr_rate(B_v, psi, P_own, P_interf):
    return B_v / 2 * log2_1p(psi * P_own / (1 + psi * P_interf))


def rate_weak_direct(coef: CellCoefficients, P_s, P_w, cell=None):
    return _sinr_rate(coef.B_v, _pick(coef.Psi_w, cell), P_w, P_s)


def rate_weak_at_strong(coef: CellCoefficients, P_s, P_w, cell=None):
    """Rate at which the strong user decodes the weak user's message."""
    return _sinr_rate(coef.B_v, _pick(coef.Psi_s, cell), P_w, P_s)


def rate_weak_hybrid(coef: CellCoefficients, P_s, P_w, cell=None):
    return np.minimum(rate_weak_at_strong(coef, P_s, P_w, cell), _pick(coef.R_rf, cell))


def meets(rate, r_th):
    """``rate >= r_th`` up to the rounding slack of the closed forms."""
    return rate >= r_th * (1 - RATE_RTOL)


@dataclass(frozen=True, eq=False)
class PowerState:
    p: np.ndarray
    P_s: np.ndarray
    P_w: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        for name in ("p", "P_s", "P_w"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=int))

    def valid_cells(self, P_max: float) -> np.ndarray:
        """Per-cell check of the power constraints."""
        tol = POWER_RTOL * max(P_max, 1.0)
        return (
            (self.P_s >= 0)
            & (self.P_s <= self.P_w + tol)
            & (self.P_s + self.P_w <= self.p + tol)
            & (self.p <= P_max + tol)
            & np.isin(self.x, (0, 1))
        )

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "P_s": self.P_s.tolist(),
                "P_w": self.P_w.tolist(), "x": self.x.tolist()}


@dataclass(frozen=True, eq=False)
class RateReport:
    R_s: np.ndarray
    R_w_direct: np.ndarray
    R_w_to_s: np.ndarray
    R_w_hybrid: np.ndarray
    R_w_effective: np.ndarray
    sum_rate: float
    jain: float
    feasible: np.ndarray

    @property
    def all_feasible(self) -> bool:
        return bool(np.all(self.feasible))

    @property
    def n_feasible(self) -> int:
        return int(np.count_nonzero(self.feasible))

    def to_dict(self) -> dict:
        return {
            "R_s": self.R_s.tolist(),
            "R_w_direct": self.R_w_direct.tolist(),
            "R_w_to_s": self.R_w_to_s.tolist(),
            "R_w_hybrid": self.R_w_hybrid.tolist(),
            "R_w_effective": self.R_w_effective.tolist(),
            "sum_rate": self.sum_rate,
            "jain": self.jain,
            "feasible": self.feasible.tolist(),
        }


def jain_index(rates) -> float:
    """Jain's fairness index (sum r)^2 / (n * sum r^2); 1 for an empty or all-zero vector."""
    r = np.asarray(rates, dtype=float)
    if r.size == 0:
        return 1.0
    denom = r.size * float(np.dot(r, r))
    if denom == 0.0:
        return 1.0
    return float(np.sum(r)) ** 2 / denom


def evaluate_with(coef: CellCoefficients, state: PowerState, r_th: float, P_max: float) -> RateReport:
    """Rates and feasibility of ``state`` given precomputed coefficients."""
    R_s = rate_strong(coef, state.P_s)
    R_w = rate_weak_direct(coef, state.P_s, state.P_w)
    R_ws = rate_weak_at_strong(coef, state.P_s, state.P_w)
    R_hl = np.minimum(R_ws, coef.R_rf)
    R_eff = np.where(state.x == 1, R_hl, R_w)
    feasible = meets(R_s, r_th) & meets(R_eff, r_th) & state.valid_cells(P_max)
    return RateReport(
        R_s=R_s,
        R_w_direct=R_w,
        R_w_to_s=R_ws,
        R_w_hybrid=R_hl,
        R_w_effective=R_eff,
        sum_rate=float(np.sum(R_s) + np.sum(R_eff)),
        jain=jain_index(np.concatenate([R_s, R_eff])),
        feasible=feasible,
    )


def evaluate(scenario: NetworkScenario, state: PowerState, R_th: float) -> RateReport:
    coef = compute_coefficients(scenario, state.p)
    return evaluate_with(coef, state, R_th, scenario.params.P_max)
