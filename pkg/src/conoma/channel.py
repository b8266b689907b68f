"""Network geometry, VLC/RF channel gains and relay energy harvesting.

The VLC link is the Lambertian line-of-sight model (no reflections). The RF
strong-to-weak link uses log-distance path loss, and the strong user's
harvested power follows the usual solar-cell model driven by the received
DC photocurrent. All three are imported models with documented defaults.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

SCENARIO_FORMAT = "conoma-scenario/1"


def load_defaults() -> dict[str, dict[str, Any]]:
    """Return the packaged defaults table, ``{section: {key: {value, provenance}}}``."""
    text = resources.files("conoma").joinpath("defaults.json").read_text()
    return json.loads(text)


def default_values(section: str) -> dict[str, Any]:
    return {k: v["value"] for k, v in load_defaults()[section].items()}


@dataclass(frozen=True)
class PhysicalParams:
    nu: float
    rho: float
    b: float
    I_H: float
    B_v: float
    N_v: float
    B_RF: float
    N_RF: float
    lambertian_order: float
    pd_area: float
    fov_half_angle: float
    optical_filter_gain: float
    concentrator_gain: float
    eh_fill_factor: float
    eh_thermal_voltage: float
    eh_dark_current: float
    rf_path_loss_exponent: float
    rf_ref_loss_db: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{f.name} must be a finite positive number, got {value!r}")
        if self.b >= self.I_H:
            raise ValueError(f"DC bias b={self.b} must be below I_H={self.I_H}")
        if self.fov_half_angle > math.pi / 2:
            raise ValueError("fov_half_angle must lie in (0, pi/2]")

    @classmethod
    def defaults(cls, **overrides: float) -> PhysicalParams:
        values = default_values("physical")
        unknown = set(overrides) - set(values)
        if unknown:
            raise ValueError(f"unknown physical parameter(s): {', '.join(sorted(unknown))}")
        values.update(overrides)
        return cls(**{k: float(v) for k, v in values.items()})

    @property
    def P_max(self) -> float:
        """Largest AP transmit power the LED current limit allows, (I_H - b)^2."""
        return (self.I_H - self.b) ** 2


def _as_points(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must be a list of 3-D points")
    return arr


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """Immutable input to one optimization.

    ``h_strong[k, q]`` is the VLC gain from AP ``q`` to the strong user of cell
    ``k``; ``h_weak`` likewise for weak users. ``h_rf[k]`` is the RF amplitude
    gain between the two users of cell ``k``.
    """

    ap_positions: np.ndarray
    strong_user_positions: np.ndarray
    weak_user_positions: np.ndarray
    h_strong: np.ndarray
    h_weak: np.ndarray
    h_rf: np.ndarray
    params: PhysicalParams

    def __post_init__(self):
        n = len(self.h_rf)
        for name in ("ap_positions", "strong_user_positions", "weak_user_positions"):
            pts = _as_points(getattr(self, name), name)
            if len(pts) != n:
                raise ValueError(f"{name} has {len(pts)} entries, expected {n}")
            object.__setattr__(self, name, pts)
        for name in ("h_strong", "h_weak"):
            h = np.asarray(getattr(self, name), dtype=float)
            if h.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}, got {h.shape}")
            if not np.all(np.isfinite(h)) or np.any(h < 0):
                raise ValueError(f"{name} must hold finite nonnegative gains")
            object.__setattr__(self, name, h)
        h_rf = np.asarray(self.h_rf, dtype=float)
        if h_rf.ndim != 1 or not np.all(np.isfinite(h_rf)) or np.any(h_rf < 0):
            raise ValueError("h_rf must be a vector of finite nonnegative gains")
        object.__setattr__(self, "h_rf", h_rf)
        own = np.arange(n)
        if np.any(self.h_strong[own, own] < self.h_weak[own, own]):
            raise ValueError("strong user must have the larger own-AP VLC gain in every cell")

    @property
    def n_cells(self) -> int:
        return len(self.h_rf)

    @property
    def h_vlc(self) -> np.ndarray:
        """Stacked gain matrix: rows 0..N-1 strong users, N..2N-1 weak users."""
        return np.vstack([self.h_strong, self.h_weak])

    @cached_property
    def h_strong_sq(self) -> np.ndarray:
        return self.h_strong**2

    @cached_property
    def h_weak_sq(self) -> np.ndarray:
        return self.h_weak**2

    @cached_property
    def harvested_power(self) -> np.ndarray:
        return np.array([harvested_rf_power(self, k) for k in range(self.n_cells)])

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": SCENARIO_FORMAT,
            "params": asdict(self.params),
            "ap_positions": self.ap_positions.tolist(),
            "strong_user_positions": self.strong_user_positions.tolist(),
            "weak_user_positions": self.weak_user_positions.tolist(),
            "h_strong": self.h_strong.tolist(),
            "h_weak": self.h_weak.tolist(),
            "h_rf": self.h_rf.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> NetworkScenario:
        if data.get("format") != SCENARIO_FORMAT:
            raise ValueError(f"not a scenario document (format must be {SCENARIO_FORMAT!r})")
        expected = {"format", "params", "ap_positions", "strong_user_positions",
                    "weak_user_positions", "h_strong", "h_weak", "h_rf"}
        unknown = set(data) - expected
        if unknown:
            raise ValueError(f"unknown scenario key(s): {', '.join(sorted(unknown))}")
        missing = expected - set(data)
        if missing:
            raise ValueError(f"missing scenario key(s): {', '.join(sorted(missing))}")
        params = data["params"]
        names = {f.name for f in fields(PhysicalParams)}
        if set(params) != names:
            bad = sorted(set(params) ^ names)
            raise ValueError(f"scenario params mismatch on key(s): {', '.join(bad)}")
        return cls(
            ap_positions=data["ap_positions"],
            strong_user_positions=data["strong_user_positions"],
            weak_user_positions=data["weak_user_positions"],
            h_strong=data["h_strong"],
            h_weak=data["h_weak"],
            h_rf=data["h_rf"],
            params=PhysicalParams(**params),
        )


def save_scenario(scenario: NetworkScenario, path: str | Path) -> None:
    # json writes floats with repr(), which round-trips doubles exactly
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=1) + "\n")


def load_scenario(path: str | Path) -> NetworkScenario:
    """Read a scenario file.

    Raises ``json.JSONDecodeError`` (carrying line/column) for malformed text
    and ``ValueError`` for well-formed JSON that is not a valid scenario.
    """
    return NetworkScenario.from_dict(json.loads(Path(path).read_text()))


def vlc_channel_gain(ap_pos, user_pos, params: PhysicalParams) -> float:
    """Lambertian LOS DC gain from a downward-facing LED to an upward-facing PD."""
    ap = np.asarray(ap_pos, dtype=float)
    user = np.asarray(user_pos, dtype=float)
    d = float(np.linalg.norm(ap - user))
    if d == 0.0:
        raise ValueError("degenerate geometry: AP and user coincide")
    height = ap[2] - user[2]
    if height <= 0:
        raise ValueError("user must be below the ceiling plane of the AP")
    # both normals are vertical, so irradiance and incidence angles coincide
    cos_angle = height / d
    if math.acos(min(cos_angle, 1.0)) > params.fov_half_angle:
        return 0.0
    m = params.lambertian_order
    return (
        (m + 1) * params.pd_area / (2 * math.pi * d**2)
        * cos_angle**m
        * params.optical_filter_gain
        * params.concentrator_gain
        * cos_angle
    )


def rf_channel_gain(pos_a, pos_b, params: PhysicalParams) -> float:
    """Amplitude gain of the log-distance RF link (d in metres, 1 m reference)."""
    d = float(np.linalg.norm(np.asarray(pos_a, dtype=float) - np.asarray(pos_b, dtype=float)))
    if d == 0.0:
        raise ValueError("degenerate geometry: RF endpoints coincide")
    loss_db = params.rf_ref_loss_db + 10 * params.rf_path_loss_exponent * math.log10(d)
    return math.sqrt(10 ** (-loss_db / 10))


def harvested_rf_power(scenario: NetworkScenario, cell: int) -> float:
    """Power (W) the strong user of ``cell`` harvests from the DC light of all APs."""
    if not 0 <= cell < scenario.n_cells:
        raise IndexError(f"cell {cell} out of range for {scenario.n_cells} cells")
    p = scenario.params
    i_dc = p.rho * p.nu * p.b * float(np.sum(scenario.h_strong[cell]))
    return harvest_from_current(i_dc, p)


def harvest_from_current(i_dc: float, params: PhysicalParams) -> float:
    return (
        params.eh_fill_factor
        * i_dc
        * params.eh_thermal_voltage
        * math.log1p(i_dc / params.eh_dark_current)
    )


def grid_ap_positions(rows: int, cols: int, spacing: float, height: float) -> np.ndarray:
    """AP coordinates on a regular ceiling grid, first AP at (spacing/2, spacing/2)."""
    xs = (np.arange(cols) + 0.5) * spacing
    ys = (np.arange(rows) + 0.5) * spacing
    return np.array([[x, y, height] for y in ys for x in xs], dtype=float)


def cell_radius_for(ap_positions) -> float:
    aps = _as_points(ap_positions, "ap_positions")
    if len(aps) < 2:
        raise ValueError("cannot derive a cell radius from a single AP; pass cell_radius")
    xy = aps[:, :2]
    dist = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    return float(dist.min()) / 2


def place_users(
    ap_positions,
    alpha: float,
    rng_seed: int,
    *,
    cell_radius: float | None = None,
    strong_fraction: float = 0.4,
    rx_height: float = 0.85,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw one strong and one weak user per cell.

    The strong user is uniform on a disc of radius ``strong_fraction * R`` around
    the AP footprint, the weak user uniform on the annulus ``[alpha*R, R]``.
    The same uniforms drive every ``alpha``, so increasing ``alpha`` moves each
    weak user radially outwards for a fixed seed.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    aps = _as_points(ap_positions, "ap_positions")
    radius = cell_radius_for(aps) if cell_radius is None else float(cell_radius)
    n = len(aps)
    rng = np.random.default_rng(rng_seed)
    u = rng.random((n, 4))

    r_strong = strong_fraction * radius * np.sqrt(u[:, 0])
    inner = alpha * radius
    r_weak = np.sqrt(inner**2 + u[:, 2] * (radius**2 - inner**2))
    phi_strong = 2 * np.pi * u[:, 1]
    phi_weak = 2 * np.pi * u[:, 3]

    def at(r, phi):
        pts = np.empty((n, 3))
        pts[:, 0] = aps[:, 0] + r * np.cos(phi)
        pts[:, 1] = aps[:, 1] + r * np.sin(phi)
        pts[:, 2] = rx_height
        return pts

    return at(r_strong, phi_strong), at(r_weak, phi_weak)


def build_scenario(ap_positions, strong_positions, weak_positions,
                   params: PhysicalParams) -> NetworkScenario:
    """Compute all gains for a placement, swapping any mislabelled user pair."""
    aps = _as_points(ap_positions, "ap_positions")
    strong = _as_points(strong_positions, "strong_positions").copy()
    weak = _as_points(weak_positions, "weak_positions").copy()
    n = len(aps)

    def gains(users):
        return np.array([[vlc_channel_gain(aps[q], users[u], params) for q in range(n)]
                         for u in range(n)])

    h_s, h_w = gains(strong), gains(weak)
    swap = np.diag(h_s) < np.diag(h_w)
    if np.any(swap):
        strong[swap], weak[swap] = weak[swap].copy(), strong[swap].copy()
        h_s[swap], h_w[swap] = h_w[swap].copy(), h_s[swap].copy()
    h_rf = np.array([rf_channel_gain(strong[k], weak[k], params) for k in range(n)])
    return NetworkScenario(aps, strong, weak, h_s, h_w, h_rf, params)


@dataclass(frozen=True)
class Layout:
    rows: int = 4
    cols: int = 4
    spacing: float = 2.5
    ap_height: float = 3.0
    rx_height: float = 0.85
    strong_fraction: float = 0.4

    @classmethod
    def defaults(cls, **overrides) -> Layout:
        values = default_values("layout")
        values.update(overrides)
        return cls(**values)

    def ap_positions(self) -> np.ndarray:
        return grid_ap_positions(self.rows, self.cols, self.spacing, self.ap_height)


@dataclass(frozen=True)
class ScenarioTemplate:
    """Everything but the seed and alpha needed to draw a scenario."""

    layout: Layout = field(default_factory=Layout.defaults)
    params: PhysicalParams = field(default_factory=PhysicalParams.defaults)

    def draw(self, alpha: float, seed: int) -> NetworkScenario:
        aps = self.layout.ap_positions()
        strong, weak = place_users(
            aps, alpha, seed,
            cell_radius=self.layout.spacing / 2,
            strong_fraction=self.layout.strong_fraction,
            rx_height=self.layout.rx_height,
        )
        return build_scenario(aps, strong, weak, self.params)


def generate_scenario(alpha: float, seed: int, template: ScenarioTemplate | None = None) -> NetworkScenario:
    return (template or ScenarioTemplate()).draw(alpha, seed)
