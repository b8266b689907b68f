"""Experiment files: parsing with strict key checking, defaults, and run manifests."""
from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .channel import Layout, PhysicalParams, ScenarioTemplate, default_values
from .harness import SCHEMES, SWEEP_AXES, ExperimentConfig
from .optimizer import OptimizerConfig

MANIFEST_FORMAT = "conoma-manifest/1"


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    for key in section:
        if key not in allowed:
            path = f"{where}.{key}" if where else key
            raise ConfigError(f"unknown key {path!r}")


@dataclass(frozen=True)
class ConvergenceSpec:
    alphas: tuple[float, ...]
    seed: int
    schemes: tuple[str, ...] = ("conoma-opt", "noma-opt")


@dataclass(frozen=True)
class StudySpec:
    """Everything one ``experiment`` run needs: several sweeps times several schemes."""

    schemes: tuple[str, ...]
    sweeps: tuple[tuple[str, tuple[float, ...]], ...]
    drops: int
    base_seed: int
    r_th: float
    alpha: float
    optimizer: OptimizerConfig
    template: ScenarioTemplate
    convergence: ConvergenceSpec | None
    threads: int = 1

    def experiments(self) -> list[list[ExperimentConfig]]:
        """One list of per-scheme configs for each sweep."""
        return [
            [ExperimentConfig(scheme=s, sweep_axis=axis, sweep_values=values, drops=self.drops,
                              base_seed=self.base_seed, r_th=self.r_th, alpha=self.alpha,
                              optimizer=self.optimizer, template=self.template)
             for s in self.schemes]
            for axis, values in self.sweeps
        ]


TOP_KEYS = {"scheme", "schemes", "sweep", "sweeps", "drops", "base_seed", "r_th", "alpha",
            "optimizer", "layout", "params", "convergence", "threads"}
OPTIMIZER_KEYS = {"epsilon", "max_rounds", "reset_bracket"}
CONVERGENCE_KEYS = {"alphas", "seed", "schemes"}


def _schemes(value, where) -> tuple[str, ...]:
    names = (value,) if isinstance(value, str) else tuple(value)
    for name in names:
        if name not in SCHEMES:
            raise ConfigError(f"{where}: unknown scheme {name!r} (expected one of {', '.join(SCHEMES)})")
    if not names:
        raise ConfigError(f"{where}: at least one scheme is required")
    return names


def _sweep(entry, where):
    _check_keys(entry, {"axis", "values"}, where)
    axis = entry.get("axis")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"{where}.axis must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
    values = tuple(float(v) for v in entry.get("values", ()))
    if not values:
        raise ConfigError(f"{where}.values must be a non-empty list")
    if list(values) != sorted(values):
        raise ConfigError(f"{where}.values must be sorted")
    return axis, values


def parse_study(data: dict[str, Any]) -> StudySpec:
    """Build a study from an experiment document (or from a run manifest)."""
    if isinstance(data, dict) and data.get("format") == MANIFEST_FORMAT:
        data = data["config"]
    _check_keys(data, TOP_KEYS, "")
    exp = default_values("experiment")

    if "scheme" in data and "schemes" in data:
        raise ConfigError("give either 'scheme' or 'schemes', not both")
    schemes = _schemes(data.get("schemes", data.get("scheme", "conoma-opt")), "schemes")

    if "sweep" in data and "sweeps" in data:
        raise ConfigError("give either 'sweep' or 'sweeps', not both")
    raw_sweeps = data.get("sweeps", [data["sweep"]] if "sweep" in data else [])
    if not raw_sweeps:
        raise ConfigError("at least one sweep is required")
    sweeps = tuple(_sweep(s, f"sweeps[{i}]") for i, s in enumerate(raw_sweeps))

    opt_raw = data.get("optimizer", {})
    _check_keys(opt_raw, OPTIMIZER_KEYS, "optimizer")
    try:
        optimizer = OptimizerConfig(
            epsilon=float(opt_raw.get("epsilon", exp["epsilon"])),
            max_rounds=int(opt_raw.get("max_rounds", exp["max_rounds"])),
            reset_bracket=bool(opt_raw.get("reset_bracket", False)),
        )
    except ValueError as err:
        raise ConfigError(f"optimizer: {err}") from None

    layout_raw = data.get("layout", {})
    _check_keys(layout_raw, {f.name for f in fields(Layout)}, "layout")
    params_raw = data.get("params", {})
    _check_keys(params_raw, {f.name for f in fields(PhysicalParams)}, "params")
    try:
        template = ScenarioTemplate(Layout.defaults(**layout_raw), PhysicalParams.defaults(**params_raw))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"scenario: {err}") from None

    conv = None
    if data.get("convergence") is not None:
        c = data["convergence"]
        _check_keys(c, CONVERGENCE_KEYS, "convergence")
        conv = ConvergenceSpec(
            alphas=tuple(float(a) for a in c.get("alphas", (exp["alpha"],))),
            seed=int(c.get("seed", 0)),
            schemes=_schemes(c.get("schemes", ("conoma-opt", "noma-opt")), "convergence.schemes"),
        )
        for s in conv.schemes:
            if not SCHEMES[s][1]:
                raise ConfigError(f"convergence.schemes: {s!r} has no power loop to trace")

    drops = int(data.get("drops", exp["drops"]))
    if drops < 1:
        raise ConfigError("drops must be at least 1")
    threads = int(data.get("threads", 1))
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    alpha = float(data.get("alpha", exp["alpha"]))
    if not 0 <= alpha < 1:
        raise ConfigError("alpha must lie in [0, 1)")
    for axis, values in sweeps:
        if axis == "alpha" and not all(0 <= v < 1 for v in values):
            raise ConfigError("alpha sweep values must lie in [0, 1)")
    return StudySpec(
        schemes=schemes,
        sweeps=sweeps,
        drops=drops,
        base_seed=int(data.get("base_seed", exp["base_seed"])),
        r_th=float(data.get("r_th", exp["r_th"])),
        alpha=alpha,
        optimizer=optimizer,
        template=template,
        convergence=conv,
        threads=threads,
    )


def study_to_dict(spec: StudySpec) -> dict[str, Any]:
    """Fully materialised experiment document; parsing it gives back ``spec``."""
    out = {
        "schemes": list(spec.schemes),
        "sweeps": [{"axis": a, "values": list(v)} for a, v in spec.sweeps],
        "drops": spec.drops,
        "base_seed": spec.base_seed,
        "r_th": spec.r_th,
        "alpha": spec.alpha,
        "optimizer": {"epsilon": spec.optimizer.epsilon, "max_rounds": spec.optimizer.max_rounds,
                      "reset_bracket": spec.optimizer.reset_bracket},
        "layout": asdict(spec.template.layout),
        "params": asdict(spec.template.params),
        "threads": spec.threads,
    }
    if spec.convergence is not None:
        out["convergence"] = {"alphas": list(spec.convergence.alphas), "seed": spec.convergence.seed,
                              "schemes": list(spec.convergence.schemes)}
    return out


def apply_overrides(data: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Return a copy of ``data`` with command-line overrides folded in."""
    if data.get("format") == MANIFEST_FORMAT:
        data = data["config"]
    out = json.loads(json.dumps(data))
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("epsilon", "max_rounds"):
            out.setdefault("optimizer", {})[key] = value
        elif key == "schemes":
            out.pop("scheme", None)
            out["schemes"] = value
        else:
            out[key] = value
    return out


def load_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def build_manifest(spec: StudySpec, overrides: dict[str, Any], outputs: list[str],
                   stats: dict[str, Any]) -> dict[str, Any]:
    return {
        "format": MANIFEST_FORMAT,
        "config": study_to_dict(spec),
        "overrides": {k: v for k, v in overrides.items() if v is not None},
        "versions": {"conoma": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "seeds": {"base_seed": spec.base_seed, "drops": spec.drops,
                  "convergence_seed": spec.convergence.seed if spec.convergence else None},
        "outputs": outputs,
        "stats": stats,
    }
