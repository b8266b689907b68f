"""Monte-Carlo sweeps over the QoS target and the weak-user placement parameter.

Every (sweep value, drop) pair draws its scenario from seed ``base_seed +
drop``, so all schemes and all sweep values see paired user placements.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ScenarioTemplate
from .optimizer import OptimizerConfig, fixed_power, optimize

# scheme -> (relay allowed, outer power loop)
SCHEMES: dict[str, tuple[bool, bool]] = {
    "conoma-opt": (True, True),
    "conoma-fixed": (True, False),
    "noma-opt": (False, True),
    "noma-fixed": (False, False),
}
SWEEP_AXES = ("r_th", "alpha")

# (better, worse, requires both fully feasible)
DOMINANCE = (
    ("conoma-opt", "conoma-fixed", False),
    ("noma-opt", "noma-fixed", False),
    ("conoma-fixed", "noma-fixed", True),
)

Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    sweep_axis: str
    sweep_values: tuple[float, ...]
    drops: int = 200
    base_seed: int = 0
    r_th: float = 4e6
    alpha: float = 0.95
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    template: ScenarioTemplate = field(default_factory=ScenarioTemplate)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}; expected r_th or alpha")
        values = tuple(float(v) for v in self.sweep_values)
        if not values:
            raise ValueError("sweep needs at least one value")
        if list(values) != sorted(values):
            raise ValueError("sweep values must be sorted")
        object.__setattr__(self, "sweep_values", values)
        if self.drops < 1:
            raise ValueError("drops must be at least 1")

    def point(self, value: float) -> tuple[float, float]:
        """(r_th, alpha) at one sweep value."""
        if self.sweep_axis == "r_th":
            return value, self.alpha
        return self.r_th, value


@dataclass(frozen=True)
class DropRecord:
    sweep_value: float
    drop: int
    seed: int
    sum_rate: float
    jain: float
    x1_fraction: float
    n_feasible: int
    n_cells: int
    network_evaluations: int

    @property
    def feasible(self) -> bool:
        return self.n_feasible == self.n_cells

    @property
    def score(self) -> tuple[int, float]:
        return (self.n_feasible, self.sum_rate)


@dataclass(frozen=True)
class SweepPoint:
    sweep_value: float
    mean_sum_rate: float
    sum_rate_ci: float
    mean_jain: float
    jain_ci: float
    x1_fraction: float
    infeasible_fraction: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[SweepPoint]
    records: list[DropRecord]

    @property
    def scheme(self) -> str:
        return self.config.scheme

    def drops_at(self, value: float) -> list[DropRecord]:
        return [r for r in self.records if r.sweep_value == value]

    @property
    def network_evaluations(self) -> int:
        return sum(r.network_evaluations for r in self.records)


def solve_scheme(scheme: str, scenario, r_th: float, optimizer: OptimizerConfig | None = None):
    """Solve one scenario under a named scheme; returns (state, report, trace or None)."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    allow_hybrid, outer = SCHEMES[scheme]
    if outer:
        return optimize(scenario, r_th, optimizer, allow_hybrid)
    state, report = fixed_power(scenario, r_th, allow_hybrid)
    return state, report, None


def run_drop(config: ExperimentConfig, value: float, drop: int) -> DropRecord:
    r_th, alpha = config.point(value)
    seed = config.base_seed + drop
    scenario = config.template.draw(alpha, seed)
    state, report, trace = solve_scheme(config.scheme, scenario, r_th, config.optimizer)
    return DropRecord(
        sweep_value=value,
        drop=drop,
        seed=seed,
        sum_rate=report.sum_rate,
        jain=report.jain,
        x1_fraction=float(np.mean(state.x)),
        n_feasible=report.n_feasible,
        n_cells=scenario.n_cells,
        network_evaluations=trace.network_evaluations if trace else 1,
    )


def _run_task(task):
    return run_drop(*task)


def _ci(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return Z95 * float(np.std(values, ddof=1)) / math.sqrt(len(values))


def aggregate(value: float, records: list[DropRecord]) -> SweepPoint:
    # records arrive in drop order, so the reductions are bit-stable
    sums = np.array([r.sum_rate for r in records])
    jains = np.array([r.jain for r in records])
    return SweepPoint(
        sweep_value=value,
        mean_sum_rate=float(np.mean(sums)),
        sum_rate_ci=_ci(sums),
        mean_jain=float(np.mean(jains)),
        jain_ci=_ci(jains),
        x1_fraction=float(np.mean([r.x1_fraction for r in records])),
        infeasible_fraction=float(np.mean([not r.feasible for r in records])),
    )


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    tasks = [(config, v, d) for v in config.sweep_values for d in range(config.drops)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        records = [_run_task(t) for t in tasks]
    points = [aggregate(v, [r for r in records if r.sweep_value == v]) for v in config.sweep_values]
    return ExperimentResult(config, points, records)


def run_schemes(config: ExperimentConfig, schemes, threads: int = 1) -> list[ExperimentResult]:
    """Same sweep and seeds under several schemes."""
    return [run_experiment(replace(config, scheme=s), threads) for s in schemes]


@dataclass(frozen=True)
class ComparisonRow:
    sweep_value: float
    scheme: str
    baseline: str
    delta_sum_rate: float
    delta_jain: float


@dataclass(frozen=True)
class Violation:
    sweep_value: float
    drop: int
    better: str
    worse: str
    better_sum_rate: float
    worse_sum_rate: float


@dataclass
class Comparison:
    rows: list[ComparisonRow]
    violations: list[Violation]
    checked_pairs: int

    def to_text(self) -> str:
        lines = [f"{'sweep':>12} {'scheme':>13} {'vs':>13} {'d_sum_rate':>14} {'d_jain':>9}"]
        for r in self.rows:
            lines.append(f"{r.sweep_value:12.6g} {r.scheme:>13} {r.baseline:>13} "
                         f"{r.delta_sum_rate:14.6g} {r.delta_jain:9.4f}")
        lines.append(f"dominance checks: {self.checked_pairs}, violations: {len(self.violations)}")
        return "\n".join(lines)


def _aligned(a: ExperimentConfig, b: ExperimentConfig) -> bool:
    return replace(a, scheme=b.scheme) == b


def compare_schemes(results: list[ExperimentResult]) -> Comparison:
    """Deltas of every result against the first, plus per-drop dominance checks.

    Expected orderings per drop: the power loop never loses to its own
    full-power start, and allowing the relay never loses to plain NOMA at
    full power when both are feasible.
    """
    if not results:
        raise ValueError("need at least one experiment result")
    base = results[0]
    for r in results[1:]:
        if not _aligned(base.config, r.config):
            raise ValueError(f"results for {r.scheme!r} use a different sweep or seeds than {base.scheme!r}")

    rows = []
    for r in results[1:]:
        for pb, pr in zip(base.points, r.points):
            rows.append(ComparisonRow(pr.sweep_value, r.scheme, base.scheme,
                                      pr.mean_sum_rate - pb.mean_sum_rate,
                                      pr.mean_jain - pb.mean_jain))

    by_scheme = {r.scheme: r for r in results}
    violations, checked = [], 0
    for better, worse, needs_feasible in DOMINANCE:
        if better not in by_scheme or worse not in by_scheme:
            continue
        for rb, rw in zip(by_scheme[better].records, by_scheme[worse].records):
            if needs_feasible:
                if not (rb.feasible and rw.feasible):
                    continue
                ok = rb.sum_rate >= rw.sum_rate
            else:
                ok = rb.score >= rw.score
            checked += 1
            if not ok:
                violations.append(Violation(rb.sweep_value, rb.drop, better, worse,
                                            rb.sum_rate, rw.sum_rate))
    return Comparison(rows, violations, checked)


FIGURE_FILES = {
    "r_th": ("fig2_sumrate_vs_rth.csv", "fig3_jain_vs_rth.csv"),
    "alpha": ("fig4_sumrate_vs_alpha.csv", "fig5_jain_vs_alpha.csv"),
}
FIGURE_COLUMNS = ["sweep_value", "scheme", "mean_sum_rate", "mean_jain", "ci",
                  "x1_fraction", "infeasible_fraction"]
CONVERGENCE_FILE = "fig6_convergence.csv"


def _writer(buf):
    return csv.writer(buf, lineterminator="\r\n")


def figure_tables(results: list[ExperimentResult]) -> dict[str, str]:
    """CSV text for the sum-rate and fairness figures of one sweep axis."""
    axis = results[0].config.sweep_axis
    if any(r.config.sweep_axis != axis for r in results):
        raise ValueError("all results must share one sweep axis")
    sum_name, jain_name = FIGURE_FILES[axis]
    out = {}
    for name, ci_field in ((sum_name, "sum_rate_ci"), (jain_name, "jain_ci")):
        buf = io.StringIO()
        w = _writer(buf)
        w.writerow(FIGURE_COLUMNS)
        for res in results:
            for pt in res.points:
                w.writerow([repr(pt.sweep_value), res.scheme, repr(pt.mean_sum_rate),
                            repr(pt.mean_jain), repr(getattr(pt, ci_field)),
                            repr(pt.x1_fraction), repr(pt.infeasible_fraction)])
        out[name] = buf.getvalue()
    return out


def convergence_table(template: ScenarioTemplate, alphas, seed: int, r_th: float,
                      optimizer: OptimizerConfig, schemes=("conoma-opt", "noma-opt")) -> tuple[str, int]:
    """Sum-rate trace of the power loop per alpha and scheme; returns (csv text, evaluations)."""
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["alpha", "scheme", "iteration", "ap", "p_k", "sum_rate"])
    evaluations = 0
    for alpha in alphas:
        scenario = template.draw(float(alpha), seed)
        for scheme in schemes:
            if not SCHEMES[scheme][1]:
                raise ValueError(f"scheme {scheme!r} has no power loop to trace")
            _, _, trace = solve_scheme(scheme, scenario, r_th, optimizer)
            evaluations += trace.network_evaluations
            for rec in trace.records:
                w.writerow([repr(float(alpha)), scheme, rec.iteration, rec.ap,
                            repr(rec.p_k), repr(rec.sum_rate)])
    return buf.getvalue(), evaluations


def write_tables(tables: dict[str, str], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in tables.items():
        path = out / name
        path.write_bytes(text.encode())
        paths.append(path)
    return paths
