import numpy as np
import pytest

from conoma.harness import (
    ExperimentConfig,
    compare_schemes,
    convergence_table,
    figure_tables,
    run_experiment,
    run_schemes,
    solve_scheme,
)
from conoma.optimizer import OptimizerConfig

from conftest import small_template


@pytest.fixture(scope="module")
def tiny():
    return ExperimentConfig(scheme="conoma-opt", sweep_axis="alpha", sweep_values=(0.5, 0.95),
                            drops=4, r_th=4e6, template=small_template(rows=2, cols=2))


@pytest.fixture(scope="module")
def tiny_results(tiny):
    return run_schemes(tiny, ["conoma-opt", "conoma-fixed", "noma-opt", "noma-fixed"])


def test_invalid_scheme():
    with pytest.raises(ValueError, match="scheme"):
        ExperimentConfig(scheme="oma", sweep_axis="alpha", sweep_values=(0.5,))


def test_invalid_sweep():
    with pytest.raises(ValueError):
        ExperimentConfig(scheme="noma-fixed", sweep_axis="alpha", sweep_values=(0.9, 0.5))
    with pytest.raises(ValueError):
        ExperimentConfig(scheme="noma-fixed", sweep_axis="beta", sweep_values=(0.5,))


def test_seeds_and_averages(tiny_results):
    res = tiny_results[0]
    assert len(res.records) == 8
    assert [r.seed for r in res.drops_at(0.5)] == [0, 1, 2, 3]
    mean = np.mean([r.sum_rate for r in res.drops_at(0.95)])
    assert res.points[1].mean_sum_rate == pytest.approx(mean, rel=1e-15)


def test_paired_seeds_same_scenario(tiny):
    a = run_experiment(ExperimentConfig(**{**tiny.__dict__, "drops": 1, "scheme": "noma-fixed"}))
    b = run_experiment(ExperimentConfig(**{**tiny.__dict__, "drops": 1, "scheme": "noma-fixed"}))
    assert a.records == b.records


def test_conoma_beats_noma_fixed_mean(tiny_results):
    by = {r.scheme: r for r in tiny_results}
    for pc, pn in zip(by["conoma-opt"].points, by["noma-fixed"].points):
        assert pc.mean_sum_rate >= pn.mean_sum_rate


def test_compare_identical_is_zero(tiny_results):
    comp = compare_schemes([tiny_results[0], tiny_results[0]])
    assert all(r.delta_sum_rate == 0 and r.delta_jain == 0 for r in comp.rows)


def test_compare_dominance(tiny_results):
    comp = compare_schemes(tiny_results)
    assert comp.checked_pairs > 0
    assert comp.violations == []
    assert "violations: 0" in comp.to_text()


def test_compare_conoma_vs_noma_high_alpha(tiny_results):
    by = {r.scheme: r for r in tiny_results}
    comp = compare_schemes([by["noma-fixed"], by["conoma-opt"]])
    row = [r for r in comp.rows if r.sweep_value == 0.95][0]
    assert row.delta_sum_rate > 0 and row.delta_jain > 0


def test_compare_empty():
    with pytest.raises(ValueError):
        compare_schemes([])


def test_compare_misaligned(tiny, tiny_results):
    other = run_experiment(ExperimentConfig(**{**tiny.__dict__, "drops": 2, "scheme": "noma-fixed"}))
    with pytest.raises(ValueError, match="different"):
        compare_schemes([tiny_results[0], other])


def test_figure_tables(tiny_results):
    tables = figure_tables(tiny_results)
    assert set(tables) == {"fig4_sumrate_vs_alpha.csv", "fig5_jain_vs_alpha.csv"}
    lines = tables["fig4_sumrate_vs_alpha.csv"].split("\r\n")
    assert lines[0].startswith("sweep_value,scheme,mean_sum_rate")
    assert len([ln for ln in lines if ln]) == 1 + 4 * 2


def test_convergence_table():
    text, n_eval = convergence_table(small_template(rows=2, cols=2), [0.95], 0, 4e6,
                                     OptimizerConfig(max_rounds=2))
    assert text.startswith("alpha,scheme,iteration,ap,p_k,sum_rate\r\n")
    assert n_eval > 0
    with pytest.raises(ValueError):
        convergence_table(small_template(), [0.95], 0, 4e6, OptimizerConfig(), ["noma-fixed"])


def test_solve_scheme_noma_has_no_relay(default_scenario):
    state, _, trace = solve_scheme("noma-fixed", default_scenario, 4e6)
    assert trace is None and not state.x.any()


def test_threads_give_same_records(tiny):
    cfg = ExperimentConfig(**{**tiny.__dict__, "drops": 3, "scheme": "noma-opt"})
    assert run_experiment(cfg, threads=2).records == run_experiment(cfg).records
