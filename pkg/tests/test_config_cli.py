import json
from pathlib import Path

import pytest

from conoma.cli import main
from conoma.config import ConfigError, apply_overrides, parse_study, study_to_dict

ROOT = Path(__file__).resolve().parents[1]

QUICK = {
    "schemes": ["conoma-opt", "noma-fixed"],
    "sweep": {"axis": "alpha", "values": [0.5, 0.95]},
    "drops": 2,
    "layout": {"rows": 2, "cols": 2},
    "convergence": {"alphas": [0.95], "seed": 0},
}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_parse_round_trip():
    spec = parse_study(QUICK)
    assert parse_study(study_to_dict(spec)) == spec


@pytest.mark.parametrize("name", ["study.json", "interference_limited.json", "quick.json"])
def test_shipped_configs_parse(name):
    parse_study(json.loads((ROOT / "configs" / name).read_text()))


def test_unknown_keys_named():
    with pytest.raises(ConfigError, match="'colour'"):
        parse_study({**QUICK, "colour": 1})
    with pytest.raises(ConfigError, match="'layout.width'"):
        parse_study({**QUICK, "layout": {"width": 3}})


def test_bad_values():
    with pytest.raises(ConfigError, match="scheme"):
        parse_study({**QUICK, "schemes": ["oma"]})
    with pytest.raises(ConfigError, match="alpha"):
        parse_study({**QUICK, "sweep": {"axis": "alpha", "values": [0.5, 1.0]}})
    with pytest.raises(ConfigError, match="drops"):
        parse_study({**QUICK, "drops": 0})


def test_overrides():
    data = apply_overrides(QUICK, {"drops": 5, "epsilon": 1e-4, "r_th": None})
    spec = parse_study(data)
    assert spec.drops == 5 and spec.optimizer.epsilon == 1e-4


def test_cli_scenario_and_solve(tmp_path, capsys):
    scen = tmp_path / "s.json"
    assert main(["scenario", "--alpha", "0.9", "--seed", "2", "--out", str(scen)]) == 0
    out = tmp_path / "sol.json"
    assert main(["solve", str(scen), "--rth", "4e6", "--out", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert sol["feasible_cells"] == list(range(16))
    assert "sum_rate=" in capsys.readouterr().out


def test_cli_solve_noma_fixed(tmp_path):
    scen = tmp_path / "s.json"
    main(["scenario", "--out", str(scen)])
    out = tmp_path / "sol.json"
    assert main(["solve", str(scen), "--rth", "2e6", "--scheme", "noma-fixed", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["state"]["x"] == [0] * 16


def test_cli_solve_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "format": "conoma-scenario/1",\n  "h_rf": [1,\n')
    assert main(["solve", str(bad), "--rth", "1e6", "--out", str(tmp_path / "o.json")]) == 2
    err = capsys.readouterr().err
    assert "bad.json:4:" in err


def test_cli_solve_infeasible(tmp_path):
    scen = tmp_path / "s.json"
    main(["scenario", "--out", str(scen)])
    assert main(["solve", str(scen), "--rth", "1e9", "--out", str(tmp_path / "o.json")]) == 3


def test_cli_experiment_rerun_and_override(tmp_path):
    cfg = write(tmp_path, "q.json", QUICK)
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "--config", str(cfg), "--drops", "3", "--out-dir", str(first)]) == 0
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["overrides"] == {"drops": 3}
    assert manifest["config"]["drops"] == 3
    assert main(["experiment", "--config", str(first / "manifest.json"), "--out-dir", str(second)]) == 0
    for name in manifest["outputs"]:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_cli_experiment_unknown_key(tmp_path, capsys):
    cfg = write(tmp_path, "q.json", {**QUICK, "bogus": True})
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert "'bogus'" in capsys.readouterr().err


def test_cli_experiment_malformed(tmp_path, capsys):
    cfg = tmp_path / "q.json"
    cfg.write_text("{\n  \"drops\": ,\n}")
    assert main(["experiment", "--config", str(cfg)]) == 2
    assert "q.json:2:" in capsys.readouterr().err


def test_cli_validate_quick_reproducible(capsys):
    assert main(["validate", "--quick", "--seed", "4"]) == 0
    first = capsys.readouterr().out
    main(["validate", "--quick", "--seed", "4"])
    second = capsys.readouterr().out
    strip = lambda text: [ln.split(" t=")[0] for ln in text.splitlines()]
    assert strip(first) == strip(second)
    assert "all properties pass" in first
