import numpy as np
import pytest

from conoma.channel import Layout, NetworkScenario, PhysicalParams, ScenarioTemplate
from conoma.rates import CellCoefficients


@pytest.fixture(scope="session")
def params():
    return PhysicalParams.defaults()


@pytest.fixture(scope="session")
def default_scenario():
    return ScenarioTemplate().draw(0.95, 0)


def small_template(rows=1, cols=2, **params):
    return ScenarioTemplate(Layout.defaults(rows=rows, cols=cols), PhysicalParams.defaults(**params))


def coefficients(psi_s, psi_w, r_rf=1e9, B_v=2e7):
    """Hand-built per-cell coefficients (one entry per cell)."""
    as_arr = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
    return CellCoefficients(c=1 / (2 * np.pi * np.e), B_v=B_v, Z_s=None, Z_w=None,
                            Psi_s=as_arr(psi_s), Psi_w=as_arr(psi_w), R_rf=as_arr(r_rf))


def mirrored_pair(params, gap=2.5, offset=0.4, weak_offset=1.1):
    """Two cells whose geometry is a mirror image about x = gap."""
    from conoma.channel import build_scenario

    h = 3.0
    aps = [[0.0, 0.0, h], [2 * gap, 0.0, h]]
    strong = [[offset, 0.0, 0.85], [2 * gap - offset, 0.0, 0.85]]
    weak = [[-weak_offset, 0.3, 0.85], [2 * gap + weak_offset, 0.3, 0.85]]
    return build_scenario(aps, strong, weak, params)


def single_cell(params, strong=(0.2, 0.0), weak=(1.0, 0.3)):
    from conoma.channel import build_scenario

    return build_scenario([[0.0, 0.0, 3.0]], [[*strong, 0.85]], [[*weak, 0.85]], params)


__all__ = ["NetworkScenario", "coefficients", "mirrored_pair", "single_cell", "small_template"]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
