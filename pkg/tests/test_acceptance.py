"""Acceptance matrix, one test per criterion at its stated tolerance.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible in ``pytest -v``
output) before asserting, so a run documents the whole matrix even when some
criteria fail.
"""

import pytest

from su11nco import validation as v

CHECKS = {
    "1-wigner-volumes": v.check_wigner_volumes,
    "2-moment-equivalence": v.check_moment_equivalence,
    "3-sensitivity-equivalence": v.check_sensitivity_equivalence,
    "4-lossy-qfi-formula": v.check_lossy_qfi,
    "4-u-quadratic-fit": v.check_u_quadratic_fit,
    "5-limits": v.check_limits,
    "6a-ordering": v.check_trend_ordering,
    "6b-superposition": v.check_trend_superposition,
    "6c-monotone-g": lambda: v.check_trend_monotone("g"),
    "6c-monotone-alpha": lambda: v.check_trend_monotone("alpha"),
    "6c-monotone-T": lambda: v.check_trend_monotone("T"),
    "6d-ideal-qfi": v.check_trend_ideal_qfi,
    "6e-lossy-qfi-crossover": v.check_trend_lossy_qfi,
    "6f-beats-sql": v.check_trend_sql,
    "7-derivative": v.check_derivative,
    "8-determinism": v.check_determinism,
}


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CHECKS))
def test_criterion(name, capsys):
    result = CHECKS[name]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
