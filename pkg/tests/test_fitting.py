"""Log-log exponent fitting against synthetic series with known exponents."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_forge.errors import NumericError
from carleman_forge.fitting import FitResult, fit_loglog, fit_report


H_GRID = np.geomspace(1e-8, 1e-2, 12)


def _series(p, q, c=1.0, h=H_GRID):
    L = np.log(1.0 / h)
    return c * np.exp(p * L + q * np.log(L))


def test_exact_power_log_recovery():
    v = _series(2.0, 3.0, c=0.7)
    fit = fit_loglog(H_GRID, v, mode="joint")
    assert fit.p == pytest.approx(2.0, abs=1e-6)
    assert fit.q == pytest.approx(3.0, abs=1e-6)
    assert fit.c == pytest.approx(0.7, rel=1e-6)
    assert fit.residual < 1e-10


def test_constant_series():
    fit = fit_loglog(H_GRID, np.full_like(H_GRID, 5.0), mode="joint")
    assert fit.p == pytest.approx(0.0, abs=1e-10)
    assert fit.q == pytest.approx(0.0, abs=1e-10)
    assert fit.c == pytest.approx(5.0, rel=1e-10)


def test_noisy_recovery_seeded():
    rng = np.random.default_rng(42)
    v = _series(1.5, 1.0) * np.exp(rng.normal(scale=1e-3, size=H_GRID.size))
    fit = fit_loglog(H_GRID, v, mode="joint")
    assert fit.p == pytest.approx(1.5, abs=0.02)


def test_fixed_q_mode():
    v = _series(4.0 / 3.0, 1.0)
    fit = fit_loglog(H_GRID, v, mode="fixed_q", q_fixed=1.0)
    assert fit.q == 1.0
    assert fit.p == pytest.approx(4.0 / 3.0, abs=1e-8)
    # wrong fixed q is absorbed imperfectly: p still lands nearby
    fit2 = fit_loglog(H_GRID, v, mode="fixed_q", q_fixed=0.0)
    assert abs(fit2.p - 4.0 / 3.0) < 0.2


def test_two_pass_mode():
    v = _series(2.0, 1.5)
    fit = fit_loglog(H_GRID, v, mode="two_pass", q_fixed=1.5)
    assert fit.p == pytest.approx(2.0, abs=1e-8)
    assert fit.q == pytest.approx(1.5, abs=1e-6)


def test_error_conditions():
    with pytest.raises(NumericError):
        fit_loglog([1e-2, 1e-3, 1e-4], [1.0, 2.0, 3.0])
    with pytest.raises(NumericError):
        fit_loglog(H_GRID, np.concatenate([[-1.0], np.ones(H_GRID.size - 1)]))
    with pytest.raises(NumericError):
        fit_loglog(np.full(6, 1e-3), np.ones(6))  # identical h -> singular
    with pytest.raises(NumericError):
        fit_loglog(H_GRID, _series(1.0, 0.0), mode="fixed_q")
    with pytest.raises(NumericError):
        fit_loglog(H_GRID, _series(1.0, 0.0), mode="cubic")
    with pytest.raises(NumericError):
        fit_loglog(np.full(6, 2.0), np.ones(6))  # h must lie in (0, 1)


def test_fit_report_interface():
    v = _series(1.0, 2.0, c=3.0)
    p, q, c, res = fit_report(list(zip(H_GRID, v)))
    assert (p, q) == (pytest.approx(1.0, abs=1e-8),
                      pytest.approx(2.0, abs=1e-8))
    assert c == pytest.approx(3.0, rel=1e-8)
    assert res < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=0.01, max_value=100.0))
def test_round_trip_property(p, q, c):
    fit = fit_loglog(H_GRID, _series(p, q, c), mode="joint")
    assert fit.p == pytest.approx(p, abs=1e-5)
    assert fit.q == pytest.approx(q, abs=1e-4)
