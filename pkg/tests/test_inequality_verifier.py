"""Grid construction, the key lower-bound verification, calibration, and the
empirical h threshold."""

import math

import numpy as np
import pytest

from carleman_forge.errors import CalibrationError, DomainError
from carleman_forge.inequality_verifier import (GridSpec, InequalityReport,
                                                REGION_LABELS, AB_eval,
                                                VerificationCase, bracket_eval,
                                                calibrate,
                                                empirical_h_threshold,
                                                _floor_2sig, make_grid,
                                                max_admissible_h,
                                                region_labels,
                                                verify_key_lower,
                                                verify_w_lemma)
from carleman_forge.potential_model import PotentialParams
from carleman_forge.scales import default_construction
from conftest import benchmark_params, benchmark_potential


CAL_H = [1e-11, 1e-12, 1e-13]


def _case(delta, beta=1.0, tau=None, **params_kw):
    params = benchmark_params(delta, beta=beta)
    if params_kw:
        params = PotentialParams(beta=beta, delta=delta,
                                 rho=params.rho, **params_kw)
    rho_t = 1.5 if delta == 0.0 else 2.0
    cp = default_construction(delta, beta, rho_t)
    if tau is not None:
        cp = cp.with_tau_t(tau, cp.t)
    return VerificationCase(params=params, cp=cp)


# -- grids -----------------------------------------------------------------

def test_make_grid_excludes_and_straddles_kinks(d1_bundle):
    spec = GridSpec(points_per_decade=32)
    r = make_grid(d1_bundle, spec)
    for kk in (1.0, d1_bundle.b, d1_bundle.scales.a):
        assert np.all(np.abs(r / kk - 1.0) > spec.kink_exclusion * 0.999)
        # straddle points present on both sides
        assert np.any((r > kk) & (r < kk * 1.001))
        assert np.any((r < kk) & (r > kk * 0.999))
    assert np.all(np.diff(r) > 0.0)
    assert r[0] >= spec.r_min and r[-1] <= 1e4 * d1_bundle.scales.a


def test_grid_spec_validation():
    with pytest.raises(DomainError):
        GridSpec(r_min=0.0)
    with pytest.raises(DomainError):
        GridSpec(r_min=1.0, r_max=0.5)
    with pytest.raises(DomainError):
        GridSpec(points_per_decade=2)
    with pytest.raises(DomainError):
        GridSpec(kink_exclusion=0.5)


def test_region_labels(d1_bundle):
    a = d1_bundle.scales.a
    r = np.array([0.5, 2.0, 2.0 * a])
    assert list(region_labels(d1_bundle, r)) == list(REGION_LABELS)


def test_kink_evaluation_rejected(d1_bundle):
    with pytest.raises(DomainError):
        bracket_eval(d1_bundle, 1.0)
    with pytest.raises(DomainError):
        bracket_eval(d1_bundle, d1_bundle.scales.a)


# -- verification ------------------------------------------------------------

def test_calibrated_benchmark_passes():
    case = _case(1.0)
    tau, t, reports = calibrate(case, CAL_H)
    assert tau == 4.0 and t == 1.0
    for rep in reports.values():
        assert rep.passed
        assert rep.min_margin >= 0.0
        assert set(rep.min_margin_by_region) == set(REGION_LABELS)


def test_negative_control_fails_inner_region():
    """tau = 1 with a strong beta = 1.4 singular part must fail in (0,1)."""
    case = _case(1.4 / 1.4, beta=1.4, tau=1.0, c0=10.0, cS=1.0, cL=1.0)
    rep = verify_key_lower(
        _wp_for(case, 1e-12), GridSpec(), mode="envelope",
        case_id=case.case_id)
    assert not rep.passed
    assert rep.worst_region() == "(0,1)"
    # all failures are confined to the singular head and the bridge just
    # past it; none occur in the far region
    wp = _wp_for(case, 1e-12)
    assert all(r < wp.b for r, _ in rep.failures)
    assert any(r < 1.0 for r, _ in rep.failures)


def _wp_for(case, h):
    from carleman_forge.inequality_verifier import _BundleCache
    return _BundleCache(case).get(h, case.cp.tau, case.cp.t)


def test_calibrate_regression_delta0():
    tau, t, _ = calibrate(_case(0.0, beta=1.0), CAL_H)
    assert tau == 2.0 and t == 5.0


def test_calibration_error_on_empty_h():
    with pytest.raises(CalibrationError):
        calibrate(_case(1.0), [])


def test_calibration_error_on_inadmissible_h():
    with pytest.raises(CalibrationError):
        calibrate(_case(1.0), [0.2])


def test_hardness_monotone_in_c0():
    """Scaling up the singular envelope can only shrink the worst margin."""
    case_soft = _case(1.0, tau=4.0, c0=1.0, cS=1.0, cL=1.0)
    case_hard = _case(1.0, tau=4.0, c0=5.0, cS=1.0, cL=1.0)
    wp_s = _wp_for(case_soft, 1e-12)
    wp_h = _wp_for(case_hard, 1e-12)
    g = GridSpec(points_per_decade=32)
    m_s = verify_key_lower(wp_s, g).min_margin
    m_h = verify_key_lower(wp_h, g).min_margin
    assert m_h <= m_s


def test_threshold_positive_and_passing():
    case = _case(1.0, tau=4.0)
    thr = empirical_h_threshold(case, h_min=1e-10, n_grid=13)
    assert thr > 0.0
    rep = verify_key_lower(_wp_for(case, thr), GridSpec(),
                           case_id=case.case_id)
    assert rep.passed
    # two significant digits by construction
    assert _floor_2sig(thr) == thr


def test_floor_2sig_examples():
    assert _floor_2sig(4.567e-6) == pytest.approx(4.5e-6)
    assert _floor_2sig(0.999) == pytest.approx(0.99)
    assert _floor_2sig(1.0) == pytest.approx(1.0)


def test_max_admissible_h_positive():
    for delta in (0.0, 0.5, 1.0):
        assert 0.0 < max_admissible_h(delta) < 1.0


# -- concrete mode -------------------------------------------------------------

def test_concrete_bracket_chain():
    """A - (1+gamma) B >= w' * bracket pointwise for a concrete potential."""
    V = benchmark_potential(1.0)
    case = VerificationCase(params=V.params,
                            cp=default_construction(1.0, 1.0, 2.0)
                            .with_tau_t(4.0, 1.0),
                            mode="concrete", V=V)
    wp = _wp_for(case, 1e-12)
    r = make_grid(wp, GridSpec(points_per_decade=24))
    A, B = AB_eval(wp, r, V)
    _, wprime = wp.w_eval(r)
    br = bracket_eval(wp, r, mode="concrete", V=V)
    lhs = A - (1.0 + wp.cp.gamma) * B
    rhs = wprime * br
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    assert np.all(lhs >= rhs - 1e-9 * scale)


def test_concrete_mode_requires_potential():
    with pytest.raises(DomainError):
        VerificationCase(params=benchmark_params(1.0),
                         cp=default_construction(1.0, 1.0, 2.0),
                         mode="concrete")
    with pytest.raises(DomainError):
        VerificationCase(params=benchmark_params(1.0),
                         cp=default_construction(1.0, 1.0, 2.0),
                         mode="oracle")


def test_concrete_report_records_combined_margins():
    V = benchmark_potential(1.0)
    case = VerificationCase(params=V.params,
                            cp=default_construction(1.0, 1.0, 2.0)
                            .with_tau_t(4.0, 1.0),
                            mode="concrete", V=V)
    wp = _wp_for(case, 1e-12)
    rep = verify_key_lower(wp, GridSpec(points_per_decade=16),
                           mode="concrete", V=V)
    assert rep.margins_combined is not None
    assert rep.passed
    # combined margins dominate the bracket margins
    assert np.all(rep.margins_combined >= rep.margins - 1e-9
                  * np.maximum(np.abs(rep.margins), 1.0))


# -- weight-bound constants ------------------------------------------------------

def test_verify_w_lemma_benchmarks():
    for delta in (0.0, 0.5, 1.0):
        case = _case(delta)
        out = verify_w_lemma(case, [1e-6, 1e-8, 1e-10])
        assert out["passed"]
        assert out["q_nonnegative"]
        assert all(out["bounded"].values())
        assert all(v >= 0.0 for v in out["constants"].values())


# -- report plumbing -------------------------------------------------------------

def test_report_to_dict(d1_bundle):
    rep = verify_key_lower(d1_bundle, GridSpec(points_per_decade=16),
                           case_id="bench")
    d = rep.to_dict()
    assert d["case"] == "bench"
    assert d["passed"] == rep.passed
    assert d["n_grid"] == rep.grid.size
