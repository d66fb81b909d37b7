"""Weight w, phase phi0, and auxiliaries against independent quadrature
oracles and their defining closed forms."""

import math
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning, quad

from carleman_forge.errors import DomainError
from carleman_forge.scales import ConstructionParams, default_construction, derive_scales
from carleman_forge.weight_phase import WeightPhase, build
from conftest import benchmark_params


BUNDLES = ["d1_bundle", "dhalf_bundle", "d0_bundle"]


@pytest.fixture(params=BUNDLES)
def wp(request):
    return request.getfixturevalue(request.param)


# -- Phi1 and the mid-range log integral ---------------------------------------

def test_phi1_fraction_closed_form(wp):
    """Phi1/(r + Phi1) collapses to kappa * x by construction."""
    r = np.geomspace(1.0, 1e5, 200)
    x = wp._phi1_x(r)
    phi1 = wp.phi1(r)
    assert np.max(np.abs(phi1 / (r + phi1) - wp.cp.kappa * x)) < 1e-14


def test_mid_log_integral_vs_quadrature(wp):
    """int_1^r ds/(s + Phi1) against adaptive quadrature of the integrand."""
    for r_end in (1.5, 7.0, 120.0, 0.9 * wp.scales.a):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            ref, _ = quad(lambda s: 1.0 / (s + float(wp.phi1(s))),
                          1.0, r_end, epsabs=1e-13, epsrel=1e-12,
                          points=[1.1, 1.9, min(wp.b, r_end)], limit=400)
        got = float(wp.mid_log_integral(r_end))
        assert got == pytest.approx(ref, rel=5e-9, abs=1e-12)


def test_sandwich_bound_dense(wp):
    r = np.geomspace(1.0, 1e6, 1000)
    lhs, mid, rhs, ok = wp.sandwich_check(r, tol=1e-10)
    assert np.all(ok)


def test_phi1_l1_positive_and_finite(wp):
    assert 0.0 < wp.phi1_l1 < 50.0


# -- weight --------------------------------------------------------------------

def test_w_inner_branch_and_continuity(wp):
    a = wp.scales.a
    w, wprime = wp.w_eval(np.array([0.5, 1.0, 0.5 * a]))
    assert np.allclose(w, [0.25, 1.0, 0.25 * a * a])
    assert np.allclose(wprime, [1.0, 2.0, a])
    w_lo, _ = wp.w_eval(a * (1.0 - 1e-12))
    w_hi, _ = wp.w_eval(a * (1.0 + 1e-12))
    assert abs(w_hi - w_lo) / w_lo < 1e-10


def test_w_prime_jump_at_a(wp):
    left, right = wp.w_prime_at_a()
    assert left == pytest.approx(2.0 * wp.scales.a, rel=1e-12)
    assert 0.0 < right <= left * (1.0 + 1e-12)


def test_w_monotone_and_bounded(wp):
    r = np.geomspace(1e-3, 1e5 * wp.scales.a, 400)
    w, wprime = wp.w_eval(r)
    assert np.all(wprime > 0.0)
    assert np.all(np.diff(w) > 0.0)
    assert w[-1] < wp.w_sup() * (1.0 + 1e-9)


def test_w_derivative_finite_difference(wp):
    a = wp.scales.a
    for r0 in (0.3, 2.5, 2.0 * a, 50.0 * a):
        hh = 1e-6 * r0
        w_p, _ = wp.w_eval(r0 + hh)
        w_m, _ = wp.w_eval(r0 - hh)
        _, wprime = wp.w_eval(r0)
        assert abs((w_p - w_m) / (2.0 * hh) - wprime) / wprime < 1e-6


def test_q_nonnegative_beyond_a(wp):
    r = np.geomspace(wp.scales.a * 1.001, wp.scales.a * 1e5, 300)
    assert np.min(wp.q_eval(r)) >= 0.0
    assert wp.q_eval(0.5 * wp.scales.a) == 0.0


def test_W_long_range_cap(wp):
    """Beyond a, the cL convention caps W at E/(2 cL mL)."""
    r = np.geomspace(wp.scales.a * 1.01, wp.scales.a * 1e4, 100)
    W = wp.W_eval(r)
    cap = 0.5 * r * wp.E / (2.0 * wp.params.cL * wp.params.mL_family(r))
    assert np.all(W <= cap * (1.0 + 1e-12))
    assert np.all(W <= 0.5 * r * wp.G(r) * (1.0 + 1e-12))


# -- phase ---------------------------------------------------------------------

def test_phi0_prime_head_and_continuity(wp):
    beta = wp.params.beta
    assert wp.phi0_prime_eval(0.25) == pytest.approx(0.25 ** (-beta / 2.0))
    lo = wp.phi0_prime_eval(1.0 - 1e-12)
    hi = wp.phi0_prime_eval(1.0 + 1e-12)
    assert abs(hi - lo) / lo < 1e-9
    a = wp.scales.a
    lo = wp.phi0_prime_eval(a * (1.0 - 1e-12))
    hi = wp.phi0_prime_eval(a * (1.0 + 1e-12))
    assert abs(hi - lo) / lo < 1e-8


def test_phi0_continuity_at_kinks(wp):
    for kk in (1.0, wp.b, wp.scales.a):
        lo = wp.phi0_eval(kk * (1.0 - 1e-12))
        hi = wp.phi0_eval(kk * (1.0 + 1e-12))
        assert abs(hi - lo) / abs(lo) < 1e-10


def test_phi0_derivative_finite_difference(wp):
    a = wp.scales.a
    for r0 in (0.5, 3.0, 0.7 * a, 3.0 * a):
        hh = 1e-6 * r0
        fd = (wp.phi0_eval(r0 + hh) - wp.phi0_eval(r0 - hh)) / (2.0 * hh)
        cl = wp.phi0_prime_eval(r0)
        assert abs(fd - cl) / cl < 1e-6


def test_Phi_is_log_derivative_of_phi0_prime(wp):
    a = wp.scales.a
    for r0 in (0.5, 3.0, 0.6 * a, 4.0 * a):
        hh = 1e-6 * r0
        fd = ((math.log(wp.phi0_prime_eval(r0 + hh))
               - math.log(wp.phi0_prime_eval(r0 - hh))) / (2.0 * hh))
        assert abs(fd - wp.Phi_eval(r0)) <= 1e-5 * abs(wp.Phi_eval(r0)) + 1e-12


def test_phi0_increments_vs_quadrature(wp):
    """phi0(R2) - phi0(R1) against adaptive quadrature of phi0' across all
    three branches."""
    a = wp.scales.a
    for r1, r2 in ((0.2, 0.8), (0.5, 3.0), (2.0, 0.9 * a),
                   (2.0 * a, 40.0 * a)):
        kinks = [math.log(k) for k in (1.1, 1.9, wp.b)
                 if r1 < k < r2]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            ref, _ = quad(
                lambda u: math.exp(u) * float(wp.phi0_prime_eval(math.exp(u))),
                math.log(r1), math.log(r2), points=kinks or None,
                epsabs=1e-13, epsrel=1e-12, limit=400)
        got = wp.phi0_eval(r2) - wp.phi0_eval(r1)
        assert got == pytest.approx(ref, rel=1e-8, abs=1e-13)


def test_phi0_sup_tail_closed_form(wp):
    """Beyond R >> a, phi0' = phi0'(R) R G(R)/(r G(r)), so the remaining
    mass has an elementary closed form per family."""
    R = 10.0 * wp.scales.a
    sc = wp.scales
    pR = wp.phi0_prime_eval(R)
    if wp.params.delta > 0.0:
        tail = pR * R / sc.eta
    else:
        tail = pR * R * math.log(R) / (wp.cp.rho_tilde - 1.0)
    got = wp.phi0_sup() - wp.phi0_eval(R)
    assert got == pytest.approx(tail, rel=1e-10)


def test_phi_scales_linearly_in_tau(wp):
    wp2 = wp.with_tau(2.0 * wp.cp.tau)
    r = np.array([0.5, 5.0, 2.0 * wp.scales.a])
    assert np.allclose(wp2.phi_eval(r), 2.0 * wp.phi_eval(r), rtol=1e-14)
    assert np.allclose(wp2.phi_prime_eval(r), 2.0 * wp.phi_prime_eval(r),
                       rtol=1e-14)
    # phi0 itself is tau-independent (caches shared)
    assert np.allclose(wp2.phi0_eval(r), wp.phi0_eval(r), rtol=0.0)


def test_phase_semiclassical_prefactor(wp):
    r0 = 2.0
    expected = (wp.cp.tau * wp.scales.h ** (-1.0 / 3.0) * wp.phi0_eval(r0))
    assert wp.phi_eval(r0) == pytest.approx(expected, rel=1e-14)


# -- domain handling -------------------------------------------------------------

def test_domain_errors(wp):
    with pytest.raises(DomainError):
        wp.w_eval(0.0)
    with pytest.raises(DomainError):
        wp.phi0_prime_eval(-1.0)
    with pytest.raises(DomainError):
        wp.sandwich_check(0.5)
    with pytest.raises(DomainError):
        wp.aux_eval(1.0, "unknown")


def test_large_h_rejected():
    from carleman_forge.scales import HScales
    params = benchmark_params(1.0)
    cp = default_construction(1.0, 1.0, 2.0)
    bad = HScales(h=0.9, lam=-1.0, eta=1.0, k=1.0, M=1.0, a=1.0, eps1=cp.eps1)
    with pytest.raises(DomainError):
        build(bad, cp, params, 1.0)


def test_energy_window_enforced():
    params = benchmark_params(1.0)
    cp = default_construction(1.0, 1.0, 2.0)
    sc = derive_scales(1e-6, 1.0, cp)
    with pytest.raises(DomainError):
        WeightPhase(sc, cp, params, E=2.0)   # E_max = 1
