"""Hypothesis-class envelopes, function families, concrete potentials."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleman_forge.errors import ConfigError, DomainError
from carleman_forge.potential_model import (CHI_HI, CHI_LO, FunctionFamily,
                                            PotentialComponent,
                                            PotentialParams, RadialPotential,
                                            chi, chi_prime, eval_concrete,
                                            eval_envelope, validate)
from conftest import benchmark_params, benchmark_potential


# -- cutoff -----------------------------------------------------------------

def test_chi_plateaus_and_monotone():
    r = np.linspace(0.0, 3.0, 601)
    c = chi(r)
    assert np.all(c[r <= CHI_LO] == 1.0)
    assert np.all(c[r >= CHI_HI] == 0.0)
    assert np.all(np.diff(c) <= 1e-12)
    assert np.all((0.0 <= c) & (c <= 1.0))


def test_chi_prime_matches_finite_difference():
    r = np.linspace(CHI_LO + 0.05, CHI_HI - 0.05, 41)
    hh = 1e-6
    fd = (chi(r + hh) - chi(r - hh)) / (2.0 * hh)
    assert np.max(np.abs(fd - chi_prime(r))) < 1e-6


# -- function families --------------------------------------------------------

@pytest.mark.parametrize("fam", [
    FunctionFamily("one"),
    FunctionFamily("log_power", 1.0),
    FunctionFamily("log_power", 2.0),
    FunctionFamily("power_law", 2.0),
])
def test_family_derivative_consistency(fam):
    r = np.geomspace(1.1, 1e4, 25)
    hh = 1e-6 * r
    fd = (fam(r + hh) - fam(r - hh)) / (2.0 * hh)
    assert np.max(np.abs(fd - fam.derivative(r))) < 1e-6


def test_family_integrability_rule():
    assert not FunctionFamily("one").r_inv_power_integrable(2)
    assert not FunctionFamily("log_power", 0.5).r_inv_power_integrable(1)
    assert FunctionFamily("log_power", 2.0).r_inv_power_integrable(1)
    assert FunctionFamily("log_power", 0.75).r_inv_power_integrable(2)
    assert FunctionFamily("power_law", 2.0).r_inv_power_integrable(1)


def test_unknown_family_rejected():
    with pytest.raises(ConfigError):
        FunctionFamily("cubic")(2.0)


# -- envelopes ----------------------------------------------------------------

def test_envelope_supports_and_values():
    p = benchmark_params(1.0)
    assert eval_envelope(p, "V0", 0.5) == pytest.approx(2.0)    # 1 * 0.5^-1
    assert eval_envelope(p, "V0", 2.5) == 0.0
    assert eval_envelope(p, "VS", 0.5) == 0.0
    # cS * (log 4 + 1)^-2 * 4^-2 at r = 4
    assert eval_envelope(p, "VS", 4.0) == pytest.approx(
        (math.log(4.0) + 1.0) ** -2 / 16.0)
    assert eval_envelope(p, "VL", 4.0) == pytest.approx(
        (math.log(4.0) + 1.0) ** -1)
    assert eval_envelope(p, "VLprime", 4.0) == pytest.approx(
        (math.log(4.0) + 1.0) ** -2 / 4.0)


def test_envelope_requires_positive_radius():
    with pytest.raises(DomainError):
        eval_envelope(benchmark_params(1.0), "V0", 0.0)


def test_tilde_mS_cases():
    p_mid = benchmark_params(0.5)
    assert p_mid.tilde_mS(9.0, lam=2.0) == pytest.approx(9.0 ** (-0.25))
    with pytest.raises(DomainError):
        p_mid.tilde_mS(9.0)
    p1 = benchmark_params(1.0)
    assert p1.tilde_mS(9.0) == pytest.approx(p1.mS(9.0))


def test_default_mS_by_delta():
    assert benchmark_params(0.5).mS.name == "one"
    assert benchmark_params(0.0).mS.name == "log_power"
    assert benchmark_params(1.0).mS.name == "log_power"


def test_min_b_satisfies_smallness():
    p = benchmark_params(1.0)
    b = p.min_b(E_min=1.0)
    assert b > 2.0
    assert p.cL * p.y_family(b) <= 1.0 / 8.0 + 1e-9
    assert p.cL * 0.5 * p.mL_family(b) <= 1.0 / 8.0 + 1e-9


# -- hypothesis-class validation ----------------------------------------------

def test_validate_accepts_benchmarks():
    for delta in (0.0, 0.5, 1.0):
        assert validate(benchmark_params(delta)) == []


def test_validate_flags_violations():
    assert any("beta" in v for v in validate(benchmark_params(1.0, beta=1.5)))
    assert any("rho" in v for v in
               validate(PotentialParams(delta=0.0, rho=1.0)))
    # delta = 0 requires a log-power short-range majorant
    bad = PotentialParams(delta=0.0, rho=1.5, mS_family=FunctionFamily("one"))
    assert any("m_S" in v for v in validate(bad))
    # m_S must be identically 1 in the intermediate range
    bad2 = PotentialParams(delta=0.5,
                           mS_family=FunctionFamily("log_power", 2.0))
    assert any("m_S" in v for v in validate(bad2))
    # y must vanish at infinity
    bad3 = PotentialParams(y_family=FunctionFamily("one"))
    assert any("y" in v for v in validate(bad3))
    # delta = 1 needs r^-1 m_S^2 integrable
    bad4 = PotentialParams(delta=1.0,
                           mS_family=FunctionFamily("log_power", 0.5))
    assert any("integrable" in v for v in validate(bad4))


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.46))
def test_validate_benchmark_scaling_invariance(delta, beta):
    """Scaling all envelope constants by the same factor keeps the class
    membership verdict for in-range (delta, beta)."""
    p1 = PotentialParams(beta=beta, c0=1.0, delta=delta, cS=1.0,
                         rho=2.0 if delta > 0 else 1.5, cL=1.0)
    p2 = PotentialParams(beta=beta, c0=2.0, delta=delta, cS=2.0,
                         rho=2.0 if delta > 0 else 1.5, cL=2.0)
    assert (validate(p1) == []) == (validate(p2) == [])


# -- concrete potentials --------------------------------------------------------

def test_concrete_benchmarks_dominated():
    for delta in (0.0, 0.5, 1.0):
        V = benchmark_potential(delta)     # raises on escape
        r = np.geomspace(1e-3, 1e3, 50)
        sing = np.abs(V.singular_short_value(r))
        env = (eval_envelope(V.params, "V0", r)
               + eval_envelope(V.params, "VS", r, lam=2.0))
        assert np.all(sing <= env + 1e-9)


def test_concrete_escape_raises():
    p = benchmark_params(1.0)
    with pytest.raises(ConfigError):
        RadialPotential([PotentialComponent("power_cutoff", 2.0, 1.0)], p)


def test_concrete_derivative_consistency():
    V = benchmark_potential(1.0)
    r = np.geomspace(0.3, 50.0, 40)
    hh = 1e-6 * r
    fd = (V.value(r + hh) - V.value(r - hh)) / (2.0 * hh)
    assert np.max(np.abs(fd - V.derivative(r))) < 1e-5


def test_long_range_split():
    V = benchmark_potential(1.0)
    r = np.geomspace(0.5, 100.0, 30)
    assert np.allclose(V.value(r),
                       V.long_range_value(r) + V.singular_short_value(r))
    assert np.all(V.long_range_value(r[r < 1.0]) == 0.0)


def test_eval_concrete_interface():
    V = benchmark_potential(1.0)
    assert eval_concrete(V, 2.0) == pytest.approx(float(V.value(2.0)))
    assert eval_concrete(V, 2.0, "derivative") == pytest.approx(
        float(V.derivative(2.0)))
    with pytest.raises(DomainError):
        eval_concrete(V, 0.0)
    with pytest.raises(ConfigError):
        eval_concrete(V, 2.0, "hessian")
