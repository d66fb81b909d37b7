"""Shared fixtures: benchmark potentials and weight/phase bundles."""

import pytest

# one line per acceptance criterion, printed in the terminal summary
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)

from carleman_forge.potential_model import (FunctionFamily, PotentialComponent,
                                            PotentialParams, RadialPotential)
from carleman_forge.scales import default_construction, derive_scales
from carleman_forge.weight_phase import build


def benchmark_params(delta: float, beta: float = 1.0) -> PotentialParams:
    """c0 = cS = cL = 1 hypothesis class at the given decay indices."""
    rho = 1.5 if delta == 0.0 else 2.0
    return PotentialParams(beta=beta, c0=1.0, delta=delta, cS=1.0,
                           rho=rho, cL=1.0)


def benchmark_potential(delta: float, beta: float = 1.0) -> RadialPotential:
    """Concrete envelope-saturating sample in the class of benchmark_params."""
    params = benchmark_params(delta, beta)
    comps = []
    if beta > 0.0:
        comps.append(PotentialComponent("power_cutoff", 1.0, beta))
    ms = params.mS if delta in (0.0, 1.0) else None
    comps.append(PotentialComponent("short_range", 1.0, mS=ms, delta=delta))
    comps.append(PotentialComponent("long_range", 1.0, 2.0))
    return RadialPotential(comps, params)


@pytest.fixture(scope="session")
def d1_bundle():
    """delta=1, beta=1 weight/phase bundle at h = 1e-6 (default constants)."""
    params = benchmark_params(1.0)
    cp = default_construction(1.0, 1.0, 2.0)
    return build(derive_scales(1e-6, 1.0, cp), cp, params, 1.0)


@pytest.fixture(scope="session")
def d0_bundle():
    """delta=0 bundle at h = 1e-6."""
    params = benchmark_params(0.0)
    cp = default_construction(0.0, 1.0, 1.5)
    return build(derive_scales(1e-6, 0.0, cp), cp, params, 1.0)


@pytest.fixture(scope="session")
def dhalf_bundle():
    """delta=0.5 bundle at h = 1e-6."""
    params = benchmark_params(0.5)
    cp = default_construction(0.5, 1.0, 2.0)
    return build(derive_scales(1e-6, 0.5, cp), cp, params, 1.0)
