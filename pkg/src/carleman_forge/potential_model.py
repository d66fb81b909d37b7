"""Hypothesis-class potential envelopes and concrete radial sample potentials.

Envelope mode describes the worst case allowed by the hypothesis class:

    |V0(r)|   <= c0 * r**(-beta)              on the cutoff support [0, 2]
    |VS(r)|   <= cS * mS(r) * r**(-1-delta)   for r >= 1
    VL(r)     <= cL * y(r)                    for r >= 1
    VL'(r)    <= cL * mL(r) / r               for r >= 1

Concrete mode holds closed-form radial potentials whose components are
checked against those envelopes on a dense grid at construction time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import ConfigError, DomainError, UnsupportedOperationError
from .scales import BETA_MAX

# ---------------------------------------------------------------------------
# function families
# ---------------------------------------------------------------------------

CHI_LO = 1.1   # chi == 1 on [0, CHI_LO]
CHI_HI = 1.9   # chi == 0 on [CHI_HI, inf)


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, monotone between."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        g = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return f / (f + g)


def _smooth_step_prime(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    f = np.exp(-1.0 / xs)
    g = np.exp(-1.0 / (1.0 - xs))
    fp = f / xs**2
    gp = -g / (1.0 - xs) ** 2
    val = (fp * g - f * gp) / (f + g) ** 2
    return np.where(inside, val, 0.0)


def chi(r):
    """Canonical radial cutoff: 1 on [0, 1.1], 0 on [1.9, inf), C-infinity."""
    r = np.asarray(r, dtype=float)
    return 1.0 - _smooth_step((r - CHI_LO) / (CHI_HI - CHI_LO))


def chi_prime(r):
    r = np.asarray(r, dtype=float)
    return -_smooth_step_prime((r - CHI_LO) / (CHI_HI - CHI_LO)) / (CHI_HI - CHI_LO)


@dataclass(frozen=True)
class FunctionFamily:
    """Named scalar function family on [1, inf) with values in [0, 1]."""

    name: str  # "one" | "log_power" | "power_law"
    exponent: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.name == "one":
            return np.ones_like(r)
        if self.name == "log_power":
            return (np.log(np.maximum(r, 1.0)) + 1.0) ** (-self.exponent)
        if self.name == "power_law":
            return (1.0 + r) ** (-self.exponent)
        raise ConfigError(f"unknown function family {self.name!r}")

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.name == "one":
            return np.zeros_like(r)
        if self.name == "log_power":
            lr = np.log(np.maximum(r, 1.0)) + 1.0
            return -self.exponent * lr ** (-self.exponent - 1.0) / np.maximum(r, 1.0)
        if self.name == "power_law":
            return -self.exponent * (1.0 + r) ** (-self.exponent - 1.0)
        raise ConfigError(f"unknown function family {self.name!r}")

    def r_inv_power_integrable(self, power: int) -> bool:
        """Whether r**-1 * family(r)**power is in L1[1, inf) (analytic rule)."""
        if self.name == "one":
            return False
        if self.name == "log_power":
            return self.exponent * power > 1.0
        if self.name == "power_law":
            return True
        raise ConfigError(f"unknown function family {self.name!r}")


def default_mS_family(delta: float, rho: float) -> FunctionFamily:
    if 0.0 < delta < 1.0:
        return FunctionFamily("one")
    return FunctionFamily("log_power", rho)


# ---------------------------------------------------------------------------
# hypothesis-class parameters (envelope mode)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialParams:
    """All constants and function choices of the potential hypothesis class."""

    n: int = 3
    beta: float = 0.0
    c0: float = 0.0
    delta: float = 1.0
    cS: float = 0.0
    rho: float = 2.0
    cL: float = 0.0
    b: float | None = None       # None -> derived from the envelope and E_min
    p_exponent: float = 2.0      # recorded, not used numerically
    mL_family: FunctionFamily = field(
        default_factory=lambda: FunctionFamily("log_power", 2.0))
    mS_family: FunctionFamily | None = None
    y_family: FunctionFamily = field(
        default_factory=lambda: FunctionFamily("log_power", 1.0))

    @property
    def mS(self) -> FunctionFamily:
        if self.mS_family is not None:
            return self.mS_family
        return default_mS_family(self.delta, self.rho)

    def tilde_mS(self, r, lam: float | None = None):
        """m~S: equals mS for delta in {0,1}, r**(-1/(2*lambda)) otherwise."""
        r = np.asarray(r, dtype=float)
        if self.delta in (0.0, 1.0):
            return self.mS(r)
        if lam is None:
            raise DomainError("tilde_mS for 0 < delta < 1 requires lambda")
        return np.maximum(r, 1.0) ** (-0.5 / lam)

    def min_b(self, E_min: float) -> float:
        """Smallest radius beyond which cL*y <= E_min/8 and cL*mL/2 <= E_min/8."""
        if self.cL == 0.0:
            return max(self.b or 0.0, 2.0 + 1e-9)
        target = E_min / (8.0 * self.cL)
        lo, hi = 2.0, 2.0
        while (self.y_family(hi) > target or 0.5 * self.mL_family(hi) > target):
            hi *= 2.0
            if hi > 1e300:
                raise ConfigError("envelope tail too slow: no finite b satisfies "
                                  "the long-range smallness condition")
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if self.y_family(mid) > target or 0.5 * self.mL_family(mid) > target:
                lo = mid
            else:
                hi = mid
        return hi

    def resolved_b(self, E_min: float) -> float:
        return self.b if self.b is not None else self.min_b(E_min)


ENVELOPE_COMPONENTS = (
    "V0", "VS", "VL", "VLprime", "mL", "mS", "tilde_mS", "y", "chi")


def eval_envelope(params: PotentialParams, component: str, r,
                  lam: float | None = None):
    """Evaluate one hypothesis envelope at radius r (scalar or array)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("envelope evaluation requires r > 0")
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if component == "V0":
        out = np.where(r <= 2.0, params.c0 * r ** (-params.beta), 0.0)
    elif component == "VS":
        out = np.where(r >= 1.0,
                       params.cS * params.mS(r) * r ** (-1.0 - params.delta),
                       0.0)
    elif component == "VL":
        out = np.where(r >= 1.0, params.cL * params.y_family(r), 0.0)
    elif component == "VLprime":
        out = np.where(r >= 1.0, params.cL * params.mL_family(r) / r, 0.0)
    elif component == "mL":
        out = params.mL_family(r)
    elif component == "mS":
        out = params.mS(r)
    elif component == "tilde_mS":
        out = params.tilde_mS(r, lam)
    elif component == "y":
        out = params.y_family(r)
    elif component == "chi":
        out = chi(r)
    else:
        raise ConfigError(f"unknown envelope component {component!r}")
    return float(out[0]) if scalar else out


def validate(params: PotentialParams) -> list[str]:
    """Return all hypothesis-class violations (empty list means valid)."""
    v: list[str] = []
    if params.n < 2:
        v.append(f"dimension n={params.n} must be >= 2")
    if not (0.0 <= params.beta < BETA_MAX):
        v.append(f"beta={params.beta} exceeds 2(sqrt(3)-1)~{BETA_MAX:.4f}"
                 if params.beta >= BETA_MAX else f"beta={params.beta} negative")
    if not (0.0 <= params.delta <= 1.0):
        v.append(f"delta={params.delta} outside [0, 1]")
    if params.c0 < 0.0 or params.cS < 0.0 or params.cL < 0.0:
        v.append("envelope constants c0, cS, cL must be >= 0")
    if params.rho <= 1.0:
        v.append(f"rho={params.rho} must exceed 1")
    if params.b is not None and params.b <= 2.0:
        v.append(f"b={params.b} must exceed 2")
    if params.p_exponent < 2.0:
        v.append(f"p_exponent={params.p_exponent} must be >= 2")
    # m_L: range (0,1], decreasing tail, r^-1 mL in L1
    mL = params.mL_family
    rr = np.logspace(0.0, 8.0, 2001)
    vals = mL(rr)
    if np.any(vals <= 0.0) or np.any(vals > 1.0 + 1e-12):
        v.append("m_L must take values in (0, 1]")
    if np.any(np.diff(vals[rr >= 1.0]) > 1e-12):
        v.append("m_L must be nonincreasing on [1, inf)")
    if not _r_inv_l1(mL, 1):
        v.append("r^-1 m_L(r) is not integrable on [1, inf)")
    # m_S case table
    mS = params.mS
    if 0.0 < params.delta < 1.0:
        if mS.name != "one":
            v.append("m_S must be identically 1 for 0 < delta < 1")
    elif params.delta == 0.0:
        if not (mS.name == "log_power" and mS.exponent > 1.0):
            v.append("m_S must be (log r + 1)^-rho with rho > 1 for delta = 0")
    elif params.delta == 1.0:
        if not _r_inv_l1(mS, 2):
            v.append("r^-1 m_S(r)^2 is not integrable on [1, inf) (delta = 1)")
        svals = mS(rr)
        if np.any(svals < -1e-12) or np.any(svals > 1.0 + 1e-12):
            v.append("m_S must take values in [0, 1]")
    # y: range [0,1], limit 0
    yv = params.y_family(rr)
    if np.any(yv < -1e-12) or np.any(yv > 1.0 + 1e-12):
        v.append("y must take values in [0, 1]")
    if params.y_family(1e12) > 0.1:
        v.append("y(r) must tend to 0 as r -> inf")
    return v


def _r_inv_l1(fam: FunctionFamily, power: int, horizon: float = 1e8) -> bool:
    """Integrability of r^-1 fam(r)^power on [1, inf): quadrature + tail rule."""
    analytic = fam.r_inv_power_integrable(power)
    with warnings.catch_warnings():
        # slowly convergent log tails trip scipy's subdivision heuristic;
        # the analytic rule plus the tail test below decide convergence
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda s: fam(s) ** power / s, 1.0, horizon, limit=200)
    # tail decay test: integrand * r * log r should vanish for convergence
    tail = fam(horizon) ** power * math.log(horizon)
    return analytic and math.isfinite(val) and tail < 10.0


# ---------------------------------------------------------------------------
# concrete radial potentials
# ---------------------------------------------------------------------------

COMPONENT_KINDS = ("power_cutoff", "long_range", "short_range")


@dataclass(frozen=True)
class PotentialComponent:
    """One closed-form radial term of a concrete potential.

    power_cutoff: c * chi(r) * r**(-beta)                    (V0-type)
    long_range:   c * (1+r)**(-gamma_L) * 1_{r>=1}           (VL-type)
    short_range:  c * mS(r) * r**(-1-delta) * 1_{r>=1}       (VS-type, signed)
    """

    kind: str
    c: float
    exponent: float = 0.0     # beta for power_cutoff, gamma_L for long_range
    mS: FunctionFamily | None = None   # short_range only
    delta: float = 1.0                 # short_range only

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power_cutoff":
            return self.c * chi(r) * r ** (-self.exponent)
        if self.kind == "long_range":
            return np.where(r >= 1.0, self.c * (1.0 + r) ** (-self.exponent), 0.0)
        if self.kind == "short_range":
            m = self.mS(r) if self.mS is not None else 1.0
            return np.where(r >= 1.0, self.c * m * r ** (-1.0 - self.delta), 0.0)
        raise ConfigError(f"unknown component kind {self.kind!r}")

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power_cutoff":
            return self.c * (chi_prime(r) * r ** (-self.exponent)
                             - self.exponent * chi(r) * r ** (-self.exponent - 1.0))
        if self.kind == "long_range":
            return np.where(
                r >= 1.0,
                -self.c * self.exponent * (1.0 + r) ** (-self.exponent - 1.0),
                0.0)
        if self.kind == "short_range":
            if self.mS is None:
                m, mp = 1.0, 0.0
            else:
                m, mp = self.mS(r), self.mS.derivative(r)
            val = self.c * (mp * r ** (-1.0 - self.delta)
                            - (1.0 + self.delta) * m * r ** (-2.0 - self.delta))
            return np.where(r >= 1.0, val, 0.0)
        raise UnsupportedOperationError(
            f"derivative unavailable for component kind {self.kind!r}")


class RadialPotential:
    """Sum of closed-form radial components, envelope-dominated by params."""

    #: log-spaced domination-check grid (>= 1e4 points on (1e-6, 1e6))
    _GRID = np.logspace(-6.0, 6.0, 12001)

    def __init__(self, components: list[PotentialComponent],
                 params: PotentialParams, check_domination: bool = True,
                 lam_probe: float = 2.0):
        self.components = list(components)
        self.params = params
        if check_domination:
            self._check_domination(lam_probe)

    def _check_domination(self, lam_probe: float) -> None:
        tol = 1e-12
        g = self._GRID
        for comp in self.components:
            if comp.kind == "power_cutoff":
                env = eval_envelope(self.params, "V0", g)
                bad = np.abs(comp.value(g)) > env + tol
                mask = np.ones_like(g, dtype=bool)
            elif comp.kind == "long_range":
                env_v = eval_envelope(self.params, "VL", g)
                env_d = eval_envelope(self.params, "VLprime", g)
                mask = g >= 1.0
                bad = ((comp.value(g) > env_v + tol)
                       | (comp.derivative(g) > env_d + tol)) & mask
            elif comp.kind == "short_range":
                env = eval_envelope(self.params, "VS", g, lam=lam_probe)
                mask = g >= 1.0
                bad = (np.abs(comp.value(g)) > env + tol) & mask
            else:
                raise ConfigError(f"unknown component kind {comp.kind!r}")
            if np.any(bad):
                r_bad = g[bad][0]
                raise ConfigError(
                    f"component {comp.kind} escapes its envelope at r={r_bad:.6g}")

    # -- evaluation ---------------------------------------------------------

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=float)
        for comp in self.components:
            out = out + comp.value(r)
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=float)
        for comp in self.components:
            out = out + comp.derivative(r)
        return out

    def long_range_value(self, r):
        """V_L: the long-range part (zero when no long-range components)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=float)
        for comp in self.components:
            if comp.kind == "long_range":
                out = out + comp.value(r)
        return out

    def long_range_derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r, dtype=float)
        for comp in self.components:
            if comp.kind == "long_range":
                out = out + comp.derivative(r)
        return out

    def singular_short_value(self, r):
        """V0 + VS: everything except the long-range part."""
        return self.value(r) - self.long_range_value(r)


def eval_concrete(V: RadialPotential, r, order: str = "value"):
    """Evaluate a concrete potential (or its radial derivative) at r > 0."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("concrete evaluation requires r > 0")
    if order == "value":
        out = V.value(arr)
    elif order == "derivative":
        out = V.derivative(arr)
    else:
        raise ConfigError(f"unknown order {order!r}")
    return float(out) if np.ndim(r) == 0 else out
