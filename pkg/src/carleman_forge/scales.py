"""The h-dependent scale system and fixed construction constants.

All quantities here are scalars derived from the semiclassical parameter h
and the short-range decay index delta:

    lambda = log(log(1/h))          eta = 1/log(1/h)
    k      = 1                for delta = 1
           = (1+2*delta-1/lambda)/3 for 0 < delta < 1
           = 1/3              for delta = 0
    M      = sigma/k + T*eta*lambda       (0 < delta <= 1)
           = 1 + T*eta*lambda + t*eta     (delta = 0)
    a      = h**(-M)

together with the fixed constants (sigma, rho_tilde, gamma, tau, kappa,
T, t, eps_exponent, E_min, E_max) that parameterize the weight/phase
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError, DomainError, InadmissibleHError

SIGMA = 1.0 / 3.0

BETA_MAX = 2.0 * (math.sqrt(3.0) - 1.0)  # ~1.4641


@dataclass(frozen=True)
class ConstructionParams:
    """Fixed (h-independent) constants of the weight/phase construction."""

    sigma: float = SIGMA
    rho_tilde: float = 1.5
    gamma: float = 1.0
    tau: float = 1.0
    kappa: float = 0.125
    T: float = 1.0
    t: float = 1.0
    eps_exponent: float = 0.7
    E_min: float = 1.0
    E_max: float = 1.0

    def __post_init__(self):
        if abs(self.sigma - SIGMA) > 1e-15:
            raise ConfigError("sigma must be exactly 1/3")
        if not (0.0 < self.kappa <= 0.125):
            raise ConfigError("kappa must lie in (0, 1/8]")
        if self.tau < 1.0:
            raise ConfigError("tau must be >= 1")
        if self.t < 1.0:
            raise ConfigError("t must be >= 1")
        if self.T <= 0.0:
            raise ConfigError("T must be positive")
        if not (0.0 < self.eps_exponent < 1.0):
            raise ConfigError("eps_exponent must lie in (0, 1)")
        if not (0.0 < self.E_min <= self.E_max):
            raise ConfigError("need 0 < E_min <= E_max")
        if self.rho_tilde <= 1.0:
            raise ConfigError("rho_tilde must exceed 1")
        if self.gamma <= 0.0:
            raise ConfigError("gamma must be positive")

    @property
    def eps1(self) -> float:
        return self.eps_exponent / 7.0

    def with_tau_t(self, tau: float, t: float) -> "ConstructionParams":
        """Copy with updated calibration parameters tau and t."""
        return replace(self, tau=tau, t=t)


@dataclass(frozen=True)
class HScales:
    """Scales derived from one value of h (and delta via k, M)."""

    h: float
    lam: float
    eta: float
    k: float
    M: float
    a: float
    eps1: float


def gamma_max(beta: float) -> float:
    """Upper limit of the admissible gamma interval, (8 - 4b - b^2)/b^2.

    Returns +inf for beta = 0 (no upper constraint).
    """
    if beta == 0.0:
        return math.inf
    if not (0.0 < beta < BETA_MAX):
        raise DomainError(
            f"beta={beta} outside [0, 2(sqrt(3)-1)) ~ [0, {BETA_MAX:.4f})")
    return (8.0 - 4.0 * beta - beta * beta) / (beta * beta)


def k_exponent(delta: float, lam: float) -> float:
    """Piecewise decay exponent k of the mid-range phase derivative."""
    if delta == 1.0:
        return 1.0
    if delta == 0.0:
        return 1.0 / 3.0
    return (1.0 + 2.0 * delta - 1.0 / lam) / 3.0


def derive_scales(h: float, delta: float, cp: ConstructionParams) -> HScales:
    """Populate all h-derived scales for one value of h."""
    if not (0.0 < h < 1.0):
        raise InadmissibleHError(f"h={h} not in (0, 1)")
    L = math.log(1.0 / h)
    if L <= 1.0:
        raise InadmissibleHError(
            f"h={h} gives log(1/h)={L:.4g} <= 1; lambda undefined or <= 0")
    lam = math.log(L)
    eta = 1.0 / L
    k = k_exponent(delta, lam)
    if delta == 0.0:
        M = 1.0 + cp.T * eta * lam + cp.t * eta
    else:
        M = cp.sigma / k + cp.T * eta * lam
    a = h ** (-M)
    return HScales(h=h, lam=lam, eta=eta, k=k, M=M, a=a, eps1=cp.eps1)


def check_admissible(h: float, delta: float) -> tuple[bool, list[str]]:
    """True iff h satisfies every admissibility condition for this delta.

    Conditions: lambda > 0, eta*lambda in (0, 1], k in [1/3, 1], and
    eta <= min(delta, 1/3) for 0 < delta <= 1, eta <= 1 for delta = 0.
    """
    diagnostics: list[str] = []
    if not (0.0 < h < 1.0):
        return False, [f"h={h} not in (0, 1)"]
    L = math.log(1.0 / h)
    if L <= 1.0:
        return False, [f"log(1/h)={L:.4g} <= 1 so lambda <= 0"]
    lam = math.log(L)
    eta = 1.0 / L
    if not (0.0 < eta * lam <= 1.0):
        diagnostics.append(f"eta*lambda={eta * lam:.4g} outside (0, 1]")
    k = k_exponent(delta, lam)
    if not (1.0 / 3.0 - 1e-12 <= k <= 1.0 + 1e-12):
        diagnostics.append(f"k={k:.4g} outside [1/3, 1]")
    eta_cap = 1.0 if delta == 0.0 else min(delta, 1.0 / 3.0)
    if eta > eta_cap:
        diagnostics.append(f"eta={eta:.4g} exceeds cap {eta_cap:.4g}")
    return not diagnostics, diagnostics


def default_construction(delta: float, beta: float, rho: float,
                         eps_exponent: float = 0.7,
                         E_min: float = 1.0, E_max: float = 1.0,
                         rho_tilde: float | None = None) -> ConstructionParams:
    """Case-dependent defaults for the fixed construction constants.

    T = 9*eps1 for 0 < delta <= 1 and T = 3*rho_tilde/2 for delta = 0.
    kappa = 1/8 for delta in {0, 1}, a small value otherwise.  tau and t
    start at 1 and are meant to be raised by the calibration search.
    """
    if not (0.0 <= beta < BETA_MAX):
        raise DomainError(f"beta={beta} outside [0, {BETA_MAX:.4f})")
    if not (0.0 <= delta <= 1.0):
        raise DomainError(f"delta={delta} outside [0, 1]")
    eps1 = eps_exponent / 7.0
    if rho_tilde is None:
        rho_tilde = min(1.5, rho) if rho > 1.0 else 1.5
    if delta == 0.0:
        T = 1.5 * rho_tilde
    else:
        T = 9.0 * eps1
    if delta in (0.0, 1.0):
        kappa = 0.125
    else:
        # for 0 < delta < 1 the exponent k*||s^-2 Phi1||_L1 grows like
        # k*kappa*lambda (the r^(-1/lambda) part of Phi1 integrates to
        # kappa*lambda); keep that slope at most eps1 so the phase bound
        # only picks up a (log(1/h))^eps1 factor
        k_max = (1.0 + 2.0 * delta) / 3.0
        kappa = min(0.125, eps1 / k_max)
    gm = gamma_max(beta)
    gamma = 1.0 if math.isinf(gm) else min(1.0, gm / 2.0)
    return ConstructionParams(
        rho_tilde=rho_tilde, gamma=gamma, tau=1.0, kappa=kappa, T=T, t=1.0,
        eps_exponent=eps_exponent, E_min=E_min, E_max=E_max)
