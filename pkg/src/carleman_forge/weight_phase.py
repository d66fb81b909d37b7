"""Carleman weight w, phase phi, and auxiliary functions.

Piecewise definitions (a = h**-M from the scale system):

    w(r)      = r^2                      r <= a
              = a^2 exp(K(r))            r >  a,
                K(r) = int_a^r max(2/(s G(s)), 4 cL mL(s)/(E s)) ds
    phi0'(r)  = r^(-beta/2)              r <= 1
              = exp(-int_1^r k/(s + Phi1(s)) ds)   1 < r <= a
              = phi0'(a) a G(a) / (r G(r))         r >  a
    phi(r)    = tau h^(-sigma) phi0(r),  phi0(r) = int_0^r phi0'

with G(r) = r^eta (delta > 0) or (log r)^rho_tilde (delta = 0), and
Phi1 = kappa*r*x/(1 - kappa*x), x = m~S^2 + chi + (y + mL) 1_{1 < r <= b};
the r factor makes Phi1/(r + Phi1) = kappa*x exactly.

The mid-range integral is reduced to int_1^r k/(s+Phi1) = k*(log r - J(r))
with J(r) = int_1^r Phi1/(s(s+Phi1)) ds = kappa * int_1^r x(s)/s ds (the
algebra is exact thanks to the r factor in Phi1).  J is assembled from
closed-form log-integrals of the function families plus a short cached
integral over the cutoff bridge.  Remaining cumulative integrals are
cached on log-spaced grids with monotone cubic interpolation;
derivative-bearing quantities (w', phi0') always come from their closed
forms, never from differentiating a cache.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericError
from .potential_model import CHI_HI, CHI_LO, PotentialParams, chi
from .scales import ConstructionParams, HScales

_GL_NODES, _GL_WEIGHTS = leggauss(8)


def _cumulative_gl(u_nodes: np.ndarray, f_of_u: Callable) -> np.ndarray:
    """Cumulative integral of f over the node partition, Gauss-Legendre 8."""
    lo = u_nodes[:-1]
    hi = u_nodes[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f_of_u(pts.ravel()).reshape(pts.shape)
    seg = half * (vals @ _GL_WEIGHTS)
    out = np.empty(u_nodes.size)
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


def _log_grid(u_min: float, u_max: float, n: int, kinks=()) -> np.ndarray:
    u = np.linspace(u_min, u_max, n)
    extra = [k for k in kinks if u_min < k < u_max]
    if extra:
        u = np.unique(np.concatenate([u, np.asarray(extra)]))
    return u


def _log_power_cumulative(exponent: float, u):
    """int_0^u (v+1)^(-exponent) dv in closed form."""
    u = np.asarray(u, dtype=float)
    if exponent == 1.0:
        return np.log1p(u)
    return ((u + 1.0) ** (1.0 - exponent) - 1.0) / (1.0 - exponent)


class WeightPhase:
    """Evaluator bundle for w, phi and their auxiliaries at one (h, E) pair.

    Immutable after construction; all evaluators accept scalars or arrays.
    """

    def __init__(self, scales: HScales, cp: ConstructionParams,
                 params: PotentialParams, E: float,
                 use_cl_convention: bool = True,
                 n_cache_nodes: int = 8192):
        # only the basic domain is needed to build the evaluators; the
        # stricter eta/k admissibility caps are enforced by the verifier
        if not (0.0 < scales.h < 1.0) or scales.lam <= 0.0:
            raise DomainError(
                f"h={scales.h} outside (0, 1/e): lambda undefined")
        if not (cp.E_min <= E <= cp.E_max):
            raise DomainError(f"E={E} outside [{cp.E_min}, {cp.E_max}]")
        self.scales = scales
        self.cp = cp
        self.params = params
        self.E = float(E)
        self.use_cl_convention = use_cl_convention
        self._n_nodes = n_cache_nodes
        self.b = params.resolved_b(cp.E_min)
        self._build()

    # -- construction -------------------------------------------------------

    def _phi1_x(self, r):
        """x(r) = m~S^2 + chi + (y + mL) 1_{1 < r <= b} for r >= 1."""
        r = np.asarray(r, dtype=float)
        p = self.params
        x = p.tilde_mS(r, self.scales.lam) ** 2 + chi(r)
        near = (r > 1.0) & (r <= self.b)
        if np.any(near):
            x = x + np.where(near, p.y_family(r) + p.mL_family(r), 0.0)
        return x

    def phi1(self, r):
        """Phi1(r) = kappa r x / (1 - kappa x); denominator >= 1/2 by design."""
        r = np.asarray(r, dtype=float)
        x = self._phi1_x(r)
        kx = self.cp.kappa * x
        return r * kx / (1.0 - kx)

    def _grand_w(self, s):
        """Integrand of K: max(2/(s G), 4 cL mL/(E s)) (cL per convention)."""
        s = np.asarray(s, dtype=float)
        g = 2.0 / (s * self.G(s))
        cl = self.params.cL if self.use_cl_convention else 1.0
        if cl > 0.0:
            g = np.maximum(g, 4.0 * cl * self.params.mL_family(s) / (self.E * s))
        return g

    def _build(self):
        sc, cp = self.scales, self.cp
        a = sc.a
        # || s^-2 Phi1 ||_L1(1, inf): adaptive quadrature split at kinks,
        # with the slowly decaying tail integrated in u = log s
        def f(s):
            return float(self.phi1(s)) / (s * s)
        pieces = sorted({1.0, CHI_LO, CHI_HI, self.b})
        total, err = 0.0, 0.0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            v, e = quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += v
            err += e
        def tail_g(u):
            # s > b: chi = 0 and the near-range indicator is off, so
            # x = m~S^2, which has a closed u = log s form per family
            p = self.params
            if p.delta in (0.0, 1.0):
                fam = p.mS
                if fam.name == "log_power":
                    ms2 = (u + 1.0) ** (-2.0 * fam.exponent)
                elif fam.name == "one":
                    ms2 = 1.0
                else:
                    ms2 = float(fam(math.exp(min(u, 700.0)))) ** 2
            else:
                ms2 = math.exp(-u / sc.lam)
            kx = cp.kappa * ms2
            return kx / (1.0 - kx)   # = Phi1/s^2 * ds/du

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            v, e = quad(tail_g, math.log(pieces[-1]), np.inf,
                        epsabs=1e-13, epsrel=1e-12, limit=400)
        total += v
        err += e
        if not math.isfinite(total):
            raise NumericError("quadrature for ||s^-2 Phi1|| did not converge")
        self.phi1_l1 = total

        # J(r) = kappa * int_1^r x(s)/s ds: closed forms plus bridge cache
        self._build_J()

        # phi0'(a) and the mid-range cumulative integral of phi0'
        self._phi0p_a = math.exp(-sc.k * (math.log(a) - self._J_eval(math.log(a))))
        ua = math.log(a)
        kinks = (math.log(CHI_LO), math.log(CHI_HI), math.log(self.b))
        u_bridge = min(1.3, ua)
        parts = [_log_grid(0.0, u_bridge, self._n_nodes // 4, kinks)]
        if u_bridge < ua:
            parts.append(_log_grid(u_bridge, ua, self._n_nodes, kinks))
        um = np.unique(np.concatenate(parts))

        def p_grand(uu):
            s = np.exp(uu)
            return s * self._phi0_prime_mid(s)

        pvals = _cumulative_gl(um, p_grand)
        self._P = PchipInterpolator(um, pvals, extrapolate=False)
        self._P_umax = um[-1]
        self._P_a = pvals[-1]

        # K(r) = int_a^r max(2/(sG), 4 cL mL/(Es)) ds on r in [a, 1e6 a]
        uk = np.linspace(ua, ua + math.log(1.0e6), 4096)

        def k_grand(uu):
            s = np.exp(uu)
            return s * self._grand_w(s)

        kvals = _cumulative_gl(uk, k_grand)
        self._K = PchipInterpolator(uk, kvals, extrapolate=False)
        self._K_umax = uk[-1]
        self._K_last = kvals[-1]

    def _build_J(self):
        """Assemble J(e^u) = kappa * int_0^u x(e^v) dv from closed pieces.

        x = m~S^2 + chi + (y + mL) 1_{1 < r <= b}; the "one", "log_power",
        and exponential (0 < delta < 1) parts integrate in closed form,
        while chi and any power-law families go into one short cumulative
        cache (their supports are bounded in u = log r).
        """
        p, cp, sc = self.params, self.cp, self.scales
        ub = math.log(self.b)
        closed = []
        numeric = []   # (integrand of v, support cap in u)
        if p.delta in (0.0, 1.0):
            fam = p.mS
            if fam.name == "one":
                closed.append(lambda u: u)
            elif fam.name == "log_power":
                e2 = 2.0 * fam.exponent
                closed.append(lambda u, e2=e2: _log_power_cumulative(e2, u))
            else:
                numeric.append(
                    (lambda v, f=fam: f(np.exp(np.minimum(v, 700.0))) ** 2,
                     700.0))
        else:
            lam = sc.lam
            closed.append(lambda u, lam=lam: lam * (-np.expm1(-u / lam)))
        numeric.append((lambda v: chi(np.exp(v)), math.log(CHI_HI)))
        for fam in (p.y_family, p.mL_family):
            if fam.name == "one":
                closed.append(lambda u, ub=ub: np.minimum(u, ub))
            elif fam.name == "log_power":
                closed.append(
                    lambda u, f=fam, ub=ub: _log_power_cumulative(
                        f.exponent, np.minimum(u, ub)))
            else:
                numeric.append(
                    (lambda v, f=fam, ub=ub: np.where(
                        v <= ub, f(np.exp(np.minimum(v, 700.0))), 0.0),
                     min(ub, 700.0)))
        self._J_closed = closed
        u_cap = max(cap for _, cap in numeric)
        kinks = (math.log(CHI_LO), math.log(CHI_HI), ub)
        u_bridge = min(1.3, u_cap)
        parts = [_log_grid(0.0, u_bridge, self._n_nodes // 2, kinks)]
        if u_bridge < u_cap:
            parts.append(_log_grid(u_bridge, u_cap, self._n_nodes // 2, kinks))
        u = np.unique(np.concatenate(parts))
        pieces = list(numeric)

        def g(v):
            out = np.zeros_like(v)
            for f, cap in pieces:
                out = out + np.where(v <= cap, f(v), 0.0)
            return out

        vals = _cumulative_gl(u, g)
        self._J_num = PchipInterpolator(u, vals, extrapolate=False)
        self._J_num_umax = u[-1]
        self._J_num_last = vals[-1]

    # -- cached integrals ----------------------------------------------------

    def _J_eval(self, u):
        u = np.asarray(u, dtype=float)
        uc = np.maximum(u, 0.0)
        total = np.zeros_like(uc)
        for f in self._J_closed:
            total = total + f(uc)
        un = np.clip(uc, 0.0, self._J_num_umax)
        total = total + np.where(uc >= self._J_num_umax, self._J_num_last,
                                 self._J_num(un))
        return self.cp.kappa * total

    def _K_eval(self, u):
        u = np.asarray(u, dtype=float)
        ua = math.log(self.scales.a)
        if np.any(u > self._K_umax):
            raise DomainError("w evaluation beyond cached range (r > 1e6 a)")
        return np.where(u <= ua, 0.0, self._K(np.clip(u, ua, self._K_umax)))

    def mid_log_integral(self, r):
        """int_1^r 1/(s + Phi1(s)) ds = log r - J(r), valid for r >= 1."""
        u = np.log(np.asarray(r, dtype=float))
        return u - self._J_eval(u)

    # -- weight -------------------------------------------------------------

    def G(self, r):
        r = np.asarray(r, dtype=float)
        if self.params.delta > 0.0:
            return r ** self.scales.eta
        return np.log(np.maximum(r, math.e)) ** self.cp.rho_tilde

    def w_eval(self, r):
        """Return (w, w') elementwise; at r = a the r<=a branch is used."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise DomainError("w requires r > 0")
        a = self.scales.a
        below = r <= a
        w = np.where(below, r * r, 0.0)
        wp = np.where(below, 2.0 * r, 0.0)
        if np.any(~below):
            ro = np.where(below, a, r)
            K = self._K_eval(np.log(ro))
            wo = a * a * np.exp(K)
            wpo = wo * self._grand_w(ro)
            w = np.where(below, w, wo)
            wp = np.where(below, wp, wpo)
        if w.ndim == 0:
            return float(w), float(wp)
        return w, wp

    def w_prime_at_a(self) -> tuple[float, float]:
        """One-sided values of w' at the jump r = a (left, right)."""
        a = self.scales.a
        left = 2.0 * a
        right = a * a * float(self._grand_w(np.asarray(a)))
        return left, right

    def w_sup(self) -> float:
        """sup_r w(r) = a^2 exp(K(inf)); tail of K evaluated by quadrature."""
        a = self.scales.a
        r_hi = math.exp(self._K_umax)
        with warnings.catch_warnings():
            # the integrand decays like s^(-1-eta) with small eta: convergent
            # but slow enough to trip scipy's subdivision heuristic
            warnings.simplefilter("ignore", IntegrationWarning)
            tail, _ = quad(lambda s: float(self._grand_w(np.asarray(s))),
                           r_hi, np.inf, limit=200)
        return a * a * math.exp(self._K_last + tail)

    # -- phase --------------------------------------------------------------

    def _phi0_prime_mid(self, r):
        u = np.log(np.asarray(r, dtype=float))
        return np.exp(-self.scales.k * (u - self._J_eval(u)))

    def phi0_prime_eval(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise DomainError("phi0' requires r > 0")
        a = self.scales.a
        out = np.where(r <= 1.0, r ** (-0.5 * self.params.beta), 0.0)
        mid = (r > 1.0) & (r <= a)
        if np.any(mid):
            rm = np.where(mid, r, 2.0)
            out = np.where(mid, self._phi0_prime_mid(rm), out)
        high = r > a
        if np.any(high):
            rh = np.where(high, r, 2.0 * a)
            val = self._phi0p_a * a * self.G(a) / (rh * self.G(rh))
            out = np.where(high, val, out)
        return float(out) if out.ndim == 0 else out

    def _tail_integral(self, r):
        """int_a^r a G(a) / (s G(s)) ds (closed form), r >= a."""
        r = np.asarray(r, dtype=float)
        a, sc = self.scales.a, self.scales
        if self.params.delta > 0.0:
            return a ** (1.0 + sc.eta) * (a ** -sc.eta - r ** -sc.eta) / sc.eta
        rt = self.cp.rho_tilde
        la, lr = math.log(a), np.log(r)
        return a * la ** rt * (la ** (1.0 - rt) - lr ** (1.0 - rt)) / (rt - 1.0)

    def phi0_eval(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0):
            raise DomainError("phi0 requires r >= 0")
        beta = self.params.beta
        a = self.scales.a
        head = np.minimum(r, 1.0) ** (1.0 - 0.5 * beta) / (1.0 - 0.5 * beta)
        out = head
        mid = (r > 1.0)
        if np.any(mid):
            um = np.clip(np.log(np.clip(r, 1.0, a)), 0.0, self._P_umax)
            out = out + np.where(mid, self._P(um), 0.0)
        high = r > a
        if np.any(high):
            rh = np.where(high, r, a)
            out = out + np.where(high, self._phi0p_a * self._tail_integral(rh), 0.0)
        return float(out) if out.ndim == 0 else out

    def phi_eval(self, r):
        return self.cp.tau * self.scales.h ** (-self.cp.sigma) * self.phi0_eval(r)

    def phi_prime_eval(self, r):
        return (self.cp.tau * self.scales.h ** (-self.cp.sigma)
                * self.phi0_prime_eval(r))

    def phi0_sup(self) -> float:
        """lim_{r->inf} phi0(r): head + mid cache + closed-form tail."""
        beta = self.params.beta
        a, sc = self.scales.a, self.scales
        head = 1.0 / (1.0 - 0.5 * beta)
        if self.params.delta > 0.0:
            tail = self._phi0p_a * a / sc.eta
        else:
            rt = self.cp.rho_tilde
            if rt <= 1.0:
                raise DomainError("tail integral diverges for rho_tilde <= 1")
            tail = self._phi0p_a * a * math.log(a) / (rt - 1.0)
        return head + self._P_a + tail

    def phi_sup(self) -> float:
        return self.cp.tau * self.scales.h ** (-self.cp.sigma) * self.phi0_sup()

    # -- auxiliaries ----------------------------------------------------------

    def W_eval(self, r):
        """Script-W = w/w' in closed form."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise DomainError("W requires r > 0")
        a = self.scales.a
        out = 0.5 * r
        high = r > a
        if np.any(high):
            rh = np.where(high, r, 2.0 * a)
            g = self.G(rh)
            cl = self.params.cL if self.use_cl_convention else 1.0
            if cl > 0.0:
                cap = self.E / (2.0 * cl * self.params.mL_family(rh))
                g = np.minimum(g, cap)
            out = np.where(high, 0.5 * rh * g, out)
        return float(out) if out.ndim == 0 else out

    def Phi_eval(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise DomainError("Phi requires r > 0")
        a, sc = self.scales.a, self.scales
        out = -0.5 * self.params.beta / r
        mid = (r > 1.0) & (r <= a)
        if np.any(mid):
            rm = np.where(mid, r, 2.0)
            out = np.where(mid, -sc.k / (rm + self.phi1(rm)), out)
        high = r > a
        if np.any(high):
            rh = np.where(high, r, 2.0 * a)
            if self.params.delta > 0.0:
                val = -(1.0 + sc.eta) / rh
            else:
                val = -(1.0 + self.cp.rho_tilde / np.log(rh)) / rh
            out = np.where(high, val, out)
        return float(out) if out.ndim == 0 else out

    def q_eval(self, r):
        """q = 2/r - w'/w; zero below a, 2/r - 1/W above."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0):
            raise DomainError("q requires r > 0")
        out = np.zeros_like(r)
        high = r > self.scales.a
        if np.any(high):
            rh = np.where(high, r, 2.0 * self.scales.a)
            out = np.where(high, 2.0 / rh - 1.0 / self.W_eval(rh), out)
        return float(out) if out.ndim == 0 else out

    def aux_eval(self, r, which: str):
        if which == "W":
            return self.W_eval(r)
        if which == "Phi":
            return self.Phi_eval(r)
        if which == "Phi1":
            arr = np.asarray(r, dtype=float)
            if np.any(arr <= 0.0):
                raise DomainError("Phi1 requires r > 0")
            out = self.phi1(arr)
            return float(out) if out.ndim == 0 else out
        if which == "G":
            arr = np.asarray(r, dtype=float)
            if np.any(arr <= 0.0):
                raise DomainError("G requires r > 0")
            out = self.G(arr)
            return float(out) if out.ndim == 0 else out
        if which == "q":
            return self.q_eval(r)
        raise DomainError(f"unknown auxiliary {which!r}")

    # -- lemma checks ---------------------------------------------------------

    def sandwich_check(self, r, tol: float = 1e-10):
        """-log r <= -int_1^r ds/(s+Phi1) <= -log r + ||s^-2 Phi1||_L1."""
        arr = np.asarray(r, dtype=float)
        if np.any(arr < 1.0):
            raise DomainError("sandwich check requires r >= 1")
        lhs = -np.log(arr)
        mid = -self.mid_log_integral(arr)
        rhs = lhs + self.phi1_l1
        ok = (lhs - tol <= mid) & (mid <= rhs + tol)
        if arr.ndim == 0:
            return float(lhs), float(mid), float(rhs), bool(ok)
        return lhs, mid, rhs, ok

    # -- cheap variants -------------------------------------------------------

    def with_tau(self, tau: float) -> "WeightPhase":
        """Share all caches but swap the calibration parameter tau."""
        clone = object.__new__(WeightPhase)
        clone.__dict__.update(self.__dict__)
        clone.cp = self.cp.with_tau_t(tau, self.cp.t)
        return clone


def build(scales: HScales, cp: ConstructionParams, params: PotentialParams,
          E: float, **kw) -> WeightPhase:
    """Construct the evaluator bundle (quadrature caches included)."""
    return WeightPhase(scales, cp, params, E, **kw)
