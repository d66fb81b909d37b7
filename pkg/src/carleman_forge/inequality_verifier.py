"""Pointwise verification of the key Carleman lower bound.

The central objects are, for one weight/phase bundle at semiclassical
parameter h and energy E:

    A(r) = w'(E + (phi')^2 - V_L) + w(2 phi' phi'' - V_L') - h^2 w q/(4 r^2)
    B(r) = w^2 |h^-1 (V_0+V_S) + phi''|^2 / (w' + 4 h^-1 phi' w)

and the bracket

    E + (phi')^2 (1 + 2 W Phi - 2(1+gamma) W Phi^2 m)
      - 2(1+gamma) h^-2 W |V_0+V_S|^2 m - V_L - W (V_L' + h^2 q/(4 r^2)),
    m = min(W, h/(4 phi')),

which satisfies A - (1+gamma) B >= w' * bracket pointwise.  Verification
requires bracket >= E_min/2 on a log grid covering the regions (0,1),
(1,a), (a,infinity), with margins weighted by w' and a relative pass
tolerance of 1e-9.

The module also houses the (tau, t) calibration search, the empirical
h-threshold bisection, the empirical-constant sweep for the weight
bounds, and the phase-supremum scaling fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (CalibrationError, DomainError, ThresholdNotFoundError,
                     UnsupportedOperationError)
from .fitting import fit_loglog
from .potential_model import PotentialParams, RadialPotential, eval_envelope
from .scales import ConstructionParams, check_admissible, derive_scales
from .weight_phase import WeightPhase

REGION_LABELS = ("(0,1)", "(1,a)", "(a,inf)")

_TAU_POWERS = tuple(2.0 ** j for j in range(17))
_T_MAX = 64


# ---------------------------------------------------------------------------
# case bundle and grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationCase:
    """One verification problem: hypothesis class + construction constants."""

    params: PotentialParams
    cp: ConstructionParams
    E: float | None = None              # defaults to cp.E_min (worst case)
    mode: str = "envelope"              # "envelope" | "concrete"
    V: RadialPotential | None = None    # concrete mode only
    use_cl_convention: bool = True

    def __post_init__(self):
        if self.mode not in ("envelope", "concrete"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.mode == "concrete" and self.V is None:
            raise DomainError("concrete mode requires a RadialPotential")

    @property
    def energy(self) -> float:
        return self.cp.E_min if self.E is None else self.E

    @property
    def case_id(self) -> str:
        p = self.params
        return (f"delta={p.delta:g},beta={p.beta:g},"
                f"c0={p.c0:g},cS={p.cS:g},cL={p.cL:g}")

    def with_cp(self, cp: ConstructionParams) -> "VerificationCase":
        return replace(self, cp=cp)


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced radial verification grid with kink exclusion."""

    r_min: float = 1e-4
    r_max: float | None = None          # None -> 1e4 * a
    points_per_decade: int = 64
    kink_exclusion: float = 1e-6        # relative radius around {1, b, a}

    def __post_init__(self):
        if self.r_min <= 0.0:
            raise DomainError("r_min must be positive")
        if self.r_max is not None and self.r_max <= self.r_min:
            raise DomainError("r_max must exceed r_min")
        if self.points_per_decade < 4:
            raise DomainError("need at least 4 points per decade")
        if not (0.0 < self.kink_exclusion < 1e-2):
            raise DomainError("kink_exclusion must lie in (0, 1e-2)")


def make_grid(wp: WeightPhase, spec: GridSpec) -> np.ndarray:
    """Realize the grid for one bundle, excluding {1, b, a} kinks."""
    a = wp.scales.a
    r_max = spec.r_max if spec.r_max is not None else 1e4 * a
    n = max(int(math.ceil(math.log10(r_max / spec.r_min)
                          * spec.points_per_decade)), 8)
    r = np.logspace(math.log10(spec.r_min), math.log10(r_max), n + 1)
    kinks = [1.0, wp.b, a]
    keep = np.ones(r.size, dtype=bool)
    extra = []
    for kk in kinks:
        near = np.abs(r / kk - 1.0) <= spec.kink_exclusion
        keep &= ~near
        if spec.r_min < kk < r_max:
            # straddle each kink so both one-sided branches are sampled
            extra.extend([kk * (1.0 - 10.0 * spec.kink_exclusion),
                          kk * (1.0 + 10.0 * spec.kink_exclusion)])
    r = np.unique(np.concatenate([r[keep], np.asarray(extra)]))
    return r[(r >= spec.r_min) & (r <= r_max)]


def region_labels(wp: WeightPhase, r: np.ndarray) -> np.ndarray:
    lab = np.full(r.shape, REGION_LABELS[1], dtype=object)
    lab[r < 1.0] = REGION_LABELS[0]
    lab[r > wp.scales.a] = REGION_LABELS[2]
    return lab


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def _check_kinks(wp: WeightPhase, r: np.ndarray) -> None:
    if np.any(r <= 0.0):
        raise DomainError("radius must be positive")
    if np.any(r == 1.0) or np.any(r == wp.scales.a):
        raise DomainError("evaluation at the kinks r in {1, a} is undefined")


def _potential_terms(wp: WeightPhase, r: np.ndarray, mode: str,
                     V: RadialPotential | None):
    """(|V0+VS|, V_L, V_L') with envelope worst-case signs or concrete values."""
    if mode == "envelope":
        p = wp.params
        sing = (eval_envelope(p, "V0", r) + eval_envelope(p, "VS", r))
        vl = eval_envelope(p, "VL", r)
        vlp = eval_envelope(p, "VLprime", r)
    elif mode == "concrete":
        if V is None:
            raise DomainError("concrete mode requires a RadialPotential")
        sing = np.abs(V.singular_short_value(r))
        vl = V.long_range_value(r)
        vlp = V.long_range_derivative(r)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return sing, vl, vlp


def bracket_eval(wp: WeightPhase, r, mode: str = "envelope",
                 V: RadialPotential | None = None):
    """The bracketed lower-bound expression; scalar or array in r."""
    arr = np.asarray(r, dtype=float)
    _check_kinks(wp, arr)
    h = wp.scales.h
    gamma = wp.cp.gamma
    E = wp.E
    phip = wp.phi_prime_eval(arr)
    Phi = wp.Phi_eval(arr)
    W = wp.W_eval(arr)
    q = wp.q_eval(arr)
    m = np.minimum(W, h / (4.0 * phip))
    sing, vl, vlp = _potential_terms(wp, arr, mode, V)
    out = (E
           + phip ** 2 * (1.0 + 2.0 * W * Phi
                          - 2.0 * (1.0 + gamma) * W * Phi ** 2 * m)
           - 2.0 * (1.0 + gamma) * (sing / h) ** 2 * W * m
           - vl - W * (vlp + h * h * q / (4.0 * arr * arr)))
    return float(out) if np.ndim(r) == 0 else out


def AB_eval(wp: WeightPhase, r, V: RadialPotential):
    """(A, B) for a concrete potential; phi'' is computed as Phi * phi'."""
    arr = np.asarray(r, dtype=float)
    _check_kinks(wp, arr)
    if not hasattr(V, "long_range_derivative"):
        raise UnsupportedOperationError(
            "AB_eval needs a potential with an analytic radial derivative")
    h = wp.scales.h
    E = wp.E
    w, wprime = wp.w_eval(arr)
    phip = wp.phi_prime_eval(arr)
    phipp = wp.Phi_eval(arr) * phip
    q = wp.q_eval(arr)
    vl = V.long_range_value(arr)
    vlp = V.long_range_derivative(arr)
    sing = V.singular_short_value(arr)
    A = (wprime * (E + phip ** 2 - vl)
         + w * (2.0 * phip * phipp - vlp)
         - h * h * w * q / (4.0 * arr * arr))
    B = (w ** 2 * (sing / h + phipp) ** 2
         / (wprime + 4.0 * phip * w / h))
    if np.ndim(r) == 0:
        return float(A), float(B)
    return A, B


# ---------------------------------------------------------------------------
# grid verification
# ---------------------------------------------------------------------------

@dataclass
class InequalityReport:
    """Margins of the key lower bound over one grid at one h."""

    case_id: str
    h: float
    grid: np.ndarray
    margins: np.ndarray                  # w' * (bracket - E_min/2)
    regions: np.ndarray                  # region label per grid point
    min_margin: float
    min_margin_by_region: dict[str, float]
    failures: list[tuple[float, float]]  # (r, margin) with margin < -tol
    empirical_h_threshold: float | None = None
    margins_combined: np.ndarray | None = None   # concrete mode: A-(1+g)B form

    @property
    def passed(self) -> bool:
        return not self.failures

    def worst_region(self) -> str:
        return min(self.min_margin_by_region,
                   key=self.min_margin_by_region.get)

    def to_dict(self) -> dict:
        return {
            "case": self.case_id,
            "h": self.h,
            "min_margin": self.min_margin,
            "min_margin_by_region": dict(self.min_margin_by_region),
            "n_grid": int(self.grid.size),
            "n_failures": len(self.failures),
            "passed": self.passed,
            "threshold": self.empirical_h_threshold,
        }


def verify_key_lower(wp: WeightPhase, grid: GridSpec | np.ndarray,
                     mode: str = "envelope",
                     V: RadialPotential | None = None,
                     case_id: str = "") -> InequalityReport:
    """Check w'(r) * (bracket(r) - E_min/2) >= -tol over the grid.

    In concrete mode the direct A - (1+gamma) B margins are recorded
    alongside; pass/fail always uses the bracket chain, which is the
    bound the construction actually guarantees.
    """
    r = make_grid(wp, grid) if isinstance(grid, GridSpec) else \
        np.asarray(grid, dtype=float)
    half_E = 0.5 * wp.cp.E_min
    _, wprime = wp.w_eval(r)
    br = bracket_eval(wp, r, mode=mode, V=V)
    margins = wprime * (br - half_E)
    tol = 1e-9 * half_E * wprime
    bad = margins < -tol
    combined = None
    if mode == "concrete":
        A, B = AB_eval(wp, r, V)
        combined = A - (1.0 + wp.cp.gamma) * B - half_E * wprime
    regions = region_labels(wp, r)
    by_region = {}
    for lab in REGION_LABELS:
        sel = regions == lab
        if np.any(sel):
            by_region[lab] = float(np.min(margins[sel]))
    return InequalityReport(
        case_id=case_id, h=wp.scales.h, grid=r, margins=margins,
        regions=regions, min_margin=float(np.min(margins)),
        min_margin_by_region=by_region,
        failures=[(float(rr), float(mm)) for rr, mm in
                  zip(r[bad], margins[bad])],
        margins_combined=combined)


# ---------------------------------------------------------------------------
# calibration of (tau, t)
# ---------------------------------------------------------------------------

class _BundleCache:
    """Builds WeightPhase bundles keyed by (h, t); tau swaps are free."""

    def __init__(self, case: VerificationCase):
        self.case = case
        self._store: dict[tuple[float, float], WeightPhase] = {}

    def get(self, h: float, tau: float, t: float) -> WeightPhase:
        # t only enters the scale system for delta = 0
        t_key = t if self.case.params.delta == 0.0 else 1.0
        key = (h, t_key)
        wp = self._store.get(key)
        if wp is None:
            cp = self.case.cp.with_tau_t(1.0, t_key)
            sc = derive_scales(h, self.case.params.delta, cp)
            wp = WeightPhase(sc, cp, self.case.params, self.case.energy,
                             use_cl_convention=self.case.use_cl_convention)
            self._store[key] = wp
        return wp.with_tau(tau) if tau != 1.0 else wp


def _verify_once(case: VerificationCase, cache: _BundleCache, h: float,
                 tau: float, t: float, grid: GridSpec) -> InequalityReport:
    wp = cache.get(h, tau, t)
    return verify_key_lower(wp, grid, mode=case.mode, V=case.V,
                            case_id=case.case_id)


def calibrate(case: VerificationCase, h_list,
              grid: GridSpec | None = None
              ) -> tuple[float, float, dict[float, InequalityReport]]:
    """Smallest tau in {2^j}, then smallest t in {1..64}, passing all h."""
    h_list = sorted(set(float(h) for h in h_list), reverse=True)
    if not h_list:
        raise CalibrationError("empty h list")
    for h in h_list:
        ok, diag = check_admissible(h, case.params.delta)
        if not ok:
            raise CalibrationError(f"h={h} inadmissible: {diag}")
    grid = grid or GridSpec()
    cache = _BundleCache(case)
    t_values = range(1, _T_MAX + 1) if case.params.delta == 0.0 else (1,)
    last_fail: InequalityReport | None = None
    for tau in _TAU_POWERS:
        for t in t_values:
            reports: dict[float, InequalityReport] = {}
            ok = True
            inner_failure = False
            for h in h_list:
                rep = _verify_once(case, cache, h, tau, float(t), grid)
                reports[h] = rep
                if not rep.passed:
                    ok = False
                    last_fail = rep
                    # failures at r < a are insensitive to t; raise tau
                    a = cache.get(h, tau, float(t)).scales.a
                    inner_failure = any(r < 0.9 * a for r, _ in rep.failures)
                    break
            if ok:
                return tau, float(t), reports
            if inner_failure:
                break  # move to the next tau
    region = last_fail.worst_region() if last_fail is not None else "?"
    raise CalibrationError(
        f"no (tau <= {_TAU_POWERS[-1]:g}, t <= {_T_MAX}) passes for "
        f"{case.case_id}; worst region {region}")


# ---------------------------------------------------------------------------
# empirical h threshold
# ---------------------------------------------------------------------------

def max_admissible_h(delta: float) -> float:
    """Largest h passing every admissibility condition (bisection)."""
    lo, hi = 1.0 + 1e-9, 60.0   # in s = log(1/h); conditions monotone in s
    if check_admissible(math.exp(-lo), delta)[0]:
        return math.exp(-lo)
    if not check_admissible(math.exp(-hi), delta)[0]:
        raise DomainError(f"no admissible h found for delta={delta}")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if check_admissible(math.exp(-mid), delta)[0]:
            hi = mid
        else:
            lo = mid
    return math.exp(-hi * (1.0 + 1e-9))


def empirical_h_threshold(case: VerificationCase,
                          h_min: float = 1e-12,
                          n_grid: int = 21,
                          grid: GridSpec | None = None) -> float:
    """Largest h such that the bound holds for all tested h' <= h.

    Scans a descending log grid from the admissibility limit down to
    h_min, finds the top of the contiguous passing run anchored at the
    smallest h, and refines it by bisection to two significant digits.
    """
    grid = grid or GridSpec()
    cache = _BundleCache(case)
    tau, t = case.cp.tau, case.cp.t
    h_max = max_admissible_h(case.params.delta)
    if h_min >= h_max:
        raise ThresholdNotFoundError(
            f"h_min={h_min} above the admissibility limit {h_max:.3g}")
    hs = np.exp(np.linspace(math.log(h_max), math.log(h_min), n_grid))

    def passes(h: float) -> bool:
        return _verify_once(case, cache, float(h), tau, t, grid).passed

    verdicts = [passes(h) for h in hs]
    if not verdicts[-1]:
        raise ThresholdNotFoundError(
            f"bound fails even at h={hs[-1]:.3g} for {case.case_id}")
    # top of the passing run that is anchored at the smallest tested h
    i = len(hs) - 1
    while i > 0 and verdicts[i - 1]:
        i -= 1
    if i == 0:
        return float(hs[0])
    lo, hi = float(hs[i]), float(hs[i - 1])   # lo passes, hi fails
    while hi / lo > 1.005:
        mid = math.sqrt(lo * hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    # round down to 2 significant digits and re-verify so the reported
    # threshold itself is always a passing h
    thr = _floor_2sig(lo)
    while not passes(thr):
        thr = _floor_2sig(0.98 * thr)
    return thr


def _floor_2sig(x: float) -> float:
    scale = 10.0 ** (math.floor(math.log10(x)) - 1)
    return math.floor(x / scale) * scale


# ---------------------------------------------------------------------------
# weight-bound empirical constants
# ---------------------------------------------------------------------------

def _bounded_sequence(values: list[float], L_values: list[float]) -> bool:
    """Boundedness heuristic over h sorted descending (smallest h last)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True
    if int(np.argmax(v)) != v.size - 1:
        return True
    prev, last = v[-2], v[-1]
    if prev <= 0.0:
        return last <= 1e-12
    growth = last / prev
    # a constant-with-O(1/lambda) tail passes; genuine lambda-power growth
    # produces ratios of order (lambda_last/lambda_prev) and is rejected
    allowed = (L_values[-1] / L_values[-2]) ** 0.2
    return growth <= allowed


def verify_w_lemma(case: VerificationCase, h_list,
                   grid: GridSpec | None = None) -> dict:
    """Empirical constants of the universal weight bounds over an h sweep.

        C_w      : sup_r w(r) / h^(-2-2M)        (delta>0; h^(-2M) at delta=0)
        C_wprime : exponent C with w'(r) >= (log 1/h)^(-C) r^(-1-eta), r > a
        C_ratio  : exponent C with w^2/w' <= (log 1/h)^C h^(-2-2M) r^(1+eta)
        q_min    : min of q over grid r > a (expected >= 0)

    Passes iff each constant sequence is bounded in h and q stays >= 0.
    """
    grid = grid or GridSpec()
    cache = _BundleCache(case)
    h_sorted = sorted(set(float(h) for h in h_list), reverse=True)
    rows = []
    for h in h_sorted:
        wp = cache.get(h, case.cp.tau, case.cp.t)
        sc = wp.scales
        r = make_grid(wp, grid)
        outer = r > sc.a
        w, wprime = wp.w_eval(r)
        h_pow = 2.0 * sc.M if case.params.delta == 0.0 else 2.0 + 2.0 * sc.M
        row_L = math.log(1.0 / h)
        C_w = wp.w_sup() * h ** h_pow
        ro = r[outer]
        if ro.size:
            ratio_lo = np.max(ro ** (-1.0 - sc.eta) / wprime[outer])
            C_wp = max(0.0, math.log(max(ratio_lo, 1e-300)) / sc.lam)
            # evaluated in log space: w^2/w' overflows at very small h
            log_D = np.max(2.0 * np.log(w[outer]) - np.log(wprime[outer])
                           - h_pow * row_L - (1.0 + sc.eta) * np.log(ro))
            C_ratio = max(0.0, float(log_D) / sc.lam)
            q_min = float(np.min(wp.q_eval(ro)))
        else:
            C_wp, C_ratio, q_min = 0.0, 0.0, 0.0
        rows.append({"h": h, "C_w": C_w, "C_wprime": C_wp,
                     "C_ratio": C_ratio, "q_min": q_min,
                     "L": math.log(1.0 / h)})
    Ls = [row["L"] for row in rows]
    bounded = {key: _bounded_sequence([row[key] for row in rows], Ls)
               for key in ("C_w", "C_wprime", "C_ratio")}
    q_ok = all(row["q_min"] >= -1e-12 for row in rows)
    return {
        "case": case.case_id,
        "per_h": rows,
        "constants": {key: max(row[key] for row in rows)
                      for key in ("C_w", "C_wprime", "C_ratio")},
        "bounded": bounded,
        "q_nonnegative": q_ok,
        "passed": q_ok and all(bounded.values()),
    }


# ---------------------------------------------------------------------------
# phase scaling
# ---------------------------------------------------------------------------

def phase_scaling_fit(case: VerificationCase, h_list,
                      mode: str = "joint") -> tuple[float, float, float]:
    """Fit sup phi0 ~ c * h^-p * (log 1/h)^q over the h sweep."""
    hs = sorted(set(float(h) for h in h_list), reverse=True)
    if len(hs) < 8:
        raise DomainError("phase scaling fit needs >= 8 h values")
    if math.log(hs[0]) - math.log(hs[-1]) < 2.0 * math.log(10.0):
        raise DomainError("phase scaling fit needs >= 2 decades of h")
    cache = _BundleCache(case)
    sups = [cache.get(h, case.cp.tau, case.cp.t).phi0_sup() for h in hs]
    res = fit_loglog(hs, sups, mode=mode)
    return res.p, res.q, res.c
