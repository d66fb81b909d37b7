"""Shared log-log exponent fitting for phase and resolvent sweeps.

Model:  log v = log c + p * log(1/h) + q * log(log(1/h)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError


@dataclass(frozen=True)
class FitResult:
    p: float
    q: float
    c: float
    residual: float  # max relative deviation of the fitted model


def _design(h: np.ndarray, q_fixed: float | None):
    L = np.log(1.0 / h)
    lam = np.log(L)
    return L, lam


def fit_loglog(h, values, mode: str = "joint",
               q_fixed: float | None = None) -> FitResult:
    """Least-squares fit of the h -> value series on log scale.

    mode "joint":    fit (c, p, q) simultaneously.
    mode "fixed_q":  fit (c, p) with q = q_fixed.
    mode "two_pass": fit (c, p) at q = q_fixed, then refit (c, q) at that p;
                     avoids the degenerate joint fit over short h ranges.
    """
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.size < 4:
        raise NumericError("need at least 4 points to fit")
    if np.any(v <= 0.0) or np.any(h <= 0.0) or np.any(h >= 1.0):
        raise NumericError("fit requires positive values and h in (0, 1)")
    L, lam = _design(h, q_fixed)
    y = np.log(v)

    def solve(cols, rhs):
        A = np.column_stack(cols)
        sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
        if rank < A.shape[1]:
            raise NumericError("singular normal equations in log-log fit")
        return sol

    if mode == "joint":
        logc, p, q = solve([np.ones_like(L), L, lam], y)
    elif mode == "fixed_q":
        if q_fixed is None:
            raise NumericError("fixed_q mode requires q_fixed")
        logc, p = solve([np.ones_like(L), L], y - q_fixed * lam)
        q = q_fixed
    elif mode == "two_pass":
        if q_fixed is None:
            q_fixed = 0.0
        logc, p = solve([np.ones_like(L), L], y - q_fixed * lam)
        logc, q = solve([np.ones_like(L), lam], y - p * L)
    else:
        raise NumericError(f"unknown fit mode {mode!r}")
    model = logc + p * L + q * lam
    residual = float(np.max(np.abs(np.expm1(model - y))))
    return FitResult(p=float(p), q=float(q), c=float(np.exp(logc)),
                     residual=residual)


def fit_report(series, mode: str = "joint",
               q_fixed: float | None = None) -> tuple[float, float, float, float]:
    """(h, value) pairs -> (p, q, c, residual)."""
    h = [s[0] for s in series]
    v = [s[1] for s in series]
    r = fit_loglog(h, v, mode=mode, q_fixed=q_fixed)
    return r.p, r.q, r.c, r.residual
