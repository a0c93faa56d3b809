"""Empirical envelope check for admissible correction functions.

A base family is admissible at rate ``alpha`` when, under disturbances with
``|d(t)| <= L*exp(-alpha*(n+1)*t)``, the error obeys
``|e(t)| < gamma*exp(-alpha*(n+1)*t)`` for some finite ``gamma``. A
simulation cannot prove this; it can only try to falsify it with a hard
disturbance. The probe is a full-magnitude square wave under the envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .analysis import detect_settling
from .dynamics import BlowUpError, simulate_base
from .families import CorrectionFamily

TOL_ENV = 1e-9


@dataclass(frozen=True)
class AdmissibilityReport:
    """``gamma_fit`` comes from the leading ``fit_fraction`` of the window and is
    then checked on the whole window; ``max_violation`` is the largest
    ``|e|/(gamma_fit*exp(-alpha(n+1)t))`` seen before the error settles.
    ``gamma_settling`` is ``S*exp(alpha(n+1)T)`` with ``S = sup|e|`` and ``T`` the
    detected settling time (``nan`` when the run never settles).
    """

    gamma_fit: float
    alpha_used: float
    max_violation: float
    passed: bool
    gamma_settling: float = math.nan
    settling_time: float = math.nan
    peak: float = math.nan
    note: str = ""


def probe_disturbance(L: float, alpha: float, n: int, horizon: float):
    """``L*exp(-alpha(n+1)t)`` times a square wave flipping every ``0.1*horizon``."""
    period = 0.1 * horizon

    def d(t):
        t = np.asarray(t, dtype=float)
        flips = np.floor(t / period).astype(np.int64)
        sign = np.where(flips % 2 == 0, 1.0, -1.0)
        return L * np.exp(-alpha * (n + 1) * t) * sign

    return d


def check_admissibility(fam: CorrectionFamily, alpha: float, e0: Sequence[float], horizon: float,
                        step: float, L: Optional[float] = None, probe: bool = True,
                        fit_fraction: float = 0.5, settle_tol: float = 1e-3,
                        tol_env: float = TOL_ENV) -> AdmissibilityReport:
    """Simulate the base error dynamics under the probe and fit the envelope.

    Samples with ``|e| <= settle_tol`` count as settled and are left out of the
    ratio: once an exact family has converged only discretization chatter is
    left, and it would swamp ``exp(+alpha(n+1)t)``.
    """
    lo, hi, hi_open = fam.I_phi
    if alpha < lo or alpha > hi or (hi_open and alpha == hi):
        raise ValueError(f"alpha={alpha} lies outside I_phi of the {fam.variant} family")
    if horizon <= 0 or step <= 0:
        raise ValueError("horizon and step must be positive")
    if not 0 < fit_fraction <= 1:
        raise ValueError("fit_fraction must lie in (0, 1]")
    if L is None:
        L = fam.signal_bound
    d = probe_disturbance(L, alpha, fam.n, horizon) if probe and L > 0 else None
    try:
        traj = simulate_base(fam, e0, horizon, step, d=d)
    except BlowUpError as exc:
        return AdmissibilityReport(math.inf, alpha, math.inf, False, note=str(exc))

    norms = np.linalg.norm(traj.states, axis=1)
    peak = float(norms.max())
    if peak == 0:
        return AdmissibilityReport(0.0, alpha, 0.0, True, 0.0, 0.0, 0.0)
    rate = alpha * (fam.n + 1)
    active = norms > settle_tol
    # log space: exp(rate*t) overflows long before the horizon does
    log_scaled = np.full(norms.shape, -np.inf)
    log_scaled[active] = np.log(norms[active]) + rate * traj.times[active]

    lead = traj.times <= fit_fraction * horizon
    log_gamma = float(log_scaled[lead].max())
    if not active.any():
        # settled from the first sample on
        return AdmissibilityReport(peak, alpha, 0.0, True, peak, 0.0, peak)
    if not np.isfinite(log_gamma):
        return AdmissibilityReport(math.inf, alpha, math.inf, False, peak=peak,
                                   note="no finite envelope constant on the fit window")
    gamma = math.exp(min(log_gamma, 700.0))
    violation = math.exp(min(float(log_scaled.max()) - log_gamma, 700.0))

    settle = detect_settling(traj, settle_tol, dwell=0.1 * horizon)
    T = settle.detected_T if settle.converged else math.nan
    gamma_settling = peak * math.exp(min(rate * T, 700.0)) if settle.converged else math.nan
    return AdmissibilityReport(gamma, alpha, violation, violation <= 1 + tol_env,
                               gamma_settling, T, peak)


__all__ = ["AdmissibilityReport", "TOL_ENV", "check_admissibility", "probe_disturbance"]
