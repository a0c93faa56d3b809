"""Time-scale transformation between real time ``t`` and scaled time ``tau``."""
from __future__ import annotations

import numpy as np

from .redesign import RedesignParams, kappa


def time_warp(t, p: RedesignParams):
    """``tau = -ln(1 - eta*t/T_c)/alpha``, defined for ``0 <= t < T_c/eta``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(p.eta * t_arr >= p.T_c):
        raise ValueError("time_warp is defined on [0, T_c/eta) only")
    tau = -np.log1p(-p.eta * t_arr / p.T_c) / p.alpha
    return float(tau) if tau.ndim == 0 else tau


def inverse_warp(tau, p: RedesignParams):
    """``t = T_c*(1 - exp(-alpha*tau))/eta``; maps ``[0, inf)`` onto ``[0, T_c/eta)``."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ValueError("tau must be non-negative")
    t = -p.T_c * np.expm1(-p.alpha * tau_arr) / p.eta
    return float(t) if t.ndim == 0 else t


def lambda_matrix(t: float, p: RedesignParams) -> np.ndarray:
    """``diag(kappa^-rho, kappa^(1-rho), ..., kappa^(n-rho))`` on ``[0, T_c)``."""
    if not 0 <= t < p.T_c:
        raise ValueError("lambda_matrix is defined on [0, T_c)")
    k = kappa(t, p)
    return np.diag([k ** (i - p.rho) for i in range(p.n + 1)])


def lambda_diagonals(times: np.ndarray, p: RedesignParams) -> np.ndarray:
    """Vectorised diagonal of :func:`lambda_matrix`, shape ``(len(times), n+1)``."""
    times = np.asarray(times, dtype=float)
    k = p.eta / (p.alpha * (p.T_c - p.eta * times))
    k = np.minimum(k, p.kappa_cap)
    powers = np.arange(p.n + 1) - p.rho
    return k[:, None] ** powers[None, :]


def kappa_array(times: np.ndarray, p: RedesignParams) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    with np.errstate(divide="ignore"):
        k = p.eta / (p.alpha * (p.T_c - p.eta * times))
    k = np.minimum(k, p.kappa_cap)
    return np.where(times >= p.T_c, 1.0, k)


__all__ = ["time_warp", "inverse_warp", "lambda_matrix", "lambda_diagonals", "kappa_array"]
