"""Settling-time detection and the experiments that tie simulations to theory.

* :func:`equivalence_check` -- redesigned error dynamics versus the
  auxiliary system mapped back through ``e = beta*Lambda(t)*Q*chi(tau(t))``.
* :func:`detect_settling` / :func:`predicted_settling`.
* :func:`slack_sweep` -- worst-case settling versus ``alpha``.
* :func:`perturbation_experiment` -- peak error after a late perturbation.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import BlowUpError, MonitorSpec, Trajectory, pi_of_tau, simulate_base, simulate_error
from .families import CorrectionFamily
from .redesign import RedesignParams, build_structure, kappa, kappa_max, unit_lower_inverse
from .timescale import inverse_warp, lambda_diagonals, lambda_matrix, time_warp

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-3


# ---------------------------------------------------------------------------
# settling


@dataclass(frozen=True)
class SettlingReport:
    detected_T: float
    converged: bool
    tol: float
    dwell: float
    predicted_T: Optional[float] = None

    def as_row(self) -> dict:
        return {"detected_T": self.detected_T, "predicted_T": self.predicted_T,
                "tol": self.tol, "dwell": self.dwell, "converged": self.converged}


def first_settled_index(values: np.ndarray, tol: float, window: int) -> Optional[int]:
    """First index ``i`` with ``values[i:i+window+1] <= tol`` and the window inside the record."""
    bad = np.concatenate(([0], np.cumsum(values > tol)))
    last = values.size - 1 - window
    if last < 0:
        return None
    counts = bad[window + 1: window + 1 + last + 1] - bad[: last + 1]
    hits = np.flatnonzero(counts == 0)
    return int(hits[0]) if hits.size else None


def detect_settling(traj: Trajectory, tol: float = DEFAULT_TOL, dwell: float = 0.1,
                    errors: Optional[np.ndarray] = None) -> SettlingReport:
    """First instant after which ``max_i |e_i|`` stays below ``tol`` for ``dwell`` time units."""
    err = traj.errors() if errors is None else errors
    mag = np.max(np.abs(err), axis=1)
    dt = traj.step if len(traj) > 1 else 1.0
    window = max(0, int(math.ceil(dwell / dt - 1e-9)))
    i = first_settled_index(mag, tol, window)
    if i is None:
        return SettlingReport(math.nan, False, tol, dwell)
    return SettlingReport(float(traj.times[i]), True, tol, dwell)


def predicted_settling(aux_T: float, p: RedesignParams) -> float:
    """Map an auxiliary settling time to real time: ``T_c(1 - exp(-alpha*aux_T))/eta``."""
    if aux_T < 0:
        raise ValueError("aux_T must be non-negative")
    if math.isinf(aux_T):
        return p.T_c / p.eta
    return -p.T_c * math.expm1(-p.alpha * aux_T) / p.eta


# ---------------------------------------------------------------------------
# equivalence through the time-scale transformation


@dataclass(frozen=True)
class EquivalenceReport:
    max_rel_dev: float
    window: tuple[float, float]
    passed: bool
    tol: float
    variant: str = ""
    e0: tuple[float, ...] = ()
    note: str = ""


def initial_aux_state(e0: Sequence[float], p: RedesignParams) -> np.ndarray:
    """``chi(0) = Q^-1 Lambda(0)^-1 e(0) / beta`` (forward substitution for ``Q``)."""
    S = build_structure(p.n, p.alpha, p.rho)
    lam0 = np.diag(lambda_matrix(0.0, p))
    return unit_lower_inverse(S.Q_rho) @ (np.asarray(e0, dtype=float) / lam0) / p.beta


def map_aux_to_error(times: np.ndarray, chi: np.ndarray, p: RedesignParams) -> np.ndarray:
    S = build_structure(p.n, p.alpha, p.rho)
    return p.beta * lambda_diagonals(times, p) * (chi @ S.Q_rho.T)


def equivalence_check(p: RedesignParams, phi: CorrectionFamily, e0: Sequence[float], d=None,
                      t_end: Optional[float] = None, step: float = 1e-6, tol: float = 1e-2,
                      stride: int = 100) -> EquivalenceReport:
    """Integrate both sides on matched grids and compare.

    The deviation is ``max_k |e_k - e_hat_k| / max_k |e_k|``: relative to the
    peak of the trajectory, so the comparison stays meaningful after the
    error reaches zero.
    """
    if t_end is None:
        t_end = 0.9 * p.T_c
    if not 0 < t_end < p.T_c:
        raise ValueError("equivalence window must end before T_c")
    e0 = tuple(float(v) for v in e0)
    window = (0.0, t_end)
    try:
        e_traj = simulate_error(p, phi, e0, t_end, step, d=d, stride=stride)
        N = int(round(t_end / step))
        taus = time_warp(np.arange(N + 1) * step, p)
        chi0 = initial_aux_state(e0, p)
        aux = simulate_base(phi, chi0, 0.0, step, d=None if d is None else
                            (lambda tau: pi_of_tau(tau, p, d)), times=taus, stride=stride, kind="aux")
    except BlowUpError as exc:
        return EquivalenceReport(math.nan, window, False, tol, phi.variant, e0, str(exc))
    e_hat = map_aux_to_error(e_traj.times, aux.states, p)
    scale = np.max(np.linalg.norm(e_traj.states, axis=1))
    dev = np.max(np.linalg.norm(e_traj.states - e_hat, axis=1))
    if scale == 0:
        rel = 0.0 if dev == 0 else math.inf
    else:
        rel = float(dev / scale)
    return EquivalenceReport(rel, window, bool(rel <= tol), tol, phi.variant, e0)


# ---------------------------------------------------------------------------
# slack sweep


@dataclass
class SweepReport:
    """Per-alpha worst-case settling over an initial-condition grid.

    ``aux_T_star`` is an estimate: the worst measured auxiliary settling
    time over the mapped grid, not the true supremum.
    """

    T_c: float
    alphas: list[float]
    measured_T_star: list[float]
    slack: list[float]
    kappa_max_per_alpha: list[float]
    aux_T_star: list[float] = field(default_factory=list)
    predicted_slack: list[float] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    ic_grid: list[tuple[float, ...]] = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for j, a in enumerate(self.alphas):
            out.append({
                "alpha": a,
                "measured_T_star": self.measured_T_star[j],
                "slack": self.slack[j],
                "kappa_max": self.kappa_max_per_alpha[j],
                "aux_T_star_estimate": self.aux_T_star[j] if self.aux_T_star else math.nan,
                "predicted_slack": self.predicted_slack[j] if self.predicted_slack else math.nan,
            })
        return out


def _sweep_cell(args):
    p, phi, e0, step, d, tol, dwell, aux_step, monitor = args
    out = {"T": math.nan, "aux_T": math.nan, "error": None}
    try:
        traj = simulate_error(p, phi, e0, p.T_c + 1.5 * dwell, step, d=d, monitor=monitor)
        rep = detect_settling(traj, tol, dwell)
        out["T"] = rep.detected_T if rep.converged else math.inf
        if aux_step:
            chi0 = initial_aux_state(e0, p)
            tau_end = (p.T_f if math.isfinite(p.T_f) else 10.0 / p.alpha) + 1.5 * dwell
            pi = None if d is None else (lambda tau: pi_of_tau(tau, p, d))
            aux = simulate_base(phi, chi0, tau_end, aux_step, d=pi, kind="aux")
            arep = detect_settling(aux, tol / p.beta, dwell)
            out["aux_T"] = arep.detected_T if arep.converged else math.inf
    except BlowUpError as exc:
        out["error"] = f"e0={e0}: {exc}"
    return out


def slack_sweep(phi: CorrectionFamily, alphas: Sequence[float], ic_grid: Sequence[Sequence[float]],
                step: float, T_c: float = 1.0, L: Optional[float] = None, beta_factor: float = 2.0,
                terminal_gains: Optional[Sequence[float]] = None, d=None,
                tol: float = DEFAULT_TOL, dwell: Optional[float] = None,
                aux_step: Optional[float] = None, monitor: Optional[MonitorSpec] = MonitorSpec(),
                workers: int = 1) -> SweepReport:
    """Measured slack ``T_c - T*`` per ``alpha`` for a base family with finite ``T_f``.

    Runs use the convergence monitor by default: near ``T_c`` the gain is so
    large that fixed-step chatter alone would exceed ``tol`` and hide the
    settling instant. Pass ``monitor=None`` for the plain schedule. Every
    cell is an independent run; failed cells are reported, not raised.
    """
    if not math.isfinite(phi.T_f):
        raise ValueError("slack sweep needs a base family with finite T_f")
    if not alphas or not ic_grid:
        raise ValueError("alpha grid and initial-condition grid must be non-empty")
    if L is None:
        L = phi.signal_bound
    if dwell is None:
        dwell = 0.1 * T_c
    params = [RedesignParams.build(phi.n, a, T_c, phi.T_f, L, beta_factor=beta_factor,
                                   terminal_gains=terminal_gains, family=phi) for a in alphas]
    cells = [(p, phi, tuple(e0), step, d, tol, dwell, aux_step, monitor) for p in params for e0 in ic_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    m = len(ic_grid)
    rep = SweepReport(T_c=T_c, alphas=list(alphas), measured_T_star=[], slack=[],
                      kappa_max_per_alpha=[], ic_grid=[tuple(e) for e in ic_grid])
    for j, p in enumerate(params):
        block = results[j * m:(j + 1) * m]
        rep.failures += [r["error"] for r in block if r["error"]]
        T_star = max((r["T"] for r in block), default=math.nan)
        rep.measured_T_star.append(T_star)
        rep.slack.append(T_c - T_star)
        rep.kappa_max_per_alpha.append(kappa_max(p.alpha, T_c, p.T_f))
        if aux_step:
            aux_star = max(r["aux_T"] for r in block)
            rep.aux_T_star.append(aux_star)
            sigma = 1.0 - (-math.expm1(-p.alpha * aux_star)) / p.eta
            rep.predicted_slack.append(sigma * T_c)
    return rep


# ---------------------------------------------------------------------------
# uniform stability


@dataclass(frozen=True)
class PerturbationReport:
    fractions: tuple[float, ...]
    peaks: tuple[float, ...]
    delta: float
    kappa_at_injection: tuple[float, ...]

    def ratio(self, a: float, b: float) -> float:
        return self.peaks[self.fractions.index(a)] / self.peaks[self.fractions.index(b)]

    @property
    def spread(self) -> float:
        lo = min(self.peaks)
        return math.inf if lo == 0 else max(self.peaks) / lo


def perturbation_experiment(p: RedesignParams, phi: CorrectionFamily,
                            perturb_time_fractions: Sequence[float], perturb_magnitude: float,
                            step: float, direction: Optional[Sequence[float]] = None, d=None,
                            t_end: Optional[float] = None) -> PerturbationReport:
    """Peak ``|e|`` after adding ``delta*direction`` to the converged state at ``fraction*T_c``.

    The default direction is ``e_0`` alone. The converged state is ``e = 0``,
    so each run starts from the perturbation itself.
    """
    if direction is None:
        direction = np.eye(p.n + 1)[0]
    direction = np.asarray(direction, dtype=float)
    if t_end is None:
        t_end = 1.5 * p.T_c
    peaks, kaps = [], []
    for frac in perturb_time_fractions:
        if not 0 < frac < 1:
            raise ValueError("perturbation fractions must lie in (0, 1)")
        t_s = round(frac * p.T_c / step) * step
        kaps.append(kappa(t_s, p))
        if perturb_magnitude == 0:
            peaks.append(0.0)
            continue
        traj = simulate_error(p, phi, perturb_magnitude * direction, t_end, step, d=d, t0=t_s)
        peaks.append(float(np.max(np.linalg.norm(traj.states, axis=1))))
    return PerturbationReport(tuple(perturb_time_fractions), tuple(peaks), perturb_magnitude,
                              tuple(kaps))


# ---------------------------------------------------------------------------
# serialization


def report_rows(report) -> list[dict]:
    """Flatten a report (or a list of reports) into CSV-ready rows."""
    if isinstance(report, (list, tuple)):
        return [row for r in report for row in report_rows(r)]
    if hasattr(report, "rows"):
        return report.rows()
    if isinstance(report, PerturbationReport):
        return [{"fraction": f, "peak": pk, "delta": report.delta, "kappa_at_injection": k}
                for f, pk, k in zip(report.fractions, report.peaks, report.kappa_at_injection)]
    row = {}
    for key, value in dataclasses.asdict(report).items():
        row[key] = " ".join(f"{v:g}" for v in value) if isinstance(value, (tuple, list)) else value
    return [row]


def write_rows_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("nothing to write")
    keys = list(dict.fromkeys(k for row in rows for k in row))
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(rows)


def format_report(report, title: str = "") -> str:
    """Plain-text summary: one ``key = value`` line per field and row."""
    lines = [title] if title else []
    for i, row in enumerate(report_rows(report)):
        if i:
            lines.append("")
        width = max(len(k) for k in row)
        for key, value in row.items():
            text = f"{value:.6g}" if isinstance(value, float) else str(value)
            lines.append(f"{key:<{width}} = {text}")
    if isinstance(report, SweepReport) and report.failures:
        lines.append("failed cells:")
        lines += [f"  {f}" for f in report.failures]
    return "\n".join(lines) + "\n"


__all__ = [
    "EquivalenceReport", "PerturbationReport", "SettlingReport", "SweepReport",
    "detect_settling", "equivalence_check", "first_settled_index", "format_report",
    "initial_aux_state", "report_rows", "write_rows_csv",
    "inverse_warp", "lambda_matrix", "map_aux_to_error", "perturbation_experiment",
    "predicted_settling", "slack_sweep", "time_warp",
]
