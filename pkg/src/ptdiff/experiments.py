"""Run a configured experiment and write its files."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import SettlingReport, detect_settling, write_rows_csv
from .config import ExperimentConfig, save_config
from .dynamics import Trajectory, simulate_differentiator, simulate_filter
from .redesign import RedesignParams
from .signals import derivative_bound

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    config: ExperimentConfig
    params: RedesignParams
    trajectory: Trajectory
    settling: Optional[SettlingReport]
    summary: dict
    files: list[Path] = field(default_factory=list)
    base_trajectory: Optional[Trajectory] = None


def resolved_params(p: RedesignParams) -> dict:
    """Derived scalars recorded next to the config (eta, beta, kappa_max...)."""
    return {
        "n": p.n, "alpha": p.alpha, "T_c": p.T_c, "T_f": p.T_f, "eta": p.eta, "beta": p.beta,
        "beta_min": p.beta_min, "rho": p.rho, "mu": p.mu, "L": p.L,
        "terminal_gains": list(p.terminal_gains), "kappa_max": p.kappa_cap,
    }


def error_stats(traj: Trajectory, t_from: float) -> dict:
    """Max and RMS of each error component on ``t >= t_from``."""
    sel = traj.times >= t_from
    if not sel.any():
        return {}
    err = traj.errors()[sel]
    labels = traj.state_labels()
    out = {}
    for j, name in enumerate(labels):
        col = err[:, j]
        out[f"max_abs_err_{name}"] = float(np.max(np.abs(col)))
        out[f"rms_err_{name}"] = float(np.sqrt(np.mean(col ** 2)))
    return out


def simulate_config(cfg: ExperimentConfig, base: bool = False) -> tuple[RedesignParams, Trajectory]:
    cfg.validate()
    fam = cfg.build_family()
    p = cfg.build_params(fam)
    sig = cfg.build_signal()
    derivative_bound(sig, cfg.differentiator.n - cfg.differentiator.n_f + 1, cfg.differentiator.L)
    ic = cfg.integration
    kwargs = dict(noise=cfg.build_noise(), stride=int(ic.stride))
    x0 = cfg.initial_state()
    if cfg.differentiator.n_f > 0 and not base:
        traj = simulate_filter(p, fam, x0, cfg.differentiator.n_f, sig, ic.horizon, ic.step,
                               monitor=cfg.build_monitor(), **kwargs)
    else:
        traj = simulate_differentiator(p, fam, x0, sig, ic.horizon, ic.step, base=base,
                                       monitor=None if base else cfg.build_monitor(), **kwargs)
    return p, traj


def run_config(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Simulate ``cfg`` and write trajectory, gain, settling and snapshot files.

    Raises :class:`ConfigError` on bad input and ``BlowUpError`` on divergence.
    """
    p, traj = simulate_config(cfg)
    settling = None
    if cfg.analysis.settling:
        settling = detect_settling(traj, cfg.analysis.tol, cfg.analysis.dwell)
    summary = {
        "name": cfg.name,
        "kappa_max": p.kappa_cap,
        "max_kappa_observed": float(np.max(traj.kappa)),
        "beta": p.beta,
        "converged": None if settling is None else settling.converged,
        "detected_T": None if settling is None else settling.detected_T,
        "converged_before_T_c": None if settling is None else
        bool(settling.converged and settling.detected_T <= p.T_c),
        "noise_std": None if cfg.noise is None else cfg.noise.std_dev,
        "seed": None if cfg.noise is None else cfg.noise.seed,
        **error_stats(traj, p.T_c),
    }
    base_traj = None
    if cfg.analysis.compare_base:
        _, base_traj = simulate_config(cfg, base=True)
        if cfg.analysis.settling:
            base_settle = detect_settling(base_traj, cfg.analysis.tol, cfg.analysis.dwell)
            summary["base_detected_T"] = base_settle.detected_T
        summary.update({f"base_{k}": v for k, v in error_stats(base_traj, p.T_c).items()})
    result = RunResult(cfg, p, traj, settling, summary, base_trajectory=base_traj)
    if out_dir is not None:
        result.files = write_run(result, Path(out_dir))
    return result


def write_run(result: RunResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    stem = result.config.output.stem
    files = []

    path = out / f"{stem}_trajectory.csv"
    result.trajectory.to_csv(path)
    files.append(path)

    path = out / f"{stem}_gain.csv"
    np.savetxt(path, np.column_stack([result.trajectory.times, result.trajectory.kappa]),
               delimiter=",", header="t,kappa", comments="", fmt="%.12g")
    files.append(path)

    if result.base_trajectory is not None:
        path = out / f"{stem}_base_trajectory.csv"
        result.base_trajectory.to_csv(path)
        files.append(path)

    if result.settling is not None:
        path = out / f"{stem}_settling.csv"
        write_rows_csv([result.settling.as_row()], path)
        files.append(path)

    path = out / f"{stem}_summary.txt"
    path.write_text(format_report_dict(result.summary, f"run {result.config.name}"))
    files.append(path)

    path = out / "config.yaml"
    save_config(result.config, path)
    files.append(path)

    path = out / "resolved_params.json"
    path.write_text(json.dumps(_jsonable(resolved_params(result.params)), indent=2) + "\n")
    files.append(path)
    return files


def format_report_dict(d: dict, title: str) -> str:
    width = max(len(k) for k in d)
    lines = [title]
    for k, v in d.items():
        text = f"{v:.6g}" if isinstance(v, float) else str(v)
        lines.append(f"{k:<{width}} = {text}")
    return "\n".join(lines) + "\n"


def _jsonable(d: dict) -> dict:
    return {k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


__all__ = ["RunResult", "error_stats", "format_report_dict", "resolved_params",
           "run_config", "simulate_config", "write_run"]
