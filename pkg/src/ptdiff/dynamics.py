"""Right-hand sides and fixed-step Euler integration.

Two routes are provided on purpose. The ``*_rhs`` functions together with
:func:`euler_integrate` are straightforward Python and serve as the
reference; the ``simulate_*`` drivers run the same equations through the
numba kernels in :mod:`ptdiff._kernels` and are what long runs use.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .families import CorrectionFamily
from .redesign import RedesignParams, build_structure, h_vector, kappa
from .signals import NoiseSpec, NoiseStream, TestSignal
from .timescale import inverse_warp

log = logging.getLogger(__name__)

Disturbance = Union[float, Callable[[float], float], None]

CHUNK = 1 << 16
GRID_TOL = 1e-9


class BlowUpError(RuntimeError):
    """Raised when an integration produces a non-finite state."""

    def __init__(self, message: str, trajectory: Optional["Trajectory"] = None):
        super().__init__(message)
        self.trajectory = trajectory


# ---------------------------------------------------------------------------
# reference right-hand sides


def _dval(d: Disturbance, t: float) -> float:
    if d is None:
        return 0.0
    if callable(d):
        return float(d(t))
    return float(d)


def error_rhs(t: float, e: np.ndarray, p: RedesignParams, phi: CorrectionFamily,
              d: Disturbance = None, switched: Optional[bool] = None) -> np.ndarray:
    """``de_i = -h_i(e_0, t) + e_{i+1}``, last row driven by ``d(t)``."""
    e = np.asarray(e, dtype=float)
    dval = _dval(d, t)
    if abs(dval) > p.L * (1 + 1e-12):
        log.debug("disturbance |d(%g)| = %g exceeds L = %g", t, abs(dval), p.L)
    h = h_vector(e[0], t, p, phi, switched)
    out = -h
    out[:-1] += e[1:]
    out[-1] += dval
    return out


def diff_rhs(t: float, z: np.ndarray, y_val: float, p: RedesignParams, phi: CorrectionFamily,
             switched: Optional[bool] = None) -> np.ndarray:
    """Differentiator equations with ``e_0 = z_0 - y_val`` (``y_val`` may be noisy)."""
    z = np.asarray(z, dtype=float)
    h = h_vector(z[0] - y_val, t, p, phi, switched)
    out = -h
    out[:-1] += z[1:]
    return out


def filtering_rhs(t: float, x: np.ndarray, y_val: float, p: RedesignParams,
                  phi: CorrectionFamily, n_f: int, switched: Optional[bool] = None) -> np.ndarray:
    """Filtering chain; ``x = [w_1..w_nf, z_0..z_nd]`` with ``n_f + n_d = n``."""
    x = np.asarray(x, dtype=float)
    if x.size != p.n + 1:
        raise ValueError(f"state has {x.size} entries, expected n+1 = {p.n + 1}")
    if not 1 <= n_f <= p.n:
        raise ValueError(f"n_f must lie in 1..n, got {n_f}")
    h = h_vector(x[0], t, p, phi, switched)
    out = -h
    out[:-1] += x[1:]
    out[n_f - 1] -= y_val
    return out


def aux_rhs(chi: np.ndarray, phi: CorrectionFamily, pi_val: float) -> np.ndarray:
    """Auxiliary system: ``dchi_i/dtau = -phi_i(chi_0) + chi_{i+1}``, last row driven by ``pi``."""
    chi = np.asarray(chi, dtype=float)
    out = -phi.phi_vector(chi[0])
    out[:-1] += chi[1:]
    out[-1] += pi_val
    return out


def pi_of_tau(tau, p: RedesignParams, d: Disturbance = None):
    """Scaled disturbance ``beta^-1 (alpha T_c/eta)^(n+1-rho) exp(-alpha(n+1-rho)tau) d(t(tau))``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    q = p.n + 1 - p.rho
    scale = (p.alpha * p.T_c / p.eta) ** q / p.beta * np.exp(-p.alpha * q * tau)
    if d is None:
        out = np.zeros_like(tau)
    else:
        t = np.atleast_1d(inverse_warp(tau, p))
        out = (scale * _as_array_fn(d)(t).reshape(tau.shape))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Uniformly sampled record of one run.

    ``kind`` is one of ``error``, ``aux``, ``diff``, ``filter`` or ``generic``.
    For ``diff``/``filter`` runs ``signal`` holds the exact derivative stack of
    the clean signal and ``measured`` the noisy samples the estimator saw.
    """

    times: np.ndarray
    states: np.ndarray
    kind: str = "generic"
    n: int = 0
    n_f: int = 0
    kappa: Optional[np.ndarray] = None
    signal: Optional[np.ndarray] = None
    measured: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else math.nan

    def errors(self) -> np.ndarray:
        """Differentiation errors, shape ``(N, n+1)``."""
        if self.kind in ("error", "aux", "generic"):
            return self.states
        n_d = self.n - self.n_f
        out = self.states.copy()
        out[:, self.n_f:] -= self.signal[:, : n_d + 1]
        return out

    def state_labels(self) -> list[str]:
        m = self.states.shape[1]
        if self.kind in ("error",):
            return [f"e_{i}" for i in range(m)]
        if self.kind == "aux":
            return [f"chi_{i}" for i in range(m)]
        if self.kind == "diff":
            return [f"z_{i}" for i in range(m)]
        if self.kind == "filter":
            return [f"w_{i + 1}" for i in range(self.n_f)] + [f"z_{i}" for i in range(m - self.n_f)]
        return [f"x_{i}" for i in range(m)]

    def columns(self) -> tuple[list[str], np.ndarray]:
        names = ["t"] + self.state_labels()
        cols = [self.times[:, None], self.states]
        if self.kappa is not None:
            names.append("kappa")
            cols.append(self.kappa[:, None])
        if self.signal is not None:
            names += ["y"] + [f"y_d{k}" for k in range(1, self.signal.shape[1])]
            cols.append(self.signal)
            if self.measured is not None:
                names.append("noise")
                cols.append((self.measured - self.signal[:, 0])[:, None])
        return names, np.hstack(cols)

    def to_csv(self, path) -> None:
        names, data = self.columns()
        np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.12g")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return names, data


# ---------------------------------------------------------------------------
# generic reference integrator


def _grid_origin(t0: float, step: float) -> tuple[float, int]:
    i0 = round(t0 / step)
    if abs(i0 * step - t0) <= GRID_TOL * max(1.0, abs(t0)):
        return 0.0, i0
    return t0, 0


def _step_count(t0: float, t1: float, step: float) -> int:
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    return max(1, int(round((t1 - t0) / step)))


def grid_times(t0: float, step: float, start: int, stop: int) -> np.ndarray:
    """Grid instants ``start..stop`` (inclusive) anchored at ``t = 0`` when possible."""
    origin, i0 = _grid_origin(t0, step)
    return origin + (i0 + np.arange(start, stop + 1)) * step


def euler_integrate(rhs: Callable[[float, np.ndarray], np.ndarray], x0: Sequence[float],
                    t0: float, t1: float, step: float, stride: int = 1) -> Trajectory:
    """Explicit Euler with a fixed step; records every ``stride``-th state.

    Time-varying terms are evaluated at the left end of each step. Grid
    instants are ``k*step`` whenever ``t0`` lies on that lattice, so a run
    split in two at a grid point replays bitwise.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    N = _step_count(t0, t1, step)
    times = grid_times(t0, step, 0, N)
    x = np.array(x0, dtype=float)
    rec_t, rec_x = [], []
    for k in range(N):
        if k % stride == 0:
            rec_t.append(times[k])
            rec_x.append(x.copy())
        x = x + (times[k + 1] - times[k]) * np.asarray(rhs(times[k], x), dtype=float)
        if not np.all(np.isfinite(x)):
            traj = Trajectory(np.array(rec_t), np.array(rec_x))
            raise BlowUpError(f"non-finite state at t={times[k + 1]:.9g}", traj)
    if N % stride == 0:
        rec_t.append(times[N])
        rec_x.append(x.copy())
    return Trajectory(np.array(rec_t), np.array(rec_x))


# ---------------------------------------------------------------------------
# kernel-backed drivers


@dataclass(frozen=True)
class MonitorSpec:
    """Convergence monitor: switch to terminal gains once ``|e_0| < tol`` for ``dwell`` samples."""

    tol: float = 1e-6
    dwell: int = 100


def _packed(p: RedesignParams, phi: CorrectionFamily):
    S = build_structure(p.n, p.alpha, p.rho)
    code, fpar, gains = phi.kernel_args()
    rp = np.array([p.alpha, p.T_c, p.eta, p.beta, p.rho, max(p.L, p.mu), p.kappa_cap])
    return (p.n, code, np.ascontiguousarray(fpar, dtype=float), np.ascontiguousarray(gains, dtype=float),
            rp, np.ascontiguousarray(S.Q_rho), np.ascontiguousarray(S.M_power),
            np.array(p.terminal_gains, dtype=float))


def _base_packed(phi: CorrectionFamily):
    code, fpar, gains = phi.kernel_args()
    n = phi.n
    rp = np.array([1.0, math.inf, 1.0, 1.0, 0.0, 1.0, math.inf])
    return (n, code, np.ascontiguousarray(fpar, dtype=float), np.ascontiguousarray(gains, dtype=float),
            rp, np.eye(n + 1), np.zeros(n + 1), np.ones(n + 1))


def _run(system: int, mode: int, packed, x0, times_fn, nsteps: int, input_fn, stride: int,
         n_f: int = 0, monitor: Optional[MonitorSpec] = None):
    """Shared chunked loop. ``times_fn(a, b)`` returns grid instants ``a..b`` inclusive."""
    n = packed[0]
    x = np.array(x0, dtype=float)
    if x.size != n + 1:
        raise ValueError(f"initial state has {x.size} entries, expected {n + 1}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    nrec = nsteps // stride + 1
    rec_x = np.empty((nrec, n + 1))
    rec_k = np.empty(nrec)
    rec_t = np.empty(nrec)
    rec_u = np.empty(nrec)
    mon = np.zeros(3)
    mon_tol = monitor.tol if monitor else 0.0
    mon_dwell = monitor.dwell if monitor else 0
    pos = 0
    done = 0
    status = K.OK
    while done < nsteps:
        m = min(CHUNK, nsteps - done)
        times = times_fn(done, done + m)
        inputs = np.ascontiguousarray(input_fn(times[:-1]), dtype=float)
        first = (-done) % stride
        idx = np.arange(first, m, stride)
        rec_t[pos:pos + idx.size] = times[idx]
        rec_u[pos:pos + idx.size] = inputs[idx]
        status, pos, steps = K.euler_chunk(system, mode, n_f, x, times, inputs, done, stride,
                                           rec_x, rec_k, pos, *packed, mon, mon_tol, mon_dwell)
        done += steps
        if status != K.OK:
            break
    if status == K.OK and nsteps % stride == 0:
        t_end = times_fn(nsteps, nsteps)
        rec_t[pos] = t_end[0]
        rec_x[pos] = x
        rec_u[pos] = input_fn(t_end)[0]
        terminal = mode == 1 or t_end[0] >= packed[4][1] or mon[1] != 0.0
        rec_k[pos] = 1.0 if terminal else K.kappa(t_end[0], packed[4])
        pos += 1
    info = {"monitor_switch_time": float(mon[2]) if mon[1] else None}
    return status, rec_t[:pos], rec_x[:pos], rec_k[:pos], rec_u[:pos], done, info


def _uniform(t0: float, step: float):
    return lambda a, b: grid_times(t0, step, a, b)


def _as_array_fn(d) -> Callable[[np.ndarray], np.ndarray]:
    if d is None:
        return lambda t: np.zeros_like(t)
    if callable(d):
        def fn(t):
            try:
                out = np.asarray(d(t), dtype=float)
                if out.shape == t.shape:
                    return out
            except (TypeError, ValueError):
                pass
            return np.array([float(d(s)) for s in t])
        return fn
    return lambda t: np.full_like(t, float(d))


def _finish(status, traj: Trajectory, done: int):
    if status != K.OK:
        t_bad = traj.times[-1] if len(traj) else math.nan
        raise BlowUpError(f"non-finite state after {done} steps (last record t={t_bad:.9g})", traj)
    return traj


def simulate_error(p: RedesignParams, phi: CorrectionFamily, e0: Sequence[float], t1: float,
                   step: float, d=None, t0: float = 0.0, stride: int = 1,
                   monitor: Optional[MonitorSpec] = None) -> Trajectory:
    """Redesigned error dynamics on a uniform grid; ``d`` is a function of time (or constant)."""
    N = _step_count(t0, t1, step)
    st, t, x, k, u, done, info = _run(K.SYS_ERROR, 0, _packed(p, phi), e0, _uniform(t0, step), N,
                                      _as_array_fn(d), stride, monitor=monitor)
    traj = Trajectory(t, x, kind="error", n=p.n, kappa=k,
                      meta={"step": step, "stride": stride, "disturbance": u, **info})
    return _finish(st, traj, done)


def simulate_base(phi: CorrectionFamily, x0: Sequence[float], t1: float, step: float, d=None,
                  t0: float = 0.0, stride: int = 1, times: Optional[np.ndarray] = None,
                  kind: str = "error") -> Trajectory:
    """Time-invariant base error dynamics (also the auxiliary system when ``d`` is ``pi``).

    ``times`` gives an explicit, possibly non-uniform grid; otherwise the grid
    is uniform from ``t0`` to ``t1``.
    """
    if times is not None:
        times = np.asarray(times, dtype=float)
        N = times.size - 1
        times_fn = lambda a, b: times[a:b + 1]  # noqa: E731
        input_fn = _as_array_fn(d)
    else:
        N = _step_count(t0, t1, step)
        times_fn = _uniform(t0, step)
        input_fn = _as_array_fn(d)
    st, t, x, k, u, done, info = _run(K.SYS_ERROR, 1, _base_packed(phi), x0, times_fn, N,
                                      input_fn, stride)
    traj = Trajectory(t, x, kind=kind, n=phi.n, meta={"step": step, "stride": stride,
                                                      "disturbance": u})
    return _finish(st, traj, done)


def _measurement_fn(signal: TestSignal, noise: Optional[NoiseSpec]):
    stream = NoiseStream(noise)
    return lambda t: signal.value(t) + stream.draw(t.size)


def simulate_differentiator(p: RedesignParams, phi: CorrectionFamily, z0: Sequence[float],
                            signal: TestSignal, t1: float, step: float,
                            noise: Optional[NoiseSpec] = None, stride: int = 1,
                            monitor: Optional[MonitorSpec] = None, base: bool = False) -> Trajectory:
    """Run the differentiator on ``y + noise``; ``base=True`` runs the time-invariant base instead."""
    N = _step_count(0.0, t1, step)
    packed = _base_packed(phi) if base else _packed(p, phi)
    st, t, x, k, u, done, info = _run(K.SYS_DIFF, 1 if base else 0, packed, z0, _uniform(0.0, step),
                                      N, _measurement_fn(signal, noise), stride, monitor=monitor)
    n = phi.n
    traj = Trajectory(t, x, kind="diff", n=n, kappa=k, signal=signal.derivative_stack(t, n + 1),
                      measured=u, meta={"step": step, "stride": stride, **info})
    return _finish(st, traj, done)


def simulate_filter(p: RedesignParams, phi: CorrectionFamily, x0: Sequence[float], n_f: int,
                    signal: TestSignal, t1: float, step: float,
                    noise: Optional[NoiseSpec] = None, stride: int = 1,
                    monitor: Optional[MonitorSpec] = None) -> Trajectory:
    """Filtering differentiator with ``n_f`` filter states and ``n_d = n - n_f`` derivatives."""
    if not 1 <= n_f <= p.n:
        raise ValueError(f"n_f must lie in 1..n (n = {p.n}), got {n_f}")
    N = _step_count(0.0, t1, step)
    st, t, x, k, u, done, info = _run(K.SYS_FILTER, 0, _packed(p, phi), x0, _uniform(0.0, step), N,
                                      _measurement_fn(signal, noise), stride, n_f=n_f,
                                      monitor=monitor)
    n_d = p.n - n_f
    traj = Trajectory(t, x, kind="filter", n=p.n, n_f=n_f, kappa=k,
                      signal=signal.derivative_stack(t, n_d + 1), measured=u,
                      meta={"step": step, "stride": stride, **info})
    return _finish(st, traj, done)


def kernel_h(e0: float, t: float, p: RedesignParams, phi: CorrectionFamily,
             terminal: Optional[bool] = None) -> np.ndarray:
    """Correction vector as computed by the kernel (for cross-checks)."""
    n, code, fpar, gains, rp, Q, M, tg = _packed(p, phi)
    out = np.empty(n + 1)
    buf = np.empty(n + 1)
    term = t >= p.T_c if terminal is None else terminal
    K.h_vec(float(e0), float(t), 0, term, n, code, fpar, gains, rp, Q, M, tg, out, buf)
    return out


__all__ = [
    "BlowUpError", "MonitorSpec", "Trajectory", "aux_rhs", "diff_rhs", "error_rhs",
    "euler_integrate", "filtering_rhs", "grid_times", "kappa", "kernel_h", "pi_of_tau",
    "read_csv", "simulate_base", "simulate_differentiator", "simulate_error", "simulate_filter",
]
