"""Algebraic objects of the time-varying-gain redesign.

Everything here is a pure function of its arguments: signed powers, the
gain schedule ``kappa(t)``, the structure matrices ``U``, ``D_rho``,
``Q_rho``, the vector field ``f_rho`` and the switched correction
functions ``h_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .families import CorrectionFamily

INF = math.inf

# Levant's recursive-form gains lambda_0..lambda_3 (1.1, 1.5, 2, 3); converted
# to the non-recursive form by ``levant_gains``.
LEVANT_LAMBDAS = (1.1, 1.5, 2.0, 3.0)


def signed_power(x: float, a: float) -> float:
    """``|x|**a * sign(x)``, with ``sign(0) = 0`` and ``a = 0`` giving ``sign(x)``."""
    if x == 0.0:
        return 0.0
    s = 1.0 if x > 0.0 else -1.0
    if a == 0.0:
        return s
    return s * abs(x) ** a


def levant_gains(n: int) -> tuple[float, ...]:
    """Non-recursive Levant gains for orders ``n <= 3``.

    ``l_i = prod_{j<=i} lambda_{n-j} ** ((n-i)/(n-j))`` which yields
    (1.1,), (1.5, 1.1), (2.0, 2.12, 1.1) and (3.0, 4.16, 3.06, 1.1).
    """
    if not 0 <= n < len(LEVANT_LAMBDAS):
        raise ValueError(f"no default Levant gains for n={n}; pass gains explicitly")
    lam = LEVANT_LAMBDAS
    gains = []
    for i in range(n + 1):
        g = 1.0
        for j in range(i + 1):
            g *= lam[n - j] ** ((n - i) / (n - j)) if n != j else lam[n - j]
        gains.append(g)
    return tuple(gains)


def compute_eta(alpha: float, T_f: float) -> float:
    """``1 - exp(-alpha*T_f)``; exactly 1 for infinite ``T_f``."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if not T_f > 0:
        raise ValueError(f"T_f must be positive, got {T_f}")
    if math.isinf(T_f):
        return 1.0
    if alpha == 0:
        raise ValueError("alpha = 0 requires infinite T_f")
    return -math.expm1(-alpha * T_f)


def kappa_max(alpha: float, T_c: float, T_f: float) -> float:
    """Gain bound ``(exp(alpha*T_f) - 1)/(alpha*T_c)`` for a finite ``T_f``."""
    if math.isinf(T_f):
        raise ValueError("unbounded gain: kappa has no bound for infinite T_f")
    if alpha == 0:
        return T_f / T_c
    return math.expm1(alpha * T_f) / (alpha * T_c)


def beta_lower_bound(n: int, alpha: float, T_c: float, eta: float, rho: float = 0.0) -> float:
    return (alpha * T_c / eta) ** (n + 1 - rho)


@dataclass(frozen=True)
class RedesignParams:
    """Scalars of the redesigned differentiator.

    Use :meth:`build` to get validated defaults (``beta = 2*beta_min``,
    ``mu = 1e-3*max(1, L)``, Levant terminal gains).
    """

    n: int
    alpha: float
    T_c: float
    T_f: float
    beta: float
    L: float
    terminal_gains: tuple[float, ...]
    rho: float = 0.0
    mu: float = 1e-3
    eta: float = field(init=False)

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"n must be a non-negative integer, got {self.n}")
        if not self.T_c > 0:
            raise ValueError(f"T_c must be positive, got {self.T_c}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.L < 0:
            raise ValueError(f"L must be non-negative, got {self.L}")
        if not 0.0 <= self.rho <= self.n + 1:
            raise ValueError(f"rho must lie in [0, n+1], got {self.rho}")
        if len(self.terminal_gains) != self.n + 1:
            raise ValueError(f"need {self.n + 1} terminal gains, got {len(self.terminal_gains)}")
        object.__setattr__(self, "terminal_gains", tuple(float(g) for g in self.terminal_gains))
        object.__setattr__(self, "eta", compute_eta(self.alpha, self.T_f))
        bound = self.beta_min
        # 1e-12 slack so beta passed as exactly beta_min survives rounding
        if self.beta < bound * (1 - 1e-12):
            raise ValueError(f"beta={self.beta} below lower bound {bound}")

    @classmethod
    def build(
        cls,
        n: int,
        alpha: float,
        T_c: float,
        T_f: float,
        L: float,
        *,
        beta: Optional[float] = None,
        beta_factor: float = 2.0,
        rho: float = 0.0,
        mu: Optional[float] = None,
        terminal_gains: Optional[Sequence[float]] = None,
        family: Optional["CorrectionFamily"] = None,
    ) -> "RedesignParams":
        eta = compute_eta(alpha, T_f)
        if beta is None:
            beta = beta_factor * beta_lower_bound(n, alpha, T_c, eta, rho)
        if mu is None:
            mu = 1e-3 * max(1.0, L)
        if terminal_gains is None:
            terminal_gains = levant_gains(n)
        p = cls(n=n, alpha=alpha, T_c=T_c, T_f=T_f, beta=beta, L=L,
                terminal_gains=tuple(terminal_gains), rho=rho, mu=mu)
        if family is not None:
            validate_pair(p, family)
        return p

    @property
    def beta_min(self) -> float:
        return beta_lower_bound(self.n, self.alpha, self.T_c, self.eta, self.rho)

    @property
    def kappa_cap(self) -> float:
        return INF if math.isinf(self.T_f) else kappa_max(self.alpha, self.T_c, self.T_f)


def validate_pair(p: RedesignParams, family: "CorrectionFamily") -> None:
    """Raise ValueError if the params and base family are inconsistent."""
    if family.n != p.n:
        raise ValueError(f"order mismatch: params n={p.n}, family n={family.n}")
    lo, hi, hi_open = family.I_phi
    if not (lo <= p.alpha and (p.alpha < hi if hi_open else p.alpha <= hi)):
        raise ValueError(f"alpha={p.alpha} outside I_phi of {family.variant}")


def kappa(t: float, p: RedesignParams) -> float:
    """Time-varying gain: ``eta/(alpha*(T_c - eta*t))`` before ``T_c``, 1 after.

    For finite ``T_f`` the value is clamped at ``kappa_max`` so rounding in
    ``T_c - eta*t`` can never overshoot the analytic bound.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if t >= p.T_c:
        return 1.0
    k = p.eta / (p.alpha * (p.T_c - p.eta * t))
    return min(k, p.kappa_cap)


@dataclass(frozen=True)
class StructureMatrices:
    U: np.ndarray
    D_rho: np.ndarray
    Q_rho: np.ndarray
    M_power: np.ndarray

    @property
    def Q_inv(self) -> np.ndarray:
        return unit_lower_inverse(self.Q_rho)


def build_structure(n: int, alpha: float, rho: float = 0.0) -> StructureMatrices:
    """``U``, ``D_rho``, ``Q_rho`` and ``(U - alpha*D_rho)^(n+1) B_{n+1}``.

    Columns of ``Q_rho`` are ``(U - alpha*D_rho)^k B_{n+1}`` for ``k = n..0``,
    built by repeated matrix-vector products.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0 <= rho <= n + 1:
        raise ValueError(f"rho must lie in [0, n+1], got {rho}")
    m = n + 1
    U = np.eye(m, k=1)
    D = np.diag(np.arange(m, dtype=float) - rho)
    A = U - alpha * D
    cols = [np.zeros(m)]
    cols[0][-1] = 1.0
    for _ in range(m):
        cols.append(A @ cols[-1])
    Q = np.column_stack(cols[n::-1])
    return StructureMatrices(U=U, D_rho=D, Q_rho=Q, M_power=cols[m])


def unit_lower_inverse(Q: np.ndarray) -> np.ndarray:
    """Inverse of a unit lower-triangular matrix by forward substitution."""
    m = Q.shape[0]
    inv = np.zeros_like(Q, dtype=float)
    for col in range(m):
        x = np.zeros(m)
        x[col] = 1.0
        for i in range(col + 1, m):
            x[i] = -(Q[i, col:i] @ x[col:i])
        inv[:, col] = x
    return inv


def _phi_vector(phi: "CorrectionFamily", w: float) -> np.ndarray:
    return np.array([phi.phi(i, w) for i in range(phi.n + 1)])


def _f_rho(e0: float, t: float, p: RedesignParams, phi: "CorrectionFamily",
           S: StructureMatrices, rho: float) -> np.ndarray:
    kr = kappa(t, p) ** rho
    Phi = _phi_vector(phi, kr * e0 / p.beta)
    return p.beta * (S.Q_rho @ Phi) + kr * S.M_power * e0


def f_vec(e0: float, p: RedesignParams, phi: "CorrectionFamily", t: Optional[float] = None,
          S: Optional[StructureMatrices] = None) -> np.ndarray:
    """Vector field ``f_rho(e0, t)``; time-independent when ``rho = 0``."""
    if S is None:
        S = build_structure(p.n, p.alpha, p.rho)
    if p.rho == 0:
        Phi = _phi_vector(phi, e0 / p.beta)
        return p.beta * (S.Q_rho @ Phi) + S.M_power * e0
    if t is None:
        raise ValueError("rho > 0 needs the time argument")
    return _f_rho(e0, t, p, phi, S, p.rho)


def g_terminal(i: int, e0: float, p: RedesignParams) -> float:
    """Terminal (Levant-type) correction used from ``T_c`` on."""
    n = p.n
    return (p.terminal_gains[i] * max(p.L, p.mu) ** ((i + 1) / (n + 1))
            * signed_power(e0, (n - i) / (n + 1)))


def h_correction(i: int, e0: float, t: float, p: RedesignParams, phi: "CorrectionFamily",
                 switched: Optional[bool] = None,
                 S: Optional[StructureMatrices] = None) -> float:
    """Redesigned correction ``h_i(e0, t)``.

    ``switched`` overrides the default switch at ``T_c`` (convergence
    monitor); ``None`` means switch at ``T_c``.
    """
    terminal = t >= p.T_c if switched is None else switched
    if terminal:
        return g_terminal(i, e0, p)
    return kappa(t, p) ** (1 + i - p.rho) * f_vec(e0, p, phi, t, S)[i]


def h_vector(e0: float, t: float, p: RedesignParams, phi: "CorrectionFamily",
             switched: Optional[bool] = None,
             S: Optional[StructureMatrices] = None) -> np.ndarray:
    terminal = t >= p.T_c if switched is None else switched
    if terminal:
        return np.array([g_terminal(i, e0, p) for i in range(p.n + 1)])
    k = kappa(t, p)
    f = f_vec(e0, p, phi, t, S)
    return np.array([k ** (1 + i - p.rho) * f[i] for i in range(p.n + 1)])
