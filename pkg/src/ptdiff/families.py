"""Base correction-function families (the admissible, time-invariant ones).

Four families are provided, each knowing its admissible interval for the
time-scale rate ``alpha`` and its settling-time bound ``T_f``:

* :class:`LinearFamily` -- ``r**(i+1) * l_i * w`` with Hurwitz ``l_i``.
* :class:`LevantFamily` -- homogeneous arbitrary-order sliding mode.
* :class:`FixedTimeFamily` -- first-order fixed-time differentiator.
* :class:`MenardFamily` -- bi-limit homogeneous observer (``L = 0`` only).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .redesign import levant_gains, signed_power

log = logging.getLogger(__name__)

# kernel codes, mirrored in _kernels
LINEAR, LEVANT, FIXED_TIME, MENARD = 0, 1, 2, 3

FIXED_TIME_CONSTANT = 9.8
MENARD_EPS_WARN = 0.2


def linear_gains_from_roots(roots: Sequence[complex]) -> tuple[float, ...]:
    """Coefficients ``l_0..l_n`` of ``prod(s - lambda_i) = s^(n+1) + l_0 s^n + ... + l_n``.

    The roots must be Hurwitz with the largest real part equal to ``-(n+1)``
    and complex roots must come in conjugate pairs.
    """
    roots = np.asarray(roots, dtype=complex)
    m = roots.size
    if m == 0:
        raise ValueError("need at least one root")
    if np.max(roots.real) >= 0:
        raise ValueError("roots must have negative real parts")
    if not math.isclose(np.max(roots.real), -m, rel_tol=1e-9):
        raise ValueError(f"max real part must equal -(n+1) = {-m}, got {np.max(roots.real)}")
    if not np.allclose(np.sort_complex(roots), np.sort_complex(roots.conj())):
        raise ValueError("complex roots must come in conjugate pairs")
    coeffs = np.poly(roots)
    return tuple(float(c) for c in coeffs.real[1:])


def menard_Tf(theta: float, c: float, b: float) -> float:
    """Settling-time bound ``(4/theta)*((1-c)^-1 + (b-1)^-1)``."""
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if not b > 1:
        raise ValueError(f"b must exceed 1, got {b}")
    if 1 - c > MENARD_EPS_WARN or b - 1 > MENARD_EPS_WARN:
        log.warning("Menard exponents c=%g, b=%g are far from 1; admissibility "
                    "is only known for c, b close to 1", c, b)
    return (4.0 / theta) * (1.0 / (1.0 - c) + 1.0 / (b - 1.0))


@dataclass(frozen=True)
class CorrectionFamily:
    """Common interface; concrete families override :meth:`phi`."""

    n: int

    variant = "abstract"
    code = -1

    def phi(self, i: int, w: float) -> float:
        raise NotImplementedError

    def phi_vector(self, w: float) -> np.ndarray:
        return np.array([self.phi(i, w) for i in range(self.n + 1)])

    @property
    def I_phi(self) -> tuple[float, float, bool]:
        """``(low, high, high_is_open)``; default ``[0, inf)``."""
        return (0.0, math.inf, True)

    @property
    def T_f(self) -> float:
        return math.inf

    @property
    def signal_bound(self) -> float:
        """Derivative bound ``L`` the family is designed for (0 when not applicable)."""
        return 0.0

    def kernel_args(self) -> tuple[int, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def phi_eval(fam: CorrectionFamily, i: int, w: float) -> float:
    if not 0 <= i <= fam.n:
        raise IndexError(f"index {i} outside 0..{fam.n}")
    return fam.phi(i, w)


@dataclass(frozen=True)
class LinearFamily(CorrectionFamily):
    r: float = 1.0
    gains: tuple[float, ...] = ()

    variant = "linear"
    code = LINEAR

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if len(self.gains) != self.n + 1:
            raise ValueError(f"need {self.n + 1} gains, got {len(self.gains)}")

    @classmethod
    def from_roots(cls, roots: Sequence[complex], r: float = 1.0) -> "LinearFamily":
        gains = linear_gains_from_roots(roots)
        return cls(n=len(gains) - 1, r=r, gains=gains)

    @classmethod
    def default(cls, n: int, r: float = 1.0) -> "LinearFamily":
        """All roots at ``-(n+1)``."""
        return cls.from_roots([-(n + 1.0)] * (n + 1), r=r)

    def phi(self, i, w):
        return self.r ** (i + 1) * self.gains[i] * w

    @property
    def I_phi(self):
        return (0.0, self.r, True)

    def kernel_args(self):
        return self.code, np.array([self.r]), np.array(self.gains, dtype=float)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "r": self.r, "gains": list(self.gains)}


@dataclass(frozen=True)
class LevantFamily(CorrectionFamily):
    L: float = 1.0
    gains: tuple[float, ...] = ()

    variant = "levant"
    code = LEVANT

    def __post_init__(self):
        if self.L < 0:
            raise ValueError(f"L must be non-negative, got {self.L}")
        if not self.gains:
            object.__setattr__(self, "gains", levant_gains(self.n))
        if len(self.gains) != self.n + 1:
            raise ValueError(f"need {self.n + 1} gains, got {len(self.gains)}")

    def phi(self, i, w):
        n = self.n
        return self.gains[i] * self.L ** ((i + 1) / (n + 1)) * signed_power(w, (n - i) / (n + 1))

    @property
    def signal_bound(self):
        return self.L

    def kernel_args(self):
        return self.code, np.array([self.L]), np.array(self.gains, dtype=float)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "L": self.L, "gains": list(self.gains)}


@dataclass(frozen=True)
class FixedTimeFamily(CorrectionFamily):
    """First-order fixed-time differentiator; ``T_star`` is its least settling-time bound."""

    n: int = 1
    L: float = 1.0
    T_star: float = 1.0

    variant = "fixed_time"
    code = FIXED_TIME

    def __post_init__(self):
        if self.n != 1:
            raise ValueError("the fixed-time family exists only for n = 1")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.T_star > 0:
            raise ValueError(f"T_star must be positive, got {self.T_star}")

    @property
    def k(self) -> float:
        return FIXED_TIME_CONSTANT / (math.sqrt(self.L) * self.T_star)

    def phi(self, i, w):
        L, k = self.L, self.k
        if i == 0:
            return 4.0 * math.sqrt(L) * (signed_power(w, 0.5) + k * signed_power(w, 1.5))
        return 2.0 * L * (signed_power(w, 0) + 4.0 * k * k * w + 3.0 * k ** 4 * signed_power(w, 2))

    @property
    def T_f(self):
        return self.T_star

    @property
    def signal_bound(self):
        return self.L

    def kernel_args(self):
        return self.code, np.array([self.L, self.k]), np.zeros(2)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "L": self.L, "T_star": self.T_star}


@dataclass(frozen=True)
class MenardFamily(CorrectionFamily):
    """Bi-limit homogeneous correction functions for ``L = 0``.

    Exponents are ``(i+1)c - i`` near the origin and ``(i+1)b - i`` near
    infinity. Default ``k_i`` are the Hurwitz coefficients with every root
    at ``-(n+1)``, the linear limit ``c = b = 1``.
    """

    theta: float = 1.0
    c: float = 0.9
    b: float = 1.1
    gains: tuple[float, ...] = ()
    L: float = 0.0

    variant = "menard"
    code = MENARD

    def __post_init__(self):
        if self.L != 0:
            raise ValueError("the Menard family only handles L = 0")
        menard_Tf(self.theta, self.c, self.b)  # range checks
        if (self.n + 1) * self.c - self.n < 0:
            raise ValueError(f"c={self.c} gives a negative exponent for n={self.n}")
        if not self.gains:
            object.__setattr__(self, "gains", linear_gains_from_roots([-(self.n + 1.0)] * (self.n + 1)))
        if len(self.gains) != self.n + 1:
            raise ValueError(f"need {self.n + 1} gains, got {len(self.gains)}")

    def phi(self, i, w):
        lo = (i + 1) * self.c - i
        hi = (i + 1) * self.b - i
        return self.theta ** (i + 1) * self.gains[i] * (signed_power(w, lo) + signed_power(w, hi))

    @property
    def T_f(self):
        return menard_Tf(self.theta, self.c, self.b)

    def kernel_args(self):
        return self.code, np.array([self.theta, self.c, self.b]), np.array(self.gains, dtype=float)

    def to_dict(self):
        return {"variant": self.variant, "n": self.n, "theta": self.theta, "c": self.c,
                "b": self.b, "gains": list(self.gains)}


_VARIANTS = {cls.variant: cls for cls in (LinearFamily, LevantFamily, FixedTimeFamily, MenardFamily)}


def family_from_dict(d: dict) -> CorrectionFamily:
    d = dict(d)
    try:
        cls = _VARIANTS[d.pop("variant")]
    except KeyError as exc:
        raise ValueError(f"unknown or missing family variant: {exc}") from None
    if "roots" in d:
        if cls is not LinearFamily:
            raise ValueError("roots only apply to the linear family")
        roots = d.pop("roots")
        fam = LinearFamily.from_roots(roots, r=d.pop("r", 1.0))
        if d.pop("n", fam.n) != fam.n:
            raise ValueError("n does not match the number of roots")
        if d:
            raise ValueError(f"unknown family keys: {sorted(d)}")
        return fam
    if "gains" in d:
        d["gains"] = tuple(float(g) for g in d["gains"])
    if cls is LinearFamily and "gains" not in d:
        fam = LinearFamily.default(d.pop("n"), r=d.pop("r", 1.0))
        if d:
            raise ValueError(f"unknown family keys: {sorted(d)}")
        return fam
    try:
        return cls(**d)
    except TypeError as exc:
        raise ValueError(f"bad {cls.variant} family parameters: {exc}") from None
