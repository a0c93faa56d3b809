"""Analytic test signals with exact derivatives, plus seeded measurement noise."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

KINDS = ("cosine", "sine", "linear", "polynomial")


@dataclass(frozen=True)
class Term:
    """One additive term. ``polynomial`` is ``amplitude * t**degree``."""

    kind: str
    amplitude: float
    frequency: float = 1.0
    degree: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "linear":
            object.__setattr__(self, "degree", 1)
        if self.degree < 0:
            raise ValueError("polynomial degree must be non-negative")

    def derivative(self, t, order: int):
        t = np.asarray(t, dtype=float)
        a, w = self.amplitude, self.frequency
        if self.kind in ("cosine", "sine"):
            return a * w ** order * _cos_shift(w * t, order, self.kind)
        p = self.degree
        if order > p:
            return np.zeros_like(t)
        coef = a * math.factorial(p) / math.factorial(p - order)
        return coef * t ** (p - order)

    def bound(self, order: int) -> float:
        """Supremum of ``|d^order/dt^order|`` over ``t >= 0``."""
        if self.kind in ("cosine", "sine"):
            return abs(self.amplitude) * abs(self.frequency) ** order
        p = self.degree
        if order > p or self.amplitude == 0:
            return 0.0
        if order == p:
            return abs(self.amplitude) * math.factorial(p)
        return math.inf

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind in ("cosine", "sine"):
            d["frequency"] = self.frequency
        elif self.kind == "polynomial":
            d["degree"] = self.degree
        return d


def _cos_shift(x, order, kind):
    # exact quarter-turn phase shifts: avoid cos(x + k*pi/2) rounding
    q = (order + (3 if kind == "sine" else 0)) % 4
    if q == 0:
        return np.cos(x)
    if q == 1:
        return -np.sin(x)
    if q == 2:
        return -np.cos(x)
    return np.sin(x)


@dataclass(frozen=True)
class TestSignal:
    __test__ = False  # not a pytest class

    terms: tuple[Term, ...]
    name: str = "custom"

    def value(self, t):
        return self.derivative(t, 0)

    def derivative(self, t, order: int):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term.derivative(t, order)
        return out

    def derivative_stack(self, t, upto: int) -> np.ndarray:
        """Array of shape ``(len(t), upto+1)`` holding ``y, y', ..., y^(upto)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.column_stack([self.derivative(t, k) for k in range(upto + 1)])

    def to_dict(self) -> dict:
        return {"terms": [term.to_dict() for term in self.terms]}

    @classmethod
    def from_terms(cls, terms: Sequence[dict], name: str = "custom") -> "TestSignal":
        return cls(tuple(Term(**d) for d in terms), name=name)


def derivative_bound(sig: TestSignal, order: int, L: Optional[float] = None) -> float:
    """Supremum bound on ``|y^(order)|``; warns if it exceeds ``L``.

    Sines and cosines sharing a frequency are merged into one phasor, so their
    bound is exact; distinct frequencies and polynomial terms are combined by
    the triangle inequality.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    phasors: dict[float, list[float]] = {}
    bound = 0.0
    for term in sig.terms:
        if term.kind in ("cosine", "sine"):
            ab = phasors.setdefault(abs(term.frequency), [0.0, 0.0])
            # sin(-w t) = -sin(w t)
            sgn = -1.0 if term.kind == "sine" and term.frequency < 0 else 1.0
            ab[term.kind == "sine"] += sgn * term.amplitude
        else:
            bound += term.bound(order)
    for w, (a, b) in phasors.items():
        bound += w ** order * math.hypot(a, b)
    if L is not None and bound > L * (1 + 1e-12):
        log.warning("signal %s: sup|y^(%d)| = %.6g exceeds the class bound L = %g",
                    sig.name, order, bound, L)
    return bound


PRESETS = {
    "fig1a": ((("cosine", 0.75, 1.0), ("sine", 0.0025, 10.0), ("linear", 1.0, 1.0))),
    "fig1c": ((("cosine", 0.1, 10.0), ("sine", 0.1, 10.0), ("linear", 1.0, 1.0))),
    "fig2": ((("cosine", 0.75, 1.0), ("sine", 0.025, 10.0), ("linear", 1.0, 1.0))),
}


def make_preset(name: str) -> TestSignal:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown signal preset {name!r}; known: {sorted(PRESETS)}") from None
    return TestSignal(tuple(Term(kind, a, w) for kind, a, w in spec), name=name)


@dataclass(frozen=True)
class NoiseSpec:
    std_dev: float
    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError("only gaussian noise is supported")
        if self.std_dev < 0:
            raise ValueError("std_dev must be non-negative")


@dataclass
class NoiseStream:
    """Sequential per-grid-point Gaussian draws; chunked reads equal one long read."""

    spec: Optional[NoiseSpec]
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.spec.seed if self.spec else 0)

    def draw(self, count: int) -> np.ndarray:
        if self.spec is None or self.spec.std_dev == 0:
            return np.zeros(count)
        return self.spec.std_dev * self._rng.standard_normal(count)


def sample_measurement(sig: TestSignal, noise: Optional[NoiseSpec], t) -> np.ndarray:
    """``y(t_k) + nu_k`` with ``nu_k`` the k-th draw of the seeded stream."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return sig.value(t) + NoiseStream(noise).draw(t.size)
