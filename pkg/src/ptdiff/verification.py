"""Property suites run by ``ptdiff verify``.

Each suite returns a list of :class:`Check` plus the raw reports. The
defaults below are the documented configurations; all of them use
``T_c = 1`` and ``d = 0`` unless stated.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .admissibility import check_admissibility
from .analysis import equivalence_check, perturbation_experiment, slack_sweep
from .families import FixedTimeFamily, LevantFamily, LinearFamily, MenardFamily
from .redesign import RedesignParams

EQUIV_TOL = 1e-2
SLACK_ALPHAS = (1.0, 3.0, 5.0, 8.0)
SLACK_ICS = ((10.0, 10.0), (-10.0, 10.0), (100.0, 0.0), (0.0, 100.0), (1.0, -1.0),
             (-100.0, -100.0))
STABILITY_FRACTIONS = (0.5, 0.9, 0.999)
# bounded case: small alpha keeps exp(alpha*T_f) < 2 so kappa barely moves on [0.5, 1)
BOUNDED_ALPHA = 0.5
STABILITY_DELTA = 1e-3


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def equivalence_cases():
    """``(label, params, family)`` for every family at ``n`` in ``{0, 1}``.

    The first-order fixed-time family exists only for ``n = 1``.
    """
    out = []
    for n in (0, 1):
        fams = [LinearFamily.default(n, r=5.0), LevantFamily(n, 1.0), MenardFamily(n, 1.0, 0.9, 1.1)]
        if n == 1:
            fams.append(FixedTimeFamily(1, 1.0, 1.0))
        for fam in fams:
            L = 0.0 if fam.variant == "menard" else 1.0
            p = RedesignParams.build(n, 3.0, 1.0, fam.T_f, L, family=fam)
            out.append((f"{fam.variant}/n={n}", p, fam))
    return out


def equivalence_ics(n: int):
    ones = np.ones(n + 1)
    ics = [ones, -ones, np.eye(n + 1)[0]]
    # for n = 0 the unit vector coincides with the all-ones vector
    return ics[:2] if n == 0 else ics


def _equiv_cell(args):
    label, p, fam, e0, step = args
    return label, equivalence_check(p, fam, e0, step=step, tol=EQUIV_TOL)


def run_equivalence(step: float = 1e-6, workers: int = 1) -> SuiteResult:
    cells = [(label, p, fam, e0, step) for label, p, fam in equivalence_cases()
             for e0 in equivalence_ics(p.n)]
    results = _map(_equiv_cell, cells, workers)
    res = SuiteResult("equivalence")
    for label, rep in results:
        res.reports.append(rep)
        e0 = ",".join(f"{v:g}" for v in rep.e0)
        res.checks.append(Check(f"equivalence {label} e0=({e0})", rep.passed,
                                f"max_rel_dev={rep.max_rel_dev:.3e} tol={rep.tol:g}"))
    return res


def admissibility_cases():
    """``(label, family, alpha, e0, horizon, step)`` for the first three table rows at ``n = 1``."""
    return [
        ("linear", LinearFamily.from_roots([-2.0, -2.0], r=2.0), 1.0, (1.0, 1.0), 10.0, 1e-5),
        ("levant", LevantFamily(1, 1.0, (1.5, 1.1)), 3.0, (10.0, 10.0), 40.0, 1e-5),
        ("fixed_time", FixedTimeFamily(1, 1.0, 1.0), 3.0, (10.0, 10.0), 3.0, 1e-6),
    ]


def run_admissibility(step: Optional[float] = None, workers: int = 1) -> SuiteResult:
    res = SuiteResult("admissibility")
    for label, fam, alpha, e0, horizon, h in admissibility_cases():
        rep = check_admissibility(fam, alpha, e0, horizon, step or h)
        res.reports.append(rep)
        res.checks.append(Check(
            f"admissibility {label} alpha={alpha:g}", rep.passed,
            f"gamma_fit={rep.gamma_fit:.4g} max_violation={rep.max_violation:.6g} "
            f"settling={rep.settling_time:.4g}"))
    return res


def run_slack(step: float = 1e-6, workers: int = 1) -> SuiteResult:
    fam = FixedTimeFamily(1, 1.0, 1.0)
    rep = slack_sweep(fam, SLACK_ALPHAS, SLACK_ICS, step, aux_step=step, workers=workers)
    res = SuiteResult("slack", reports=[rep])
    s = rep.slack
    res.checks.append(Check("slack finite", all(math.isfinite(v) for v in s) and not rep.failures,
                            f"slack={_fmt(s)} failures={len(rep.failures)}"))
    res.checks.append(Check("slack decreases in alpha", all(a > b for a, b in zip(s, s[1:])),
                            f"slack={_fmt(s)}"))
    ratio = s[-1] / s[0] if s[0] > 0 else math.inf
    res.checks.append(Check("slack(8) < 0.25*slack(1)", ratio < 0.25, f"ratio={ratio:.4f}"))
    res.checks.append(Check("slack non-negative", all(v >= 0 for v in s), f"slack={_fmt(s)}"))
    return res


def stability_configs():
    bounded_fam = FixedTimeFamily(1, 1.0, 1.0)
    bounded = RedesignParams.build(1, BOUNDED_ALPHA, 1.0, bounded_fam.T_f, 1.0, family=bounded_fam)
    linear_fam = LinearFamily.default(1, r=5.0)
    unbounded = RedesignParams.build(1, 3.0, 1.0, linear_fam.T_f, 1.0, family=linear_fam)
    return (bounded, bounded_fam), (unbounded, linear_fam)


def run_stability(step: float = 1e-6, workers: int = 1) -> SuiteResult:
    (pb, fb), (pu, fu) = stability_configs()
    bounded = perturbation_experiment(pb, fb, STABILITY_FRACTIONS, STABILITY_DELTA, step)
    unbounded = perturbation_experiment(pu, fu, STABILITY_FRACTIONS, STABILITY_DELTA, step)
    res = SuiteResult("stability", reports=[bounded, unbounded])
    res.checks.append(Check("bounded kappa: peaks within 2x", bounded.spread < 2.0,
                            f"peaks={_fmt(bounded.peaks)} spread={bounded.spread:.3f}"))
    ratio = unbounded.ratio(0.999, 0.5)
    res.checks.append(Check("unbounded kappa: peak(0.999) >= 10*peak(0.5)", ratio >= 10.0,
                            f"peaks={_fmt(unbounded.peaks)} ratio={ratio:.1f}"))
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "equivalence": run_equivalence,
    "admissibility": run_admissibility,
    "slack": run_slack,
    "stability": run_stability,
}


def run_suite(name: str, step: Optional[float] = None, workers: int = 1) -> list[SuiteResult]:
    names = list(SUITES) if name == "all" else [name]
    if any(n not in SUITES for n in names):
        raise ValueError(f"unknown suite {name!r}; known: {', '.join(SUITES)}, all")
    out = []
    for n in names:
        kwargs = {"workers": workers}
        if step is not None:
            kwargs["step"] = step
        out.append(SUITES[n](**kwargs))
    return out


def _map(fn, items, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _fmt(values) -> str:
    return "[" + ", ".join(f"{v:.4g}" for v in values) + "]"


__all__ = [
    "Check", "SUITES", "SuiteResult", "admissibility_cases", "equivalence_cases",
    "run_admissibility", "run_equivalence", "run_slack", "run_stability", "run_suite",
    "stability_configs",
]
