"""Experiment configuration: nested dataclasses read from and written to YAML.

Schema (every key optional unless noted; unknown keys are errors)::

    differentiator:
      n: 1                      # required
      alpha: 3.0                # required
      T_c: 1.0                  # required
      L: 1.0                    # required, class bound on the (n+1)-th derivative
      family: {variant: fixed_time, L: 1.0, T_star: 1.0}   # required
      beta: null                # explicit beta; overrides beta_factor
      beta_factor: 2.0          # beta = beta_factor * beta_min
      rho: 0.0
      mu: null                  # default 1e-3*max(1, L)
      terminal_gains: null      # default Levant gains for n
      n_f: 0                    # > 0 selects the filtering differentiator
      monitor: null             # {tol: 1e-6, dwell: 100}
      initial_state: [10, 10]
    signal: {preset: fig1a}     # or {terms: [{kind: cosine, amplitude: 1, frequency: 2}, ...]}
    noise: null                 # {std_dev: 0.1, seed: 0}
    integration: {step: 1e-6, horizon: 2.0, stride: 100}
    analysis: {settling: true, tol: 1e-3, dwell: 0.1, compare_base: false}
    output: {directory: runs, stem: run}
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .dynamics import MonitorSpec
from .families import CorrectionFamily, family_from_dict
from .redesign import RedesignParams
from .signals import NoiseSpec, TestSignal, make_preset


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class DifferentiatorConfig:
    n: int
    alpha: float
    T_c: float
    L: float
    family: dict
    beta: Optional[float] = None
    beta_factor: float = 2.0
    rho: float = 0.0
    mu: Optional[float] = None
    terminal_gains: Optional[list] = None
    n_f: int = 0
    monitor: Optional[dict] = None
    initial_state: Optional[list] = None


@dataclass
class SignalConfig:
    preset: Optional[str] = None
    terms: Optional[list] = None


@dataclass
class NoiseConfig:
    std_dev: float = 0.0
    seed: int = 0


@dataclass
class IntegrationConfig:
    step: float = 1e-5
    horizon: float = 2.0
    stride: int = 1


@dataclass
class AnalysisConfig:
    settling: bool = True
    tol: float = 1e-3
    dwell: float = 0.1
    compare_base: bool = False


@dataclass
class OutputConfig:
    directory: str = "runs"
    stem: str = "run"


@dataclass
class ExperimentConfig:
    differentiator: DifferentiatorConfig
    signal: SignalConfig = field(default_factory=SignalConfig)
    noise: Optional[NoiseConfig] = None
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    name: str = "custom"

    # -- conversion ---------------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        data = dict(data)
        if "differentiator" not in data:
            raise ConfigError("missing required section 'differentiator'")
        sections = {
            "differentiator": DifferentiatorConfig, "signal": SignalConfig, "noise": NoiseConfig,
            "integration": IntegrationConfig, "analysis": AnalysisConfig, "output": OutputConfig,
        }
        _reject_unknown(data, set(sections) | {"name"}, "top level")
        kwargs = {"name": str(data.get("name", "custom"))}
        for key, typ in sections.items():
            if key not in data:
                continue
            if data[key] is None:
                if key != "noise":
                    raise ConfigError(f"section {key!r} may not be null")
                kwargs[key] = None
                continue
            kwargs[key] = _section(typ, data[key], key)
        return cls(**kwargs)

    # -- builders ----------------------------------------------------------

    def build_family(self) -> CorrectionFamily:
        try:
            return family_from_dict(dict(self.differentiator.family))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def build_params(self, family: Optional[CorrectionFamily] = None) -> RedesignParams:
        dc = self.differentiator
        family = family or self.build_family()
        T_f = family.T_f
        try:
            return RedesignParams.build(
                dc.n, dc.alpha, dc.T_c, T_f, dc.L, beta=dc.beta, beta_factor=dc.beta_factor,
                rho=dc.rho, mu=dc.mu,
                terminal_gains=None if dc.terminal_gains is None else tuple(dc.terminal_gains),
                family=family)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def build_signal(self) -> TestSignal:
        sc = self.signal
        if (sc.preset is None) == (sc.terms is None):
            raise ConfigError("signal needs exactly one of 'preset' or 'terms'")
        try:
            if sc.preset is not None:
                return make_preset(sc.preset)
            return TestSignal.from_terms(sc.terms)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad signal: {exc}") from None

    def build_noise(self) -> Optional[NoiseSpec]:
        if self.noise is None:
            return None
        try:
            return NoiseSpec(float(self.noise.std_dev), int(self.noise.seed))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_monitor(self) -> Optional[MonitorSpec]:
        m = self.differentiator.monitor
        if m is None:
            return None
        _reject_unknown(m, {"tol", "dwell"}, "differentiator.monitor")
        spec = MonitorSpec(**m)
        if spec.tol <= 0 or spec.dwell < 1:
            raise ConfigError("monitor needs tol > 0 and dwell >= 1")
        return spec

    def initial_state(self) -> list:
        dc = self.differentiator
        x0 = dc.initial_state if dc.initial_state is not None else [0.0] * (dc.n + 1)
        if len(x0) != dc.n + 1:
            raise ConfigError(f"initial_state has {len(x0)} entries, expected n+1 = {dc.n + 1}")
        return [float(v) for v in x0]

    def validate(self) -> None:
        """Build every object once; raises :class:`ConfigError` on the first problem."""
        dc = self.differentiator
        fam = self.build_family()
        if fam.n != dc.n:
            raise ConfigError(f"family order {fam.n} does not match differentiator n = {dc.n}")
        self.build_params(fam)
        self.build_signal()
        self.build_noise()
        self.build_monitor()
        self.initial_state()
        if not 0 <= dc.n_f <= dc.n:
            raise ConfigError(f"n_f must lie in 0..n (n = {dc.n})")
        ic = self.integration
        if not (ic.step > 0 and math.isfinite(ic.step)):
            raise ConfigError("integration.step must be positive")
        if not (ic.horizon > 0 and math.isfinite(ic.horizon)):
            raise ConfigError("integration.horizon must be positive")
        if ic.horizon < ic.step:
            raise ConfigError("integration.horizon is shorter than one step")
        if int(ic.stride) != ic.stride or ic.stride < 1:
            raise ConfigError("integration.stride must be a positive integer")
        if self.analysis.tol <= 0 or self.analysis.dwell < 0:
            raise ConfigError("analysis.tol must be positive and dwell non-negative")

    def replace(self, **sections) -> "ExperimentConfig":
        return dataclasses.replace(self, **sections)


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    extra = sorted(set(data) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, extra))}")


def _section(typ, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    names = {f.name for f in dataclasses.fields(typ)}
    _reject_unknown(data, names, where)
    try:
        return typ(**data)
    except TypeError as exc:
        raise ConfigError(f"section {where!r}: {exc}") from None


def dumps(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    return ExperimentConfig.from_dict(data)


def load_config(path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


# ---------------------------------------------------------------------------
# reproduction presets


FIGURES = ("fig1a", "fig1b", "fig1c", "fig1d", "fig2")


def preset_config(name: str, step: float = 1e-6) -> ExperimentConfig:
    """Configurations of the first-order worked examples (n = 1, T_c = 1).

    The base is the first-order fixed-time family with ``T_f = 1`` and
    terminal gains ``(1.5, 1.1)``; every run starts from ``(10, 10)``.
    """
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; known: {', '.join(FIGURES)}")
    L = 10.0 if name == "fig1c" else 1.0
    diff = DifferentiatorConfig(
        n=1, alpha=5.0 if name == "fig2" else 3.0, T_c=1.0, L=L,
        family={"variant": "fixed_time", "n": 1, "L": L, "T_star": 1.0},
        beta_factor=1.5 if name == "fig2" else 2.0,
        terminal_gains=[1.5, 1.1], n_f=1 if name == "fig1d" else 0,
        initial_state=[10.0, 10.0])
    signal = SignalConfig(preset={"fig1c": "fig1c", "fig2": "fig2"}.get(name, "fig1a"))
    noise = {"fig1b": 0.1, "fig1c": 0.1, "fig1d": 0.5}.get(name)
    return ExperimentConfig(
        differentiator=diff, signal=signal,
        noise=NoiseConfig(noise, 0) if noise else None,
        integration=IntegrationConfig(step=step, horizon=2.0, stride=max(1, int(round(1e-4 / step)))),
        analysis=AnalysisConfig(compare_base=name == "fig2"),
        output=OutputConfig(stem=name), name=name)


__all__ = [
    "AnalysisConfig", "ConfigError", "DifferentiatorConfig", "ExperimentConfig", "FIGURES",
    "IntegrationConfig", "NoiseConfig", "OutputConfig", "SignalConfig", "dumps", "load_config",
    "loads", "preset_config", "save_config",
]
