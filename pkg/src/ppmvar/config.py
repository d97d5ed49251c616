"""Run configuration stored as INI text with one section per component.

Sections and keys (all optional; omitted keys keep their defaults)::

    [model]        models = mu-ppm, sigma2-ppm   fit_scale = 100
    [mean]         m  tau0_sq  nu0  lambda0  c  hierarchical  eta  phi
    [variance]     m  nu0  lambda0  c
    [score]        k1  k2  tail_k
    [mcmc]         sweeps  burn_in  seed
    [conditional]  sweeps  burn_in
    [backtest]     window  sweeps  burn_in
    [run]          alphas  horizon_days  bootstrap_reps  histogram_bins  workers  stability
    [sensitivity]  c_grid  a_grid

List values are comma separated.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .errors import DomainError, UsageError
from .gibbs_mean import MeanHyperParams
from .gibbs_variance import VarHyperParams
from .mcmc import MCMCConfig
from .outliers import ScoreParams

MODELS = ("mu-ppm", "sigma2-ppm", "ml-normal")


def a_parameterization(a: float) -> tuple[float, float]:
    """``(lambda0, nu0)`` giving an Inverse-Gamma prior with mean and variance ``a``."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}", module="config")
    return a * (a + 1), 2 + a


@dataclass(frozen=True)
class ModelSection:
    models: tuple[str, ...] = ("mu-ppm", "sigma2-ppm")
    fit_scale: float = 100.0


@dataclass(frozen=True)
class ConditionalSection:
    sweeps: int = 2000
    burn_in: int = 200


@dataclass(frozen=True)
class BacktestSection:
    window: int = 745
    sweeps: int = 4000
    burn_in: int = 400


@dataclass(frozen=True)
class RunSection:
    alphas: tuple[float, ...] = (0.01, 0.05)
    horizon_days: int = 1
    bootstrap_reps: int = 1000
    histogram_bins: int = 50
    workers: int = 1
    stability: bool = False


@dataclass(frozen=True)
class SensitivitySection:
    c_grid: tuple[float, ...] = (0.1, 0.5, 1.0, 5.0, 10.0, 50.0)
    a_grid: tuple[float, ...] = (0.0001, 0.001, 0.01, 0.1, 1.0)


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    mean: MeanHyperParams = field(default_factory=MeanHyperParams)
    variance: VarHyperParams = field(default_factory=VarHyperParams)
    score: ScoreParams = field(default_factory=ScoreParams)
    mcmc: MCMCConfig = field(default_factory=MCMCConfig)
    conditional: ConditionalSection = field(default_factory=ConditionalSection)
    backtest: BacktestSection = field(default_factory=BacktestSection)
    run: RunSection = field(default_factory=RunSection)
    sensitivity: SensitivitySection = field(default_factory=SensitivitySection)

    def __post_init__(self):
        for m in self.model.models:
            if m not in MODELS:
                raise UsageError(f"unknown model {m!r}; choose from {', '.join(MODELS)}", module="config")
        if not self.model.fit_scale > 0:
            raise DomainError("fit_scale must be positive", module="config")
        for a in self.run.alphas:
            if not 0 < a < 0.5:
                raise DomainError(f"alpha must be in (0, 0.5), got {a}", module="config")
        if self.run.horizon_days < 1:
            raise DomainError("horizon_days must be positive", module="config")
        MCMCConfig(self.conditional.sweeps, self.conditional.burn_in)
        MCMCConfig(self.backtest.sweeps, self.backtest.burn_in)

    @property
    def conditional_mcmc(self) -> MCMCConfig:
        return MCMCConfig(self.conditional.sweeps, self.conditional.burn_in, self.mcmc.seed)

    @property
    def backtest_mcmc(self) -> MCMCConfig:
        return MCMCConfig(self.backtest.sweeps, self.backtest.burn_in, self.mcmc.seed)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, mcmc=self.mcmc.with_seed(seed))

    def as_dict(self) -> dict[str, dict[str, Any]]:
        return {f.name: {g.name: getattr(getattr(self, f.name), g.name)
                         for g in fields(getattr(self, f.name))}
                for f in fields(self)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, template, key: str):
    try:
        if isinstance(template, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "1", "yes", "on")
        if isinstance(template, tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if template and isinstance(template[0], float):
                return tuple(float(s) for s in items)
            return tuple(items)
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise UsageError(f"bad value {raw!r} for {key}", module="config") from None


def to_ini(cfg: RunConfig) -> str:
    parser = configparser.ConfigParser()
    for section, values in cfg.as_dict().items():
        parser[section] = {k: _format(v) for k, v in values.items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def from_ini(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config: {exc}", module="config") from None
    default = RunConfig()
    sections = {}
    for f in fields(default):
        current = getattr(default, f.name)
        if not parser.has_section(f.name):
            sections[f.name] = current
            continue
        known = {g.name for g in fields(current)}
        unknown = set(parser[f.name]) - known
        if unknown:
            raise UsageError(f"unknown keys in [{f.name}]: {', '.join(sorted(unknown))}", module="config")
        updates = {k: _parse(v, getattr(current, k), f"{f.name}.{k}") for k, v in parser[f.name].items()}
        sections[f.name] = replace(current, **updates)
    unknown = set(parser.sections()) - {f.name for f in fields(default)}
    if unknown:
        raise UsageError(f"unknown sections: {', '.join(sorted(unknown))}", module="config")
    return RunConfig(**sections)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return from_ini(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}", module="config") from None
