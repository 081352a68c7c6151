"""Run configuration: defaults, key=value file parsing, and the echo that
gets embedded in model files."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from .chc import ChcConfig
from .induction import InductionConfig


class ConfigError(ValueError):
    """Unparseable or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    fuzzy_sets: int = 5
    max_len: int = 3
    prop: tuple[float, ...] = (0.2, 0.3, 0.5)
    min_conf_crisp: float = 0.7
    min_conf_fuzzy: float = 0.6
    gamma: int = 4
    population: int = 50
    evaluations: int = 10000
    max_restarts: int = 3
    delta: float = 0.15
    restart_gamma: float = 0.35
    phi: float = 0.01
    cost_sensitive: bool = True
    quantiles: int = 1000
    seed: int = 0
    lightweight: bool = False

    def induction_config(self) -> InductionConfig:
        return InductionConfig(
            n_sets=self.fuzzy_sets,
            max_len=self.max_len,
            min_conf_crisp=self.min_conf_crisp,
            min_conf_fuzzy=self.min_conf_fuzzy,
            gamma=self.gamma,
            prop=tuple(Fraction(str(p)) for p in self.prop),
            cost_sensitive=self.cost_sensitive,
        )

    def chc_config(self) -> ChcConfig:
        return ChcConfig(
            population_size=self.population,
            max_evaluations=self.evaluations,
            max_restarts=self.max_restarts,
            delta=self.delta,
            restart_gamma=self.restart_gamma,
            phi=self.phi,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


def _parse_value(key: str, raw: str, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "on", "1", "yes"):
                return True
            if low in ("false", "off", "0", "no"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(float(x) for x in raw.split(","))
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    raise ConfigError(f"unsupported config key type for {key}")


def parse_config(text: str) -> RunConfig:
    """Parse the plain-text key=value format; unknown keys are rejected."""
    kinds = {f.name: (tuple if f.name == "prop" else type(getattr(RunConfig(), f.name)))
             for f in fields(RunConfig)}
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in kinds:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        overrides[key] = _parse_value(key, raw, kinds[key])
    try:
        return RunConfig(**overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())

def config_from_dict(data: dict) -> RunConfig:
    kwargs = {}
    for f in fields(RunConfig):
        if f.name in data:
            v = data[f.name]
            kwargs[f.name] = tuple(v) if isinstance(v, list) else v
    return RunConfig(**kwargs)
