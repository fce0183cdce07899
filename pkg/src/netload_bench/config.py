"""Run configuration: flat ``key = value`` files, CLI overrides and manifests.

Example file::

    # data
    load_csv = data/Load_history.csv
    temperature_csv = data/temperature_history.csv
    solar_csv = data/solar/train15.csv
    scenarios = all
    seeds = 1,2,3,4,5
    noise_std = 50

Blank lines and ``#`` comments are ignored. List values are comma separated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .attack import NoiseSpec
from .errors import ConfigError
from .gbm import GbmConfig
from .mlp import TrainConfig
from .scenario import SCENARIO_IDS, allowed_scenarios

SEED_ENV = "NETLOAD_BENCH_SEED"
DEFAULT_SEED = 42
PATH_KEYS = ("load_csv", "temperature_csv", "solar_csv")


def _ints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def _paths(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _scenarios(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return list(SCENARIO_IDS) if items == ["all"] else items


@dataclass
class RunConfig:
    load_csv: str = ""
    temperature_csv: list = field(default_factory=list)
    solar_csv: str = ""
    load_zone: int = 21
    solar_zone: int = 1
    temperature_units: str = "F"
    solar_power_scale: float = 100.0
    holidays_file: str = ""
    scenarios: list = field(default_factory=lambda: list(SCENARIO_IDS))
    seeds: list = field(default_factory=list)
    noise_fraction: float = NoiseSpec.fraction
    noise_mean: float = NoiseSpec.mean
    noise_std: float = NoiseSpec.std
    mlp_learning_rate: float = TrainConfig.learning_rate
    mlp_epochs: int = TrainConfig.epochs
    mlp_batch_size: int = TrainConfig.batch_size
    mlp_hidden_units: int = TrainConfig.hidden_units
    mlp_input_scaling: str = TrainConfig.input_scaling
    gbm_estimators: int = GbmConfig.estimators
    gbm_shrinkage: float = GbmConfig.shrinkage
    gbm_max_depth: int = GbmConfig.max_depth
    deployment: str = "central"
    out: str = "results"
    jobs: int = 1
    subsample: int = 0

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.noise_fraction, self.noise_mean, self.noise_std)

    @property
    def mlp(self) -> TrainConfig:
        return TrainConfig(
            self.mlp_learning_rate, self.mlp_epochs, self.mlp_batch_size, 0, self.mlp_hidden_units, self.mlp_input_scaling
        )

    @property
    def gbm(self) -> GbmConfig:
        return GbmConfig(self.gbm_estimators, self.gbm_shrinkage, self.gbm_max_depth)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def manifest(self) -> str:
        lines = ["# effective configuration; feed back with --config to reproduce"]
        for key, value in self.as_dict().items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    "temperature_csv": _paths,
    "scenarios": _scenarios,
    "seeds": _ints,
}
KNOWN_KEYS = tuple(f.name for f in fields(RunConfig))


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        values[key.strip()] = value.strip()
    return values


def parse(raw: dict[str, str]) -> tuple[RunConfig, list[str]]:
    """Build a RunConfig from string values; returns it with any parse errors."""
    cfg = RunConfig()
    errors = []
    types = {f.name: f.type for f in fields(RunConfig)}
    for key, text in raw.items():
        if key not in types:
            errors.append(f"unknown key {key!r}")
            continue
        try:
            if key in _PARSERS:
                value = _PARSERS[key](text)
            elif types[key] == "int":
                value = int(text)
            elif types[key] == "float":
                value = float(text)
            else:
                value = text
        except ValueError:
            errors.append(f"key {key!r}: cannot parse {text!r} as {types[key]}")
            continue
        setattr(cfg, key, value)
    if not cfg.seeds:
        env = os.environ.get(SEED_ENV, "").strip()
        try:
            cfg.seeds = _ints(env) if env else [DEFAULT_SEED]
        except ValueError:
            errors.append(f"environment variable {SEED_ENV}: cannot parse {env!r} as integers")
    return cfg, errors


def validate(cfg: RunConfig, require_paths=PATH_KEYS) -> list[str]:
    """Itemised problems with ``cfg``; an empty list means it is usable."""
    errors = []
    for key in require_paths:
        value = getattr(cfg, key)
        paths = value if isinstance(value, list) else [value] if value else []
        if not paths:
            errors.append(f"missing required key {key!r}")
        for p in paths:
            if not Path(p).exists():
                errors.append(f"key {key!r}: path does not exist: {p}")
    if cfg.holidays_file and not Path(cfg.holidays_file).exists():
        errors.append(f"key 'holidays_file': path does not exist: {cfg.holidays_file}")
    bad = [s for s in cfg.scenarios if s not in SCENARIO_IDS]
    if bad:
        errors.append(f"unknown scenario id(s): {', '.join(bad)} (valid: {', '.join(SCENARIO_IDS)})")
    if not cfg.scenarios:
        errors.append("key 'scenarios' is empty")
    if not cfg.seeds:
        errors.append("key 'seeds' is empty")
    try:
        allowed = allowed_scenarios(cfg.deployment)
        blocked = [s for s in cfg.scenarios if s in SCENARIO_IDS and s not in allowed]
        if blocked:
            errors.append(f"scenario(s) {', '.join(blocked)} not available in the {cfg.deployment} deployment")
    except ConfigError as exc:
        errors.append(str(exc))
    if cfg.temperature_units not in ("F", "C"):
        errors.append(f"key 'temperature_units' must be F or C, got {cfg.temperature_units!r}")
    for build in (lambda: cfg.noise, lambda: cfg.mlp, lambda: cfg.gbm):
        try:
            build()
        except ValueError as exc:
            errors.append(str(exc))
    if cfg.jobs < 1:
        errors.append(f"key 'jobs' must be >= 1, got {cfg.jobs}")
    if cfg.subsample < 0:
        errors.append(f"key 'subsample' must be >= 0, got {cfg.subsample}")
    return errors
