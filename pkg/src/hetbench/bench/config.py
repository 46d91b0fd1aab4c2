"""Sweep configuration: schema, defaults for the reference grids, TOML/JSON loading."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..executor import DevicePerfModel, Mode
from ..simkernel import ModelKind

STRATEGIES = ("cpu_only", "accel_only", "hybrid")

# "2056" is reproduced as published (2048 was probably intended).
_GRID = [32, 128, 256, 512, 1024, 2056, 4096, 8192, 16384, 32768, 65536, 131072, 256000, 512000]
PAPER_VARIANTS = {
    ModelKind.BOX: list(_GRID),
    ModelKind.BOX_AND_BALL: list(_GRID),
    ModelKind.ARM_WITH_ROPE: _GRID[:13],
    ModelKind.HUMANOID: _GRID[:10],
}
PAPER_STEPS = [1000]
PAPER_STEPS_GRID = [32, 128, 256, 512, 1024, 2056, 4096, 8192, 16384, 32768]
PAPER_STEPS_POPULATION = 128
PAPER_REPETITIONS = 3

# Illustrative device, one capacity per scene; not measured on any hardware.
DEVICE_PRESETS = {
    "gtx1070ti-like": {
        ModelKind.BOX: DevicePerfModel(startup=2.0, capacity=16384, step_wave_cost=4e-3),
        ModelKind.BOX_AND_BALL: DevicePerfModel(startup=2.0, capacity=131072, step_wave_cost=6e-3),
        ModelKind.ARM_WITH_ROPE: DevicePerfModel(startup=2.5, capacity=8192, step_wave_cost=1e-2),
        ModelKind.HUMANOID: DevicePerfModel(startup=3.0, capacity=2048, step_wave_cost=2e-2),
    },
}

OUT_ENV = "HETBENCH_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    models: list
    variants_per_model: dict
    steps_list: list = field(default_factory=lambda: list(PAPER_STEPS))
    repetitions: int = PAPER_REPETITIONS
    strategies: list = field(default_factory=lambda: list(STRATEGIES))
    device: DevicePerfModel = field(
        default_factory=lambda: DevicePerfModel(startup=0.5, capacity=1024, step_wave_cost=1e-4))
    device_per_model: dict = field(default_factory=dict)
    workers: int = 1
    mode: Mode = Mode.MODELED
    max_variants_cap: dict = field(default_factory=dict)
    output_dir: Path = Path("results")
    orchestration_overhead_s: float = 0.0
    probe_n: int | None = None
    floor_threshold: float = 0.5

    def __post_init__(self):
        self.models = [ModelKind.parse(m) for m in self.models]
        self.variants_per_model = {ModelKind.parse(k): [int(n) for n in v]
                                   for k, v in self.variants_per_model.items()}
        self.max_variants_cap = {ModelKind.parse(k): int(v) for k, v in self.max_variants_cap.items()}
        self.device_per_model = {ModelKind.parse(k): v for k, v in self.device_per_model.items()}
        self.mode = Mode.parse(self.mode)
        self.output_dir = Path(self.output_dir)
        self.steps_list = [int(s) for s in self.steps_list]
        self.validate()

    def validate(self) -> None:
        if not self.models:
            raise ConfigError("models must not be empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.steps_list or any(s < 1 for s in self.steps_list):
            raise ConfigError("steps_list needs positive entries")
        if any(b <= a for a, b in zip(self.steps_list, self.steps_list[1:])):
            raise ConfigError("steps_list must be strictly increasing")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad or not self.strategies:
            raise ConfigError(f"strategies must be a non-empty subset of {STRATEGIES}, got {self.strategies}")
        for m in self.models:
            grid = self.variants_per_model.get(m)
            if not grid:
                raise ConfigError(f"no variant list for model {m}")
            if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"variant list for {m} must be positive and strictly increasing")
        if self.orchestration_overhead_s < 0:
            raise ConfigError("orchestration_overhead_s must be >= 0")
        if self.probe_n is not None and self.probe_n < 1:
            raise ConfigError("probe_n must be >= 1")

    def grid(self, kind: ModelKind) -> list[int]:
        cap = self.max_variants_cap.get(kind)
        grid = self.variants_per_model[kind]
        return [n for n in grid if cap is None or n <= cap]

    def device_for(self, kind: ModelKind) -> DevicePerfModel:
        return self.device_per_model.get(kind, self.device)

    def cell_count(self) -> int:
        """Rows a complete sweep writes."""
        cells = sum(len(self.grid(m)) for m in self.models) * len(self.steps_list)
        return cells * self.repetitions * len(self.strategies)


_KEYS = {"models", "variants_per_model", "steps_list", "repetitions", "strategies", "device",
         "device_per_model", "workers", "mode", "max_variants_cap", "output_dir",
         "orchestration_overhead_s", "probe_n", "floor_threshold"}


def _device(value) -> tuple[DevicePerfModel | None, dict]:
    if isinstance(value, str):
        try:
            preset = DEVICE_PRESETS[value]
        except KeyError:
            raise ConfigError(f"unknown device preset {value!r}; known: {sorted(DEVICE_PRESETS)}") from None
        return None, dict(preset)
    if isinstance(value, dict):
        return DevicePerfModel.from_mapping(value), {}
    raise ConfigError("device must be a preset name or a table of device keys")


def config_from_mapping(data: dict, base_dir: Path | None = None) -> SweepConfig:
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(data)
    try:
        if "device" in kw:
            dev, per_model = _device(kw.pop("device"))
            if dev is not None:
                kw["device"] = dev
            kw["device_per_model"] = per_model
        if "device_per_model" in data:
            extra = {k: DevicePerfModel.from_mapping(v) for k, v in data["device_per_model"].items()}
            kw["device_per_model"] = {**kw.get("device_per_model", {}), **extra}
        if "variants_per_model" not in kw:
            kw["variants_per_model"] = {m: PAPER_VARIANTS[ModelKind.parse(m)] for m in kw.get("models", [])}
        if "output_dir" in kw and base_dir is not None and not Path(kw["output_dir"]).is_absolute():
            kw["output_dir"] = base_dir / kw["output_dir"]
        return SweepConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | os.PathLike) -> SweepConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_mapping(data, base_dir=path.parent)


def apply_overrides(config: SweepConfig, overrides: dict) -> SweepConfig:
    """Environment then flag overrides; `None` values are ignored."""
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        config = replace(config, output_dir=Path(env_out))
    clean = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(clean) - _KEYS
    if unknown:
        raise ConfigError(f"unknown override keys: {sorted(unknown)}")
    if clean:
        config = replace(config, **clean)
    return config


def paper_config(models=None, **kw) -> SweepConfig:
    """The reference variant sweep (1000 steps, 3 repetitions, all strategies)."""
    models = [ModelKind.parse(m) for m in (models or list(ModelKind))]
    return SweepConfig(models=models,
                       variants_per_model={m: PAPER_VARIANTS[m] for m in models}, **kw)
