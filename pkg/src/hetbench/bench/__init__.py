"""Sweep orchestration, persistence and figures."""
from .config import (DEVICE_PRESETS, PAPER_STEPS, PAPER_STEPS_GRID, PAPER_VARIANTS, STRATEGIES,
                     ConfigError, SweepConfig, apply_overrides, config_from_mapping, load_config,
                     paper_config)
from .figures import emit_figures
from .records import CSV_HEADER, RecordWriter, RunRecord, quantized, read_records, write_records
from .sweep import SweepResults, run_sweep

__all__ = [
    "CSV_HEADER", "ConfigError", "DEVICE_PRESETS", "PAPER_STEPS", "PAPER_STEPS_GRID",
    "PAPER_VARIANTS", "RecordWriter", "RunRecord", "STRATEGIES", "SweepConfig", "SweepResults",
    "apply_overrides", "config_from_mapping", "emit_figures", "load_config", "paper_config",
    "quantized", "read_records", "run_sweep", "write_records",
]
