"""Scenario files, figure runs, sweeps and the self-check suite."""
from .config import ConfigError, ScenarioConfig, bundled_names, from_dict, load_config
from .runner import CSV_SCHEMA, OUTPUT_ENV, RunReport, SweepReport, build_protocol, run, sweep
from .units import UnitError, parse_quantity

__all__ = [
    "CSV_SCHEMA", "ConfigError", "OUTPUT_ENV", "RunReport", "ScenarioConfig", "SweepReport",
    "UnitError", "build_protocol", "bundled_names", "from_dict", "load_config",
    "parse_quantity", "run", "sweep",
]
