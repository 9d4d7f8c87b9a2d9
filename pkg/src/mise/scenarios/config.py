"""Scenario files: flat TOML with unit-suffixed quantities.

Example::

    name = "fig2_lambda_nocoupling"
    system = "lambda"
    protocol = "nocoupling"
    omega = "154 kHz"          # bare: angular frequency unless convention = "cyclic"
    tau = "20 us"
    gamma = "1.5 MHz"
    gamma_d = "2pi*8.8 MHz"
    n = 6.55e-7

Unknown keys, missing parameters and out-of-range values are reported as
:class:`ConfigError` naming the offending field.
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .units import CONVENTIONS, UnitError, parse_quantity

F, T, D = "frequency", "time", "dimensionless"

_TWO_LEVEL_AD = {"omega_c": F, "gamma": F, "n0": D, "t_f": T}
_TWO_LEVEL_COH = {"omega0": F, "gamma": F, "n0": D, "t_f": T}
_LAMBDA = {"omega": F, "tau": T, "gamma": F, "n": D}
_LAMBDA_OPT = {"gamma_d": F, "gamma_dg": F}

# (system, protocol) -> (required parameters, optional parameters with defaults)
SCHEMA: dict[tuple[str, str], tuple[dict, dict]] = {
    ("two-level", "adiabatic"): (_TWO_LEVEL_AD, {}),
    ("two-level", "reference"): (_TWO_LEVEL_AD, {}),
    ("two-level", "coherent-I"): (_TWO_LEVEL_COH, {"control_bound": F, "sign": D}),
    ("two-level", "coherent-II"): (_TWO_LEVEL_COH, {"control_bound": F}),
    ("lambda", "adiabatic"): (_LAMBDA, {**_LAMBDA_OPT, "gamma_p": F}),
    ("lambda", "nocoupling"): (_LAMBDA, {**_LAMBDA_OPT, "phi_amplitude": D, "n_min": D}),
    ("lambda", "reference"): (_LAMBDA, {**_LAMBDA_OPT}),
    ("three-qubit", "product"): ({"a0": F, "gamma": F, "tau": T, "rx0": D}, {}),
}
DEFAULTS = {"gamma_d": 0.0, "gamma_dg": 0.0, "sign": 1.0, "phi_amplitude": math.pi / 9}

# parameters that must be > 0; every other frequency must be >= 0
POSITIVE = {"gamma", "t_f", "tau"}
NONNEGATIVE = {"gamma_d", "gamma_dg", "gamma_p", "n", "n0", "n_min", "control_bound"}

# sweep-only aliases: name -> (function of (params, value) returning updates)
ALIASES = {
    "gamma_tau": lambda p, v: {"tau": v / p["gamma"]},
}

META_KEYS = {
    "name": str, "description": str, "system": str, "protocol": str,
    "frequency_convention": str, "convention_note": str, "theta": str, "mode": str,
    "with_coupling": bool, "svg": bool, "n_samples": int, "n_out": int,
    "rtol": float, "atol": float,
}


class ConfigError(ValueError):
    """Invalid scenario; ``field`` names the offending key when there is one."""

    def __init__(self, message, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    system: str
    protocol: str
    params: dict
    description: str = ""
    frequency_convention: str = "angular"
    convention_note: str = ""
    theta: str = "sine2"
    mode: str = "strict"
    with_coupling: bool = True
    svg: bool = False
    n_samples: int | None = None
    n_out: int = 401
    rtol: float = 1e-10
    atol: float = 1e-12
    source: dict = field(default_factory=dict, compare=False)

    @property
    def t_final(self) -> float:
        return self.params["t_f"] if "t_f" in self.params else self.params["tau"]

    def with_param(self, name: str, value: float) -> "ScenarioConfig":
        """Copy with one physical parameter replaced (aliases like ``gamma_tau`` allowed)."""
        params = dict(self.params)
        if name in ALIASES:
            params.update(ALIASES[name](params, value))
        elif name in params or name in SCHEMA[(self.system, self.protocol)][1]:
            params[name] = float(value)
        else:
            raise ConfigError(f"not a parameter of {self.system}/{self.protocol}", name)
        cfg = dataclasses.replace(self, params=params)
        _validate_params(cfg.system, cfg.protocol, params)
        return cfg

    def parameter_kind(self, name: str) -> str:
        if name == "gamma_tau":
            return D
        req, opt = SCHEMA[(self.system, self.protocol)]
        kinds = {**req, **opt}
        if name not in kinds:
            raise ConfigError(f"not a parameter of {self.system}/{self.protocol}", name)
        return kinds[name]


def _validate_params(system, protocol, params):
    for k, v in params.items():
        if not math.isfinite(v):
            raise ConfigError(f"must be finite (got {v})", k)
        if k in POSITIVE and v <= 0:
            raise ConfigError(f"must be > 0 (got {v:g})", k)
        if k in NONNEGATIVE and v < 0:
            raise ConfigError(f"must be >= 0 (got {v:g})", k)


def from_dict(raw: dict[str, Any]) -> ScenarioConfig:
    raw = dict(raw)
    for key in ("name", "system", "protocol"):
        if key not in raw:
            raise ConfigError("required key missing", key)
    system, protocol = raw["system"], raw["protocol"]
    if (system, protocol) not in SCHEMA:
        known = ", ".join(f"{s}/{p}" for s, p in SCHEMA)
        raise ConfigError(f"unknown system/protocol {system}/{protocol} (known: {known})",
                          "protocol")
    convention = raw.get("frequency_convention", "angular")
    if convention not in CONVENTIONS:
        raise ConfigError(f"must be one of {CONVENTIONS}", "frequency_convention")
    req, opt = SCHEMA[(system, protocol)]
    kinds = {**req, **opt}
    meta, params = {}, {}
    for key, value in raw.items():
        if key in META_KEYS:
            typ = META_KEYS[key]
            if typ is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
                raise ConfigError(f"expected {typ.__name__}, got {value!r}", key)
            meta[key] = value
        elif key in kinds:
            try:
                params[key] = parse_quantity(value, kinds[key], convention)
            except UnitError as exc:
                raise ConfigError(str(exc), key) from None
        else:
            raise ConfigError(f"unknown key for {system}/{protocol}", key)
    for key in req:
        if key not in params:
            raise ConfigError("required parameter missing", key)
    for key in opt:
        if key not in params and key in DEFAULTS:
            params[key] = DEFAULTS[key]
    _validate_params(system, protocol, params)
    if meta.get("mode", "strict") not in ("strict", "handover"):
        raise ConfigError("must be 'strict' or 'handover'", "mode")
    if meta.get("theta", "sine2") not in ("linear", "sine2"):
        raise ConfigError("must be 'linear' or 'sine2'", "theta")
    if meta.get("n_out", 401) < 2:
        raise ConfigError("must be >= 2", "n_out")
    if meta.get("n_samples") is not None and meta["n_samples"] < 4:
        raise ConfigError("must be >= 4", "n_samples")
    for key in ("rtol", "atol"):
        if key in meta and not meta[key] > 0:
            raise ConfigError("must be > 0", key)
    return ScenarioConfig(system=system, protocol=protocol, params=params, source=raw,
                          **{k: v for k, v in meta.items() if k not in ("system", "protocol")})


def bundled_names() -> list[str]:
    root = resources.files(__package__) / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _read_text(path_or_name: str | Path) -> tuple[str, str]:
    p = Path(path_or_name)
    if p.suffix == ".toml" and p.exists():
        return p.read_text(encoding="utf-8"), str(p)
    name = str(path_or_name)
    if name in bundled_names():
        res = resources.files(__package__) / "configs" / f"{name}.toml"
        return res.read_text(encoding="utf-8"), f"<bundled {name}>"
    raise ConfigError(f"no such scenario file or bundled scenario: {path_or_name}")


def load_config(path_or_name: str | Path) -> ScenarioConfig:
    """Load a scenario from a ``.toml`` path or by bundled name."""
    text, origin = _read_text(path_or_name)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    return from_dict(raw)
