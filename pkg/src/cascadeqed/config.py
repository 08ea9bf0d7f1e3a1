"""Run configuration: INI sections with a fixed key list and env overrides.

All frequencies and rates are in units of the bare qubit frequency; times
in its inverse.  Every key can be overridden by an environment variable
``CASCADEQED_<SECTION>__<KEY>`` (upper case), e.g.
``CASCADEQED_CASCADE__KAPPA1=0.002``.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

ENV_PREFIX = "CASCADEQED_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SubsystemSection:
    eta: float = 0.5
    theta: float = math.pi / 5
    omega_q: float = 1.0
    n_fock: int = 30
    n_keep: int = 8  # spectrum scans
    omega_c: float = 2.0  # only used when no crossing is located


@dataclass(frozen=True)
class CascadeSection:
    kappa1: float = 0.004
    kappa2: float = 0.001
    gamma1: float = 0.0
    gamma2: float = 0.0
    G: float = 1.0


@dataclass(frozen=True)
class PulseSection:
    T: float = 1500.0
    t0: float = 0.0  # 0 selects 3 T
    omega_in: float = 0.0  # 0 selects the carrier from the located crossing
    vacuum: bool = False
    tau_d: float = 0.0


@dataclass(frozen=True)
class IntegratorSection:
    method: str = "exact"
    dt: float = 0.0  # 0 selects the method default
    degree: int = 3
    n_keep: int = 5  # dynamics truncation
    t_end: float = 0.0  # 0 selects the end of the pulse support
    sample_stride: int = 1


@dataclass(frozen=True)
class SweepSection:
    grid_min: float = 1.0
    grid_max: float = 3.0
    grid_points: int = 401
    levels: int = 8
    lower: int = 4
    upper: int = 5
    axis: str = "delay"
    workers: int = 1
    kappa_s: str = ""  # comma list for validate; empty selects 1/T and 2/T


SECTIONS = {
    "subsystem": SubsystemSection,
    "cascade": CascadeSection,
    "pulse": PulseSection,
    "integrator": IntegratorSection,
    "sweep": SweepSection,
}


@dataclass(frozen=True)
class RunConfig:
    subsystem: SubsystemSection = field(default_factory=SubsystemSection)
    cascade: CascadeSection = field(default_factory=CascadeSection)
    pulse: PulseSection = field(default_factory=PulseSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    def with_values(self, section: str, **values) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **values)})

    def flat(self) -> dict[str, object]:
        out = {}
        for name in SECTIONS:
            sec = getattr(self, name)
            for f in fields(sec):
                out[f"{name}.{f.name}"] = getattr(sec, f.name)
        return out


def _coerce(kind, raw: str, where: str):
    text = raw.strip()
    try:
        if kind is bool or kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int or kind == "int":
            return int(text)
        if kind is float or kind == "float":
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {getattr(kind, '__name__', kind)}") from None


def _apply(config: RunConfig, section: str, key: str, raw: str, where: str) -> RunConfig:
    if section not in SECTIONS:
        raise ConfigError(f"{where}: unknown section [{section}]")
    types = {f.name: f.type for f in fields(SECTIONS[section])}
    lookup = {k.lower(): k for k in types}
    if key.lower() not in lookup:
        raise ConfigError(f"{where}: unknown key {key!r} in [{section}]; known: {sorted(types)}")
    name = lookup[key.lower()]
    return config.with_values(section, **{name: _coerce(types[name], raw, where)})


def load_config(path: str | os.PathLike | None = None,
                env: Mapping[str, str] | None = None) -> RunConfig:
    """Defaults, then the INI file (if any), then environment overrides."""
    config = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                config = _apply(config, section, key, raw, f"{path} [{section}] {key}")
    env = os.environ if env is None else env
    for var in sorted(env):
        if not var.startswith(ENV_PREFIX):
            continue
        rest = var[len(ENV_PREFIX):]
        if "__" not in rest:
            raise ConfigError(f"environment override {var} must look like {ENV_PREFIX}SECTION__KEY")
        section, key = rest.split("__", 1)
        config = _apply(config, section.lower(), key, env[var], f"env {var}")
    validate_config(config)
    return config


def validate_config(config: RunConfig) -> None:
    c = config.cascade
    if c.kappa1 <= 0 or c.kappa2 <= 0 or c.gamma1 < 0 or c.gamma2 < 0 or not 0 <= c.G <= 1:
        raise ConfigError("cascade: need kappa > 0, gamma >= 0, 0 <= G <= 1")
    if config.pulse.T <= 0:
        raise ConfigError("pulse: T must be positive")
    if config.pulse.tau_d < 0:
        raise ConfigError("pulse: tau_d must be non-negative")
    if config.integrator.method not in ("exact", "rk4"):
        raise ConfigError("integrator: method must be 'exact' or 'rk4'")
    if config.sweep.axis not in ("gamma", "delay", "gain", "omega_c"):
        raise ConfigError("sweep: axis must be one of gamma, delay, gain, omega_c")
    s = config.sweep
    if s.grid_points < 3 or not s.grid_max > s.grid_min:
        raise ConfigError("sweep: grid needs grid_max > grid_min and at least 3 points")
