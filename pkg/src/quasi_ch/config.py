"""Run configuration and its flat ``key = value`` text format.

Example::

    # deep quench
    scenario = spinodal_1d
    scenario.u_target = 2.0
    material.gamma = 1e-3
    grid.nx = 256
    solver.dt = 1e-5

Dotted prefixes select a section: ``material``, ``grid``, ``solver``,
``scenario``, ``formats`` and ``policy``; ``scenario`` and ``output_dir``
are top-level keys.  Unknown keys are errors; anything omitted keeps its
default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .constitutive import MaterialParams
from .diagnostics import ThresholdPolicy
from .fields import Grid
from .solver import SolverConfig

SCENARIOS = ("spinodal_1d", "spinodal_2d", "heat_pulse", "flux_induced_mixing")


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class GridSpec:
    nx: int = 256
    ny: int = 0
    lx: float = 1.0
    ly: float = 1.0

    def build(self) -> Grid:
        if self.ny:
            return Grid.uniform((self.nx, self.ny), (self.lx, self.ly))
        return Grid.uniform(self.nx, self.lx)


@dataclass(frozen=True)
class ScenarioParams:
    """Scenario name and the knobs the presets read.

    ``amplitude``/``u_target`` drive the spinodal presets, ``theta_bar``,
    ``pulse_width``/``pulse_amplitude`` and ``c_uniform`` the heat pulse,
    and ``interface_width``, ``band_lo``/``band_hi`` and ``q_magnitude``
    the flux-induced mixing preset.
    """

    name: str = "spinodal_1d"
    amplitude: float = 0.01
    u_target: float = 2.0
    theta_bar: float = 1.0
    pulse_width: float = 0.05
    pulse_amplitude: float = 0.1
    c_uniform: float = 0.0
    interface_width: float = 0.02
    band_lo: float = 0.35
    band_hi: float = 0.65
    q_magnitude: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)
    output_dir: str = "output"
    csv_diagnostics: bool = True
    snapshots: bool = True


_SECTIONS = {
    "material": MaterialParams,
    "grid": GridSpec,
    "solver": SolverConfig,
    "scenario": ScenarioParams,
    "policy": ThresholdPolicy,
}
_FORMAT_KEYS = {"formats.csv_diagnostics": "csv_diagnostics", "formats.snapshots": "snapshots"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def known_keys() -> list[str]:
    keys = ["scenario", "output_dir", *_FORMAT_KEYS]
    for section, cls in _SECTIONS.items():
        keys += [f"{section}.{f.name}" for f in fields(cls) if not (section == "scenario" and f.name == "name")]
    return keys


def parse_entries(text: str) -> dict[str, str]:
    """Split config text into raw ``{key: value}`` strings."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        entries[key] = value
    return entries


def _convert(key, raw, default):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def build_config(entries: dict[str, str]) -> RunConfig:
    """Validate raw entries into a :class:`RunConfig`."""
    unknown = sorted(set(entries) - set(known_keys()))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")

    sections = {}
    for section, cls in _SECTIONS.items():
        defaults = cls.__dataclass_fields__
        values = {}
        for name, f in defaults.items():
            key = "scenario" if (section, name) == ("scenario", "name") else f"{section}.{name}"
            if key in entries:
                values[name] = _convert(key, entries[key], f.default)
        try:
            sections[section] = cls(**values)
        except (TypeError, ValueError) as exc:
            bad = next((k for k in values if k in str(exc)), None)
            prefix = f"{section}.{bad}" if bad else section
            raise ConfigError(f"{prefix}: {exc}") from None

    top = {}
    for key, attr in _FORMAT_KEYS.items():
        if key in entries:
            top[attr] = _convert(key, entries[key], True)
    if "output_dir" in entries:
        top["output_dir"] = entries["output_dir"]

    cfg = RunConfig(**sections, **top)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    s = cfg.scenario
    if s.name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown scenario {s.name!r}; choose one of {', '.join(SCENARIOS)}")
    if s.name == "spinodal_1d" and cfg.grid.ny:
        raise ConfigError("grid.ny: spinodal_1d runs on a 1D grid; leave grid.ny unset")
    try:
        cfg.grid.build() if s.name != "spinodal_2d" or cfg.grid.ny else replace(cfg.grid, ny=cfg.grid.nx).build()
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    checks = [
        ("amplitude", s.amplitude >= 0, ">= 0"),
        ("u_target", s.u_target > 0, "> 0"),
        ("theta_bar", s.theta_bar > 0, "> 0"),
        ("pulse_width", s.pulse_width > 0, "> 0"),
        ("pulse_amplitude", s.theta_bar + min(s.pulse_amplitude, 0.0) > 0, "> -theta_bar"),
        ("interface_width", s.interface_width > 0, "> 0"),
        ("band_hi", s.band_hi > s.band_lo, "> band_lo"),
        ("q_magnitude", s.q_magnitude >= 0, ">= 0"),
    ]
    for name, ok, rule in checks:
        if not ok:
            raise ConfigError(f"scenario.{name} must be {rule}")


def parse_config(text: str) -> RunConfig:
    return build_config(parse_entries(text))
