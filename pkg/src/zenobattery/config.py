"""Run configuration: flat ``key=value`` files, named presets and overrides.

Wire units: frequencies in units of omega0 (omega0 = 1), phase durations and
the scan window in ``g t / pi``, inter-pulse intervals in ``(1000/pi) g tau``.

A schedule is written as comma-separated phases, ``free:<duration>`` or
``pulsed:<duration>:<tau>``, e.g. ``free:0.5, pulsed:0.5:1, free:0.5``.
"""
from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Any, Callable, Mapping

from .engine import Phase, PulseSchedule
from .errors import ConfigError, ScheduleError
from .model import ModelParams

SQRT2 = math.sqrt(2.0)


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _parse_int(text: str) -> int:
    return int(text)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _parse_omega1(text: str) -> float | str:
    if text.strip().lower() in ("resonant", "bare"):
        return text.strip().lower()
    return _parse_float(text)


def _parse_schedule(text: str) -> str:
    if not text.strip():
        return ""
    parse_schedule(text, g=0.01)
    return ",".join(part.strip() for part in text.split(","))


def _parse_str(text: str) -> str:
    return text.strip()


# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "scenario": (_parse_str, ""),
    "omega1": (_parse_omega1, "resonant"),
    "g": (_parse_float, 0.01),
    "gamma": (_parse_float, 1.0),
    "mu": (_parse_float, 1.0),
    "schedule": (_parse_schedule, ""),
    "pulse_stride": (_parse_int, 1),
    "free_dt": (_parse_float, 0.005),
    "fit": (_parse_bool, False),
    "grid_start": (_parse_float, 0.5),
    "grid_stop": (_parse_float, 50.0),
    "grid_step": (_parse_float, 0.25),
    "grid_refine": (_parse_int, 5),
    "window": (_parse_float, 150.0),
    "n_max": (_parse_int, 3),
    "out": (_parse_str, ""),
    "jobs": (_parse_int, 0),
}

_FIG2 = {"omega1": 1.0 / SQRT2, "g": 0.01, "gamma": 1.0, "mu": 1.0}
_SCAN = {"omega1": "resonant", "g": 0.01, "grid_start": 0.5, "grid_stop": 50.0,
         "grid_step": 0.25, "grid_refine": 5, "window": 150.0}

PRESETS: dict[str, dict[str, Any]] = {
    "fig2a": {**_FIG2, "omega1": SQRT2, "schedule": "free:1"},
    "fig2b": {**_FIG2, "schedule": "pulsed:0.5:1"},
    "fig2c": {**_FIG2, "schedule": "free:0.5,pulsed:0.5:1,free:0.5"},
    "fig2d": {**_FIG2, "schedule": "pulsed:2:10"},
    "figS1": {**_FIG2, "schedule": "pulsed:1:1", "fit": True},
    "figS2": {**_FIG2, "schedule": "pulsed:150:84", "fit": True},
    "fig3": {**_SCAN, "gamma": 1.0, "mu": 1.0, "n_max": 3},
    "figS3": {**_SCAN, "gamma": 0.7, "mu": 1.0, "n_max": 3},
    "figS4": {**_SCAN, "gamma": 1.0, "mu": 2.0, "n_max": 3},
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; ``values`` holds every schema key."""

    values: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def params(self) -> ModelParams:
        omega1 = self.values["omega1"]
        base = ModelParams(omega0=1.0, g=self["g"], gamma=self["gamma"], mu=self["mu"])
        if omega1 == "resonant":
            return base
        if omega1 == "bare":
            return base.replace(omega1=base.bare_resonant_omega1)
        return base.replace(omega1=float(omega1))

    def schedule(self) -> PulseSchedule:
        if not self["schedule"]:
            raise ConfigError("key 'schedule': no schedule given")
        return parse_schedule(self["schedule"], self["g"])

    def echo(self) -> list[str]:
        """``key=value`` lines in a fixed order, re-readable by :func:`load_file`."""
        return [f"{key}={format_value(self.values[key])}" for key in SCHEMA]


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_schedule(text: str, g: float) -> PulseSchedule:
    """Build a schedule from its wire form (durations in g t/pi, tau scaled)."""
    phases = []
    for raw in text.split(","):
        part = raw.strip()
        if not part:
            continue
        fields = [f.strip() for f in part.split(":")]
        try:
            if fields[0] == "free" and len(fields) == 2:
                phases.append(Phase.free(float(fields[1]) * math.pi / g))
            elif fields[0] == "pulsed" and len(fields) == 3:
                duration = float(fields[1]) * math.pi / g
                tau = float(fields[2]) * math.pi / (1000.0 * g)
                phases.append(Phase.pulsed(duration, tau))
            else:
                raise ConfigError(
                    f"key 'schedule': cannot parse phase {part!r}; "
                    "use free:<duration> or pulsed:<duration>:<tau>"
                )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"key 'schedule': phase {part!r}: {exc}") from exc
    try:
        return PulseSchedule(tuple(phases))
    except ScheduleError as exc:
        raise ConfigError(f"key 'schedule': {exc}") from exc


def coerce(key: str, text: str, where: str = "") -> Any:
    prefix = f"{where}: " if where else ""
    if key not in SCHEMA:
        raise ConfigError(f"{prefix}unknown key {key!r}")
    parser = SCHEMA[key][0]
    try:
        return parser(text)
    except ConfigError as exc:
        raise ConfigError(f"{prefix}{exc}") from exc
    except (ValueError, ScheduleError) as exc:
        raise ConfigError(f"{prefix}key {key!r}: invalid value {text!r} ({exc})") from exc


def load_file(path: str | Path) -> dict[str, Any]:
    """Read a ``key=value`` file; ``#`` starts a comment."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    values: dict[str, Any] = {}
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{path}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected key=value, got {body!r}")
        key, text = (s.strip() for s in body.split("=", 1))
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = coerce(key, text, where)
    return values


def resolve(
    scenario: str | None = None,
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Defaults, then the preset, then the config file, then explicit overrides."""
    file_values = dict(file_values or {})
    overrides = dict(overrides or {})
    name = scenario or overrides.get("scenario") or file_values.get("scenario") or ""
    values = {key: default for key, (_, default) in SCHEMA.items()}
    if name:
        if name not in PRESETS:
            raise ConfigError(f"key 'scenario': unknown scenario {name!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[name])
    values.update(file_values)
    values.update(overrides)
    values["scenario"] = name
    for key in ("pulse_stride", "grid_refine", "n_max"):
        if values[key] < 1:
            raise ConfigError(f"key {key!r}: must be at least 1, got {values[key]}")
    for key in ("g", "gamma", "mu", "window", "grid_step", "free_dt"):
        if not values[key] > 0:
            raise ConfigError(f"key {key!r}: must be positive, got {values[key]}")
    if isinstance(values["omega1"], float) and not values["omega1"] > 0:
        raise ConfigError(f"key 'omega1': must be positive, got {values['omega1']}")
    if values["grid_stop"] < values["grid_start"]:
        raise ConfigError(
            f"keys 'grid_start'/'grid_stop': empty grid ({values['grid_start']} > {values['grid_stop']})"
        )
    if values["jobs"] < 0:
        raise ConfigError("key 'jobs': must be non-negative")
    return RunConfig(values)
