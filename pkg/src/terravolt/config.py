"""Flat ``key = value`` configuration files.

Keys are ``<section>.<field>`` where the section selects a parameter record::

    # comments and blank lines are ignored
    rover.mass = 50
    motor.eta_regen = 3.33
    lattice.max_expansions = 20000
    heuristic.mode = calibrated      # calibrated | reference | zero | explicit
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

from .estimators import REFERENCE_RAMP_PARAMS, RampModelParams, default_ramp_calibration
from .nn.train import TrainConfig
from .planner import LatticeConfig
from .powertrain import MotorParams, RoverParams
from .swath import SafetyThresholds

HEURISTIC_MODES = ("calibrated", "reference", "zero", "explicit")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    rover: RoverParams = field(default_factory=RoverParams)
    safety: SafetyThresholds = field(default_factory=SafetyThresholds)
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    ramp: RampModelParams | None = None  # None: fit to the simulator
    heuristic: RampModelParams | None = None  # used when heuristic_mode is "explicit"
    heuristic_mode: str = "calibrated"
    heuristic_margin: float = 0.05

    def ramp_params(self) -> RampModelParams:
        """RampModel constants: explicit ones if configured, else fitted to simulated ramps."""
        if self.ramp is not None:
            return self.ramp
        return default_ramp_calibration(self.rover, self.heuristic_margin)[0]

    def heuristic_params(self) -> RampModelParams | None:
        if self.heuristic_mode == "zero":
            return None
        if self.heuristic_mode == "reference":
            return REFERENCE_RAMP_PARAMS
        if self.heuristic_mode == "explicit":
            return self.heuristic
        return default_ramp_calibration(self.rover, self.heuristic_margin)[1]


_SECTIONS = {
    "rover": RoverParams,
    "motor": MotorParams,
    "safety": SafetyThresholds,
    "lattice": LatticeConfig,
    "train": TrainConfig,
    "ramp": RampModelParams,
    "heuristic": RampModelParams,
}


def _convert(cls, name: str, raw: str, where: str):
    types = {f.name: f.type for f in fields(cls) if f.name != "motors"}
    if name not in types:
        raise ConfigError(f"{where}: unknown key {name!r} for {cls.__name__}")
    try:
        return int(raw) if types[name] in ("int", int) else float(raw)
    except ValueError:
        raise ConfigError(f"{where}: {name} expects a number, got {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> Config:
    values: dict[str, dict] = {k: {} for k in _SECTIONS}
    mode, margin = "calibrated", 0.05
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section == "heuristic" and name == "mode":
            if raw not in HEURISTIC_MODES:
                raise ConfigError(f"{where}: heuristic.mode must be one of {HEURISTIC_MODES}")
            mode = raw
            continue
        if section == "heuristic" and name == "margin":
            try:
                margin = float(raw)
            except ValueError:
                raise ConfigError(f"{where}: heuristic.margin expects a number, got {raw!r}") from None
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"{where}: unknown section {section!r}")
        values[section][name] = _convert(_SECTIONS[section], name, raw, where)
    try:
        motors = MotorParams(**values["motor"])
        cfg = Config(
            rover=RoverParams(**values["rover"], motors=motors),
            safety=SafetyThresholds(**values["safety"]),
            lattice=LatticeConfig(**values["lattice"]),
            train=TrainConfig(**values["train"]),
            ramp=_ramp(values["ramp"]),
            heuristic=_ramp(values["heuristic"]),
            heuristic_mode=mode,
            heuristic_margin=margin,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if mode == "explicit" and cfg.heuristic is None:
        raise ConfigError(f"{source}: heuristic.mode = explicit needs heuristic.g_up/g_down/beta")
    return cfg


def _ramp(vals: dict) -> RampModelParams | None:
    if not vals:
        return None
    return replace(REFERENCE_RAMP_PARAMS, **vals)


def load_config(path) -> Config:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, path)


def format_config(cfg: Config) -> str:
    """Inverse of :func:`parse_config` for every value that differs from the default."""
    lines = []

    def emit(section, obj, default):
        for f in fields(obj):
            if f.name == "motors":
                continue
            v = getattr(obj, f.name)
            if v != getattr(default, f.name):
                lines.append(f"{section}.{f.name} = {v!r}")

    emit("rover", cfg.rover, RoverParams())
    emit("motor", cfg.rover.motors, MotorParams())
    emit("safety", cfg.safety, SafetyThresholds())
    emit("lattice", cfg.lattice, LatticeConfig())
    emit("train", cfg.train, TrainConfig())
    if cfg.ramp is not None:
        for f in fields(cfg.ramp):
            lines.append(f"ramp.{f.name} = {getattr(cfg.ramp, f.name)!r}")
    if cfg.heuristic_mode != "calibrated":
        lines.append(f"heuristic.mode = {cfg.heuristic_mode}")
    if cfg.heuristic_margin != 0.05:
        lines.append(f"heuristic.margin = {cfg.heuristic_margin!r}")
    if cfg.heuristic is not None:
        for f in fields(cfg.heuristic):
            lines.append(f"heuristic.{f.name} = {getattr(cfg.heuristic, f.name)!r}")
    return "\n".join(lines) + ("\n" if lines else "")
