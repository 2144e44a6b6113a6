"""Experiment configuration: INI-style files with strict key checking.

Example::

    [system]
    name = shared_frame2

    [initial]
    ic = riemann(0.05,0;0,0)
    seed = 3

    [grid]
    xmin = -10
    xmax = 10
    M = 512

    [run]
    eps = 1.0, 0.5, 0.25
    t_end = 2.0

Custom shared-frame systems set ``name = custom`` and supply ``frame``
(rows separated by ``;``), ``lambda`` and ``mu`` (one coefficient list per
family, low to high degree, families separated by ``;``), ``box`` and the
constants ``c0`` and ``c1``.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .cutoffs import CutoffParams
from .errors import ConfigError
from .systems import SystemModel, builtin_system, shared_frame_system


@dataclass(frozen=True)
class CustomSystemSpec:
    frame: tuple
    lambda_coeffs: tuple
    mu_coeffs: tuple
    box: tuple
    c0: float
    c1: float

    def build(self, name: str = "custom") -> SystemModel:
        return shared_frame_system(
            name,
            np.array(self.frame, dtype=float),
            [list(c) for c in self.lambda_coeffs],
            [list(c) for c in self.mu_coeffs],
            state_box=np.array(self.box, dtype=float),
            c0_claimed=self.c0,
            c1_claimed=self.c1,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "burgers"
    custom: Optional[CustomSystemSpec] = None
    ic: str = "riemann(0;0.5)"
    seed: int = 0
    tv_guard: float = 0.5
    xmin: float = -10.0
    xmax: float = 10.0
    M: int = 512
    boundary: str = "extrapolate"
    eps: tuple = (1.0,)
    t_end: float = 1.0
    snapshots: Optional[tuple] = None
    snapshot_count: int = 10
    cfl_advective: float = 0.4
    cfl_parabolic: float = 0.4
    conservative: bool = False
    force: bool = False
    mode: str = "eigenbasis"
    delta1: float = 0.05
    N: int = 2
    epsilon_cut: float = 1e-12
    v_floor: float = 1e-12
    newton_tol: float = 1e-10
    out: str = "run"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        if not eps or any(e <= 0 for e in eps):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps list must be strictly decreasing")
        if self.snapshots is not None:
            snaps = tuple(sorted(float(t) for t in self.snapshots))
            object.__setattr__(self, "snapshots", snaps)
            if snaps and (snaps[0] < 0 or snaps[-1] > self.t_end):
                raise ConfigError("snapshot times must lie in [0, t_end]")
        if self.M < 8:
            raise ConfigError("M must be at least 8")
        if not self.xmax > self.xmin:
            raise ConfigError("xmax must exceed xmin")
        if self.mode not in ("eigenbasis", "travelling1"):
            raise ConfigError("mode must be eigenbasis or travelling1")
        if self.boundary not in ("extrapolate", "periodic"):
            raise ConfigError("boundary must be extrapolate or periodic")
        if self.system == "custom" and self.custom is None:
            raise ConfigError("custom system needs frame, lambda, mu, box, c0 and c1")

    @property
    def cutoffs(self) -> CutoffParams:
        return CutoffParams(self.delta1, self.N, self.epsilon_cut, self.v_floor, self.newton_tol)

    @property
    def snapshot_times(self) -> tuple:
        if self.snapshots is not None:
            return self.snapshots
        return tuple(float(t) for t in np.linspace(0.0, self.t_end, self.snapshot_count + 1))

    def model(self) -> SystemModel:
        if self.system == "custom":
            return self.custom.build()
        return builtin_system(self.system)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps"] = list(self.eps)
        if self.snapshots is not None:
            d["snapshots"] = list(self.snapshots)
        if self.custom is not None:
            d["custom"] = {k: _listify(v) for k, v in asdict(self.custom).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        custom = d.pop("custom", None)
        if custom is not None:
            d["custom"] = CustomSystemSpec(**{k: _tuplify(v) for k, v in custom.items()})
        if d.get("snapshots") is not None:
            d["snapshots"] = tuple(d["snapshots"])
        d["eps"] = tuple(d.get("eps", (1.0,)))
        return cls(**d)

    def updated(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def _listify(v):
    if isinstance(v, tuple):
        return [_listify(x) for x in v]
    return v


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


# -- INI parsing ---------------------------------------------------------------


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def _nested(text: str) -> tuple:
    return tuple(_floats(part) for part in text.split(";") if part.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (config attribute, parser)
SCHEMA = {
    "system": {
        "name": ("system", str),
        "frame": ("frame", _nested),
        "lambda": ("lambda_coeffs", _nested),
        "mu": ("mu_coeffs", _nested),
        "box": ("box", _nested),
        "c0": ("c0", float),
        "c1": ("c1", float),
    },
    "initial": {"ic": ("ic", str), "seed": ("seed", int), "tv_guard": ("tv_guard", float)},
    "grid": {"xmin": ("xmin", float), "xmax": ("xmax", float), "m": ("M", int), "boundary": ("boundary", str)},
    "run": {
        "eps": ("eps", _floats),
        "t_end": ("t_end", float),
        "snapshots": ("snapshots", _floats),
        "snapshot_count": ("snapshot_count", int),
        "cfl_advective": ("cfl_advective", float),
        "cfl_parabolic": ("cfl_parabolic", float),
        "conservative": ("conservative", _bool),
        "force": ("force", _bool),
    },
    "decomposition": {
        "mode": ("mode", str),
        "delta1": ("delta1", float),
        "n": ("N", int),
        "epsilon_cut": ("epsilon_cut", float),
        "v_floor": ("v_floor", float),
        "newton_tol": ("newton_tol", float),
    },
    "output": {"dir": ("out", str)},
}

CUSTOM_KEYS = ("frame", "lambda_coeffs", "mu_coeffs", "box", "c0", "c1")


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse INI text; unknown sections or keys raise :class:`ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values = {}
    custom = {}
    for section in parser.sections():
        schema = SCHEMA.get(section.lower())
        if schema is None:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            attr, conv = schema[key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from exc
            if attr in CUSTOM_KEYS:
                custom[attr] = value
            else:
                values[attr] = value
    if custom:
        missing = [k for k in CUSTOM_KEYS if k not in custom]
        if missing:
            raise ConfigError(f"custom system is missing {', '.join(missing)}")
        values["custom"] = CustomSystemSpec(**custom)
        values.setdefault("system", "custom")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
