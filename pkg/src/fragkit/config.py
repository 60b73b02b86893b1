"""Experiment configuration: JSON files mapped onto dataclasses."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .measures import measure_from_config


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending entry (e.g. ``params.horizon``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class SimulateParams:
    measure: Any = "half_split"
    c_l: float = 0.0
    c_r: float = 0.0
    alpha: float = 0.0
    horizon: float = 1.0
    delta: float = 1e-4

    def validate(self):
        _measure(self.measure)
        _nonneg("c_l", self.c_l)
        _nonneg("c_r", self.c_r)
        _positive("horizon", self.horizon)
        _open_unit("delta", self.delta)
        if self.alpha < 0:
            raise ConfigError("params.alpha", "negative self-similarity index is not supported here")


@dataclass
class PaintboxParams:
    open_set: list = field(default_factory=lambda: [[0.0, 0.5], [0.5, 1.0]])
    n: int = 2

    def validate(self):
        _positive("n", self.n)
        if self.n > 5:
            raise ConfigError("params.n", "exact law limited to n <= 5")


@dataclass
class LaplaceParams:
    measure: Any = "half_split"
    c_l: float = 0.0
    c_r: float = 0.0
    t: float = 1.0
    q: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    delta: float = 1e-4
    lineage_only: bool = False

    def validate(self):
        _measure(self.measure)
        _nonneg("c_l", self.c_l)
        _nonneg("c_r", self.c_r)
        _positive("t", self.t)
        _open_unit("delta", self.delta)
        for i, q in enumerate(self.q):
            if q < 0:
                raise ConfigError(f"params.q[{i}]", "q must be nonnegative")


@dataclass
class ErosionParams:
    c_l: float = 0.3
    c_r: float = 0.7
    t: float = 1.0
    n: int = 10_000

    def validate(self):
        _nonneg("c_l", self.c_l)
        _nonneg("c_r", self.c_r)
        _nonneg("t", self.t)
        _positive("n", self.n)
        if self.c_l + self.c_r == 0:
            raise ConfigError("params.c_l", "erosion needs c_l + c_r > 0")


@dataclass
class TimeChangeParams:
    measure: Any = "half_split"
    horizon: float = 2.0
    alpha: float = 1.0

    def validate(self):
        _measure(self.measure)
        _positive("horizon", self.horizon)


@dataclass
class BrownianParams:
    m: int = 2 ** 16
    t: float = 1.0
    mode: str = "leftmost"  # leftmost | first_split | dimension
    min_share: float = 0.05
    eps: list = field(default_factory=lambda: [2.0 ** -k for k in range(6, 15)])

    def validate(self):
        if self.m < 2 or self.m & (self.m - 1):
            raise ConfigError("params.m", "grid size must be a power of two")
        _nonneg("t", self.t)
        if self.mode not in ("leftmost", "first_split", "dimension"):
            raise ConfigError("params.mode", f"unknown mode {self.mode!r}")


@dataclass
class RuelleParams:
    t0: float = 0.1
    times: list = field(default_factory=lambda: [0.25, 0.4])
    sticks: int = 1000
    resolution: float = 1e-4
    control: bool = True

    def validate(self):
        if len(self.times) != 2:
            raise ConfigError("params.times", "need exactly two later times t1, t2")
        if not 0 < self.t0 < self.times[0] < self.times[1] < 1:
            raise ConfigError("params.times", "need 0 < t0 < t1 < t2 < 1")
        _positive("sticks", self.sticks)


@dataclass
class DimensionParams:
    source: str = "cantor"  # cantor | stable | ap
    depth: int = 8
    eta: float = 1e-8
    m: int = 2 ** 20
    t: float = 1.0
    eps: list | None = None
    fit_range: list | None = None

    def validate(self):
        if self.source not in ("cantor", "stable", "ap"):
            raise ConfigError("params.source", f"unknown source {self.source!r}")


PARAMS = {
    "simulate": SimulateParams,
    "paintbox": PaintboxParams,
    "laplace": LaplaceParams,
    "erosion": ErosionParams,
    "timechange": TimeChangeParams,
    "brownian": BrownianParams,
    "ruelle": RuelleParams,
    "dimension": DimensionParams,
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    reps: int = 100
    workers: int = 1
    params: Any = None

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "reps": self.reps,
                "params": dataclasses.asdict(self.params)}


def _measure(v):
    try:
        measure_from_config(v)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError("params.measure", str(exc)) from exc


def _positive(name, v):
    if not v > 0:
        raise ConfigError(f"params.{name}", f"must be positive, got {v!r}")


def _nonneg(name, v):
    if not v >= 0:
        raise ConfigError(f"params.{name}", f"must be nonnegative, got {v!r}")


def _open_unit(name, v):
    if not 0 < v < 1:
        raise ConfigError(f"params.{name}", f"must lie in (0, 1), got {v!r}")


def parse_config(raw: dict, experiment: str | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    name = raw.get("experiment", experiment)
    if experiment is not None and name != experiment:
        raise ConfigError("experiment", f"config is for {name!r}, not {experiment!r}")
    if name not in PARAMS:
        raise ConfigError("experiment", f"unknown experiment {name!r}")
    unknown = set(raw) - {"experiment", "seed", "reps", "workers", "params"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level key")
    cls = PARAMS[name]
    fields = {f.name for f in dataclasses.fields(cls)}
    params = raw.get("params", {}) or {}
    for key in params:
        if key not in fields:
            raise ConfigError(f"params.{key}", f"unknown parameter for {name}")
    try:
        p = cls(**params)
    except TypeError as exc:
        raise ConfigError("params", str(exc)) from exc
    p.validate()
    cfg = ExperimentConfig(name, int(raw.get("seed", 0)), int(raw.get("reps", 100)), int(raw.get("workers", 1)), p)
    if cfg.reps < 1:
        raise ConfigError("reps", "must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be nonnegative")
    return cfg


def load_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return parse_config(raw, experiment)
