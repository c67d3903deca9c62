"""Run configuration: one JSON document drives every subcommand."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .group import DEFAULT_LATTICE_SCALE, LatticeSpec


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    group: float = 1e-14
    lattice: float = 1e-12
    norm_rel: float = 5e-3
    rep: float = 1e-6
    center: float = 1e-10
    inversion_rel: float = 1e-2
    admissible_ratio: float = 0.5
    admissible_ratio_tol: float = 1e-9
    tightness: float = 5e-2
    reduction: float = 100.0
    parseval: float = 1e-1
    leakage: float = 1e-10
    scale_consistency: float = 1e-8
    quadrature: float = 1e-8


@dataclass
class LatticeConfig:
    d: int = 1
    scale: float | None = None
    r: float | None = None

    def spec(self) -> LatticeSpec:
        if self.scale is not None and self.r is not None:
            if not math.isclose(self.scale**2, self.r, rel_tol=1e-12):
                raise ConfigError("lattice scale and r disagree (r must equal scale**2)")
        if self.r is not None:
            return LatticeSpec.from_r(self.d, self.r)
        return LatticeSpec(self.d, DEFAULT_LATTICE_SCALE if self.scale is None else self.scale)


@dataclass
class Seeds:
    convergence: int = 1000
    v0_corpus: int = 2000
    holdout: int = 3000
    span_corpus: int = 4000
    detail: int = 5000
    init: int = 7
    group: int = 11
    count: int = 16


@dataclass
class FramesConfig:
    """Grid and optimizer settings for the frame experiments.

    The default band range -1..3 holds the level-0 wavelet on bands -1..2,
    which is what the levels -2..2 need on top of the scaling bands 0..3.
    """

    k_min: int = -1
    k_max: int = 3
    Q: int = 16
    allow_truncation: bool = True
    steps: int = 30
    step_size: float = 0.1
    patience: int = 10
    half_translations: bool = True
    radii: list = field(default_factory=lambda: [6, 7, 8])


@dataclass
class RunConfig:
    d: int = 1
    k_min: int = 0
    k_max: int = 2
    Q: int = 16
    n_max: int = 64
    allow_truncation: bool = False
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    radius: int = 6
    j_range: list = field(default_factory=lambda: [-2, 2])
    seeds: Seeds = field(default_factory=Seeds)
    tolerances: Tolerances = field(default_factory=Tolerances)
    frames: FramesConfig = field(default_factory=FramesConfig)
    output: str = "out"

    def validate(self) -> "RunConfig":
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError("d must be a positive integer")
        if self.k_min > self.k_max:
            raise ConfigError("k_min must not exceed k_max")
        if self.Q < 4:
            raise ConfigError("Q must be at least 4")
        if self.n_max < 4:
            raise ConfigError("n_max must be at least 4")
        if self.k_max >= 0 and 4**self.k_max + 1 > self.n_max and not self.allow_truncation:
            raise ConfigError(
                f"rank 2^(2 k_max)+1 = {4**self.k_max + 1} exceeds n_max = {self.n_max}; "
                "set allow_truncation to permit capped ranks"
            )
        if self.radius < 1:
            raise ConfigError("radius must be at least 1")
        if len(self.j_range) != 2 or self.j_range[0] > self.j_range[1]:
            raise ConfigError("j_range must be [j_min, j_max] with j_min <= j_max")
        fr = self.frames
        if fr.k_min > fr.k_max or fr.Q < 4:
            raise ConfigError("invalid frames grid")
        if fr.k_max >= 0 and 4**fr.k_max + 1 > self.n_max and not fr.allow_truncation:
            raise ConfigError("frames grid rank exceeds n_max with truncation disallowed")
        if self.seeds.count < 1:
            raise ConfigError("test corpora need at least one field")
        self.lattice.spec()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_NESTED = {"lattice": LatticeConfig, "seeds": Seeds, "tolerances": Tolerances, "frames": FramesConfig}


def _build(cls, data: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get(key) if cls is RunConfig else None
        kwargs[key] = _build(sub, value) if sub is not None else value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    try:
        return _build(RunConfig, data).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_json(obj, path):
    """Deterministic JSON: sorted keys, repr floats, trailing newline."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
