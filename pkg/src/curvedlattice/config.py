"""Run configuration: JSON schema, validation, and model construction.

A config file is a single JSON document with a ``schema`` version field.
Every CLI flag has a file equivalent; flags override file values, and the
``CURVEDLATTICE_OUTDIR`` environment variable overrides the file's output
directory (but not an explicit flag).  Configs are fully deterministic —
no seeds anywhere.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields

from . import expr as _expr
from .metric import MetricError, MetricModel

SCHEMA_VERSION = 1
OUTDIR_ENV = "CURVEDLATTICE_OUTDIR"

_AXES = ("real", "imaginary", "both")
_INITIAL_KINDS = ("plane_wave", "gaussian", "kick")


class ConfigError(Exception):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    schema: int = SCHEMA_VERSION
    family: str = "flat"
    q: float | None = None  # default pins the de Sitter horizon to the last site
    r: float = 0.0
    alpha: str | None = None
    beta: str | None = None
    params: dict = field(default_factory=dict)
    L: int = 500
    a: float = 1.0
    M: float = 0.0
    bc: str = "open"
    gamma: float | None = None
    e_min: float | None = None
    e_max: float | None = None
    n_e: int = 400
    axis: str = "real"
    times: list = field(default_factory=lambda: [0.0])
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 1e-3
    initial: dict = field(default_factory=lambda: {"kind": "plane_wave", "k": 0.0, "branch": 1})
    out_dir: str = "."
    tol: float = 1e-12
    heatmap: bool = False
    check_duality: bool = False
    snapshot_times: list = field(default_factory=list)

    @property
    def q_value(self) -> float:
        if self.q is not None:
            return float(self.q)
        return 1.0 / ((self.L - 1) * self.a)

    # -- construction --------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, apply_env: bool = True) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if apply_env and "out_dir" not in data:
            cfg.out_dir = os.environ.get(OUTDIR_ENV, cfg.out_dir)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path!r}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"malformed JSON in {path!r}: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be an object, got {type(data).__name__}")
        merged = dict(data)
        explicit_out = "out_dir" in merged
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
                if key == "out_dir":
                    explicit_out = True
        cfg = cls.from_dict(merged, apply_env=False)
        if not explicit_out:
            cfg.out_dir = os.environ.get(OUTDIR_ENV, cfg.out_dir)
        return cfg

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema} (expected {SCHEMA_VERSION})")
        if self.L < 2:
            raise ConfigError(f"L must be at least 2, got {self.L}")
        if self.a <= 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if self.bc not in ("open", "periodic"):
            raise ConfigError(f"bc must be open or periodic, got {self.bc!r}")
        if self.axis not in _AXES:
            raise ConfigError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.n_e < 2:
            raise ConfigError(f"n_e must be at least 2, got {self.n_e}")
        if (self.e_min is None) != (self.e_max is None):
            raise ConfigError("e_min and e_max must be given together")
        if self.e_min is not None and self.e_max <= self.e_min:
            raise ConfigError(f"need e_max > e_min, got [{self.e_min}, {self.e_max}]")
        if not self.times:
            raise ConfigError("times must not be empty")
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t1 <= self.t0:
            raise ConfigError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        kind = self.initial.get("kind")
        if kind not in _INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {_INITIAL_KINDS}, got {kind!r}")
        self.model()  # metric-module constraints before any computation

    # -- derived objects ---------------------------------------------------

    def model(self) -> MetricModel:
        try:
            if self.family == "custom":
                if not self.alpha or not self.beta:
                    raise ConfigError("custom metric needs both alpha and beta expressions")
                return MetricModel.custom(
                    self.alpha, self.beta, L=self.L, a=self.a, params=self.params
                )
            kwargs = {"L": self.L, "a": self.a}
            if self.family == "flat":
                return MetricModel.flat(**kwargs)
            if self.family == "rindler":
                return MetricModel.rindler(self.q_value, **kwargs)
            if self.family == "de_sitter":
                return MetricModel.de_sitter(self.q_value, **kwargs)
            if self.family == "anti_de_sitter":
                return MetricModel.anti_de_sitter(self.q_value, **kwargs)
            if self.family == "weyl":
                return MetricModel.weyl(self.q_value, self.r, **kwargs)
            if self.family == "linear_conformal":
                return MetricModel.linear_conformal(self.q_value, self.r, **kwargs)
            raise ConfigError(f"unknown metric family {self.family!r}")
        except (MetricError, _expr.ExpressionError) as err:
            raise ConfigError(str(err)) from err

    def initial_state(self):
        from . import evolve

        opts = dict(self.initial)
        kind = opts.pop("kind")
        try:
            if kind == "plane_wave":
                return evolve.plane_wave(
                    k=float(opts.get("k", 0.0)),
                    branch=int(opts.get("branch", 1)),
                    L=self.L,
                    a=self.a,
                )
            if kind == "gaussian":
                return evolve.gaussian_packet(
                    center=float(opts.get("center", (self.L - 1) * self.a / 2)),
                    width=float(opts.get("width", self.L * self.a / 20)),
                    k=float(opts.get("k", 0.0)),
                    L=self.L,
                    a=self.a,
                    branch=int(opts.get("branch", 1)),
                )
            return evolve.single_site(
                site=int(opts.get("site", self.L // 2)),
                L=self.L,
                component=int(opts.get("component", 0)),
            )
        except evolve.EvolveError as err:
            raise ConfigError(f"invalid initial state: {err}") from err
