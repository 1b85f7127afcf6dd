"""Flat ``key = value`` run configuration with command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import ConfigError, ModelError
from .model import (
    DeltaAtZero,
    GaussianPdf,
    GridSpec,
    OneWayMutation,
    PureDrift,
    Selection,
    TimeSpec,
    TwoWayMutation,
    UniformPdf,
)
from .scheme import SchemeVariant

MODELS = ("pure", "selection", "oneway", "twoway")
INITS = ("gaussian", "delta0", "uniform")


def _floats(v: str) -> list[float]:
    return [_float(s) for s in v.split(",") if s.strip()]


def _ints(v: str) -> list[int]:
    return [int(s) for s in v.split(",") if s.strip()]


def _float(v: str) -> float:
    v = v.strip()
    if "/" in v:
        num, den = v.split("/", 1)
        return float(num) / float(den)
    return float(v)


def _opt_float(v: str) -> float | None:
    return None if v.strip().lower() in ("", "auto", "none") else _float(v)


def _opt_int(v: str) -> int | None:
    return None if v.strip().lower() in ("", "auto", "none") else int(v)


@dataclass
class RunConfig:
    model: str = "pure"
    eta: float | None = None
    beta: float | None = None
    gamma: float | None = None
    mu: float | None = None

    K: int = 100
    tau: float = 1e-4
    T: float = 36.0
    init: str = "gaussian"
    x0: float = 0.7
    sigma: float = 0.01
    sampling: str = "cell"
    scheme: str = "rfdm"
    convection: str = "auto"
    observe_stride: int | None = None
    snapshots: list[float] = field(default_factory=list)

    # sweeps
    grids: list[int] = field(default_factory=list)
    taus: list[float] = field(default_factory=list)
    variants: list[str] = field(default_factory=lambda: ["rfdm", "sfdm"])
    x0_list: list[float] = field(default_factory=list)
    jobs: int = 1

    # convergence
    ref_K: int = 20000
    ref_tau: float = 1 / 20000
    window: list[float] = field(default_factory=lambda: [0.3, 0.7])
    eval_offset_steps: int = 0

    # fixation
    a_inf: float | None = None
    b_inf: float | None = None
    K_star: int = 10000

    # oracle
    pop_size: int = 200
    replicates: int = 20000
    generations: int | None = None
    init_freq: float | None = None
    seed: int = 20240101

    _PARSERS = {
        "eta": _opt_float, "beta": _opt_float, "gamma": _opt_float, "mu": _opt_float,
        "K": int, "tau": _float, "T": _float, "x0": _float, "sigma": _float,
        "observe_stride": _opt_int, "snapshots": _floats, "grids": _ints,
        "taus": _floats, "x0_list": _floats, "jobs": int, "ref_K": int,
        "ref_tau": _float, "window": _floats, "eval_offset_steps": int,
        "a_inf": _opt_float, "b_inf": _opt_float, "K_star": int,
        "pop_size": int, "replicates": int, "generations": _opt_int,
        "init_freq": _opt_float, "seed": int,
        "variants": lambda v: [s.strip() for s in v.split(",") if s.strip()],
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def set(self, key: str, value: str) -> None:
        key = key.strip()
        if key not in self.keys():
            raise ConfigError(f"unknown config key {key!r}")
        parse = self._PARSERS.get(key, lambda v: v.strip())
        try:
            setattr(self, key, parse(value))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None

    # -- validation and builders ------------------------------------------

    def validate(self) -> RunConfig:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if self.scheme not in ("rfdm", "sfdm"):
            raise ConfigError(f"scheme must be rfdm or sfdm, got {self.scheme!r}")
        if self.convection not in ("auto", "upwind", "downwind"):
            raise ConfigError(f"convection must be auto, upwind or downwind, got {self.convection!r}")
        for v in self.variants:
            if v not in ("rfdm", "sfdm"):
                raise ConfigError(f"unknown variant {v!r}")
        if self.K < 4 or any(k < 4 for k in self.grids) or self.ref_K < 4:
            raise ConfigError("grids need K >= 4")
        if not (self.tau > 0 and self.T >= 0 and self.ref_tau > 0):
            raise ConfigError("need tau > 0 and T >= 0")
        if any(t <= 0 for t in self.taus):
            raise ConfigError("taus must be positive")
        if len(self.window) != 2 or not 0 <= self.window[0] < self.window[1] <= 1:
            raise ConfigError("window must be two increasing numbers in [0, 1]")
        if self.observe_stride is not None and self.observe_stride < 1:
            raise ConfigError("observe_stride must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.drift_model()
            self.initial_condition()
            TimeSpec(self.tau, self.T)
        except ModelError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def drift_model(self):
        need = {"selection": ("eta", "beta"), "oneway": ("gamma",), "twoway": ("gamma", "mu")}
        missing = [k for k in need.get(self.model, ()) if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"model {self.model} needs {', '.join(missing)}")
        if self.model == "pure":
            return PureDrift()
        if self.model == "selection":
            return Selection(self.eta, self.beta)
        if self.model == "oneway":
            return OneWayMutation(self.gamma)
        return TwoWayMutation(self.gamma, self.mu)

    def initial_condition(self, x0: float | None = None):
        if self.init == "gaussian":
            return GaussianPdf(self.x0 if x0 is None else x0, self.sigma, self.sampling)
        if self.init == "delta0":
            return DeltaAtZero()
        return UniformPdf()

    def variant(self) -> SchemeVariant:
        return SchemeVariant(self.scheme)

    def convection_rule(self) -> str | None:
        return None if self.convection == "auto" else self.convection

    def grid(self) -> GridSpec:
        return GridSpec(self.K)

    def time(self) -> TimeSpec:
        return TimeSpec(self.tau, self.T)

    def as_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.keys()}

    def digest(self, keys: Iterable[str] | None = None, **extra: Any) -> str:
        """Content hash of the selected fields (all fields by default)."""
        d = self.as_dict()
        if keys is not None:
            d = {k: d[k] for k in keys}
        d.update(extra)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def parse_config_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {raw!r}")
        k, v = line.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return pairs


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        for k, v in parse_config_text(text):
            cfg.set(k, v)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k, v)
    return cfg.validate()
