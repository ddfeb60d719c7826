"""Run configuration: a flat YAML mapping, validated strictly."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, SpecError
from .games import BUILTINS, GameSpec, load_builtin, tensor_spec
from .simplex import SUM_TOL

COMMANDS = ("solve", "simulate", "match", "diagnose")
FIXTURE_PARAMS = ("alpha_start", "alpha_end", "form", "b")


@dataclass(frozen=True)
class RunConfig:
    command: str | None = None
    fixture: str | None = None
    alpha_start: float | None = None
    alpha_end: float | None = None
    form: str | None = None
    b: float | None = None
    payoffs: list | None = None
    u_values: list | None = None
    v_values: list | None = None
    T: float | None = None
    t0: float = 0.0
    p0: list | None = None
    n: int = 200
    m: int = 200
    N: int = 10_000
    seed: int = 0
    out: str = "out"
    value_knots: list | None = None
    perturbations: list = field(default_factory=lambda: ["eager", "delay", "mix:0.5"])
    opponents: list = field(default_factory=lambda: ["posterior_best_response", "uniform", "i_clairvoyant"])
    h_constant: float | None = None
    dual_half_width: float | None = None
    dual_resolution: int | None = None
    sigma: float = 3.0
    mc_floor: float = 1e-8
    closed_form_tol: float = 0.02
    perturb_slack: float = 0.01
    guarantee_slack: float = 0.02
    posterior_tol: float = 0.02
    in_H_min: float = 0.99
    jump_tol: float = 0.02
    conjugate_tol: float = 0.05

    def fixture_parameters(self) -> dict:
        return {k: getattr(self, k) for k in FIXTURE_PARAMS if getattr(self, k) is not None}

    def build_spec(self) -> GameSpec:
        try:
            if self.fixture is not None:
                return load_builtin(self.fixture, self.fixture_parameters())
            return tensor_spec(self.payoffs, self.u_values, self.v_values, self.T)
        except SpecError as exc:
            raise ConfigError(str(exc), field="fixture" if self.fixture is not None else "payoffs") from exc

    def as_dict(self) -> dict:
        """Settings that determine the results; the output directory is left out."""
        d = dataclasses.asdict(self)
        d.pop("out")
        return d

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INTS = {"n", "m", "N", "seed"}
_POSITIVE_INTS = {"n", "m", "N"}
_FLOATS = {"alpha_start", "alpha_end", "b", "T", "t0", "h_constant", "dual_half_width", "sigma", "mc_floor",
           "closed_form_tol", "perturb_slack", "guarantee_slack", "posterior_tol", "in_H_min", "jump_tol",
           "conjugate_tol"}
_LISTS = {"payoffs", "u_values", "v_values", "p0", "value_knots", "perturbations", "opponents"}


def parse_config(source, overrides: dict | None = None) -> RunConfig:
    """Parse a config file path, or inline text, into a validated RunConfig."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and ":" not in source):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    else:
        text = str(source)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", line=line, column=col) from None
    if root is None:
        raw = {}
    else:
        if not isinstance(root, yaml.MappingNode):
            raise ConfigError("config must be a mapping of keys to values", line=root.start_mark.line + 1, column=1)
        raw = {}
        for knode, _ in root.value:
            key = knode.value
            pos = dict(line=knode.start_mark.line + 1, column=knode.start_mark.column + 1)
            if key not in _FIELDS:
                raise ConfigError(f"unknown key {key!r}", field=key, **pos)
            if key in raw:
                raise ConfigError(f"duplicate key {key!r}", field=key, **pos)
            raw[key] = None
        raw = yaml.safe_load(text)
    raw.update(overrides or {})
    return validate(raw)


def _coerce(key, value):
    if value is None:
        return None
    if key in _INTS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}", field=key)
        if key in _POSITIVE_INTS and value < 1:
            raise ConfigError(f"{key} must be positive, got {value}", field=key)
        if key == "seed" and not 0 <= value < 2**64:
            raise ConfigError("seed must lie in [0, 2^64)", field=key)
        return value
    if key in _FLOATS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}", field=key)
        return float(value)
    if key in _LISTS:
        if not isinstance(value, list):
            raise ConfigError(f"{key} must be a bracketed list", field=key)
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}", field=key)
    return value


def validate(raw: dict) -> RunConfig:
    for key in raw:
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", field=key)
    vals = {k: _coerce(k, v) for k, v in raw.items()}
    vals = {k: v for k, v in vals.items() if v is not None}
    cfg = RunConfig(**vals)
    if cfg.command is not None and cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}; choose from {COMMANDS}", field="command")
    custom = cfg.payoffs is not None
    if (cfg.fixture is None) == (not custom):
        raise ConfigError("give exactly one of fixture or payoffs", field="fixture")
    if cfg.fixture is not None and cfg.fixture not in BUILTINS:
        raise ConfigError(f"unknown fixture {cfg.fixture!r}; choose from {sorted(BUILTINS)}", field="fixture")
    if custom and (cfg.u_values is None or cfg.v_values is None or cfg.T is None):
        raise ConfigError("custom payoffs need u_values, v_values and T", field="payoffs")
    spec = cfg.build_spec()
    if cfg.fixture is not None and cfg.T is not None and abs(cfg.T - spec.horizon) > 1e-12:
        raise ConfigError(f"fixture {cfg.fixture!r} has horizon {spec.horizon}, config says T={cfg.T}", field="T")
    if not 0.0 <= cfg.t0 < spec.horizon:
        raise ConfigError(f"t0 must lie in [0, {spec.horizon})", field="t0")
    if cfg.p0 is not None:
        try:
            p0 = np.asarray(cfg.p0, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("p0 must be a list of numbers", field="p0") from None
        if p0.shape != (spec.dim,):
            raise ConfigError(f"p0 needs {spec.dim} coordinates", field="p0")
        if p0.min() < 0 or abs(p0.sum() - 1.0) > SUM_TOL:
            raise ConfigError(f"p0 must be a probability vector, sums to {p0.sum():g}", field="p0")
    if cfg.n and cfg.m < 2:
        raise ConfigError("grid resolution m must be at least 2", field="m")
    for key in ("sigma", "mc_floor", "closed_form_tol", "perturb_slack", "guarantee_slack", "posterior_tol",
                "jump_tol", "conjugate_tol"):
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be nonnegative", field=key)
    for key in ("h_constant", "dual_half_width"):
        if getattr(cfg, key) is not None and getattr(cfg, key) <= 0:
            raise ConfigError(f"{key} must be positive", field=key)
    for item in cfg.perturbations:
        _perturbation(item)
    for item in cfg.opponents:
        _opponent(item)
    return cfg


def _perturbation(item: str):
    name, _, arg = str(item).partition(":")
    if name not in ("eager", "delay", "mix"):
        raise ConfigError(f"unknown perturbation {item!r}", field="perturbations")
    if name == "mix":
        try:
            theta = float(arg)
        except ValueError:
            raise ConfigError(f"mix needs a weight, e.g. mix:0.5, got {item!r}", field="perturbations") from None
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"mix weight must lie in [0, 1], got {theta}", field="perturbations")
        return name, theta
    return name, None


def _opponent(item: str):
    name, _, arg = str(item).partition(":")
    if name not in ("posterior_best_response", "constant", "uniform", "i_clairvoyant"):
        raise ConfigError(f"unknown opponent {item!r}", field="opponents")
    if name == "constant":
        try:
            return name, float(arg)
        except ValueError:
            raise ConfigError(f"constant needs an action, e.g. constant:-1, got {item!r}", field="opponents") from None
    return name, None
