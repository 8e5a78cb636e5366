"""Scenario configuration files.

Flat ``key = value`` lines with dotted section names; ``#`` starts a comment.
Lists are comma separated, per-year beta pairs are separated by ``;``::

    name = homogeneous
    seed = 0
    horizon = 3
    budget.per_authority = 100000
    budget.ratio = 1, 1
    demand.ratio = 1, 1
    demand.bounds.intra1 = 20, 200
    beta.schedule = 0.5,0.5; 0.5,0.5; 0.5,0.5
    sweep.grid = 0, 0.1, 0.3, 0.5, 0.7, 0.9
    weights = 0.1, 1, 1
    model.mu = 0.1
    service.kappa = 500
"""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .demand import DEFAULT_BOUNDS, TRIP_TYPES
from .errors import ConfigError
from .params import ServiceParams, Weights
from .scenario import ScenarioConfig

_SERVICE_FIELDS = {f.name: f.type for f in fields(ServiceParams)}


def _floats(text: str, key: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{key}: expected {n} values, got {len(vals)}")
    return vals


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def parse_pairs(text: str, key: str = "beta.schedule") -> tuple[tuple[float, float], ...]:
    return tuple(_floats(part, key, 2) for part in text.split(";") if part.strip())


def parse_config(text: str) -> ScenarioConfig:
    kw: dict = {}
    service: dict = {}
    bounds = dict(DEFAULT_BOUNDS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key == "name":
            kw["name"] = value
        elif key == "seed":
            kw["seed"] = _int(value, key)
        elif key == "horizon":
            kw["horizon"] = _int(value, key)
        elif key == "network":
            kw["network"] = value
        elif key == "budget.per_authority":
            kw["budget"] = _floats(value, key, 1)[0]
        elif key == "budget.ratio":
            kw["budget_ratio"] = _floats(value, key, 2)
        elif key == "demand.ratio":
            kw["demand_ratio"] = _floats(value, key, 2)
        elif key == "demand.growth":
            kw["growth_rate"] = _floats(value, key, 1)[0]
        elif key.startswith("demand.bounds."):
            t = key.rsplit(".", 1)[1]
            if t not in TRIP_TYPES:
                raise ConfigError(f"{key}: unknown trip type {t!r}")
            lo, hi = _floats(value, key, 2)
            bounds[t] = (int(lo), int(hi))
        elif key == "beta.schedule":
            kw["betas"] = parse_pairs(value)
        elif key == "sweep.grid":
            kw["beta_grid"] = _floats(value, key)
        elif key == "weights":
            kw["weights"] = parse_weights(value)
        elif key == "model.mu":
            kw["mu"] = _floats(value, key, 1)[0]
        elif key == "solver.method":
            if value not in ("auto", "exact", "local"):
                raise ConfigError(f"{key}: expected auto, exact or local")
            kw["method"] = value
        elif key == "solver.restarts":
            kw["restarts"] = _int(value, key)
        elif key.startswith("service."):
            name = key.split(".", 1)[1]
            if name not in _SERVICE_FIELDS:
                raise ConfigError(f"{key}: unknown service parameter")
            v = _floats(value, key, 1)[0]
            service[name] = int(v) if name in ("s_max", "kappa") else v
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    kw["bounds"] = bounds
    if service:
        kw["params"] = ServiceParams(**service)
    try:
        return ScenarioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_weights(text: str) -> Weights:
    w = _floats(text, "weights", 3)
    try:
        return Weights(*w)
    except ValueError as exc:
        raise ConfigError(f"weights: {exc}") from None


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def format_config(cfg: ScenarioConfig) -> str:
    g = lambda vals: ", ".join(repr(float(v)) for v in vals)  # noqa: E731
    lines = [f"name = {cfg.name}", f"seed = {cfg.seed}", f"horizon = {cfg.horizon}",
             f"budget.per_authority = {cfg.budget!r}", f"budget.ratio = {g(cfg.budget_ratio)}",
             f"demand.growth = {cfg.growth_rate!r}"]
    if cfg.demand_ratio is not None:
        lines.append(f"demand.ratio = {g(cfg.demand_ratio)}")
    lines += [f"demand.bounds.{t} = {lo}, {hi}" for t, (lo, hi) in cfg.bounds.items()]
    if cfg.betas is not None:
        lines.append("beta.schedule = " + "; ".join(f"{a!r},{b!r}" for a, b in cfg.betas))
    lines += [f"sweep.grid = {g(cfg.beta_grid)}", f"weights = {g(cfg.weights.as_array())}",
              f"model.mu = {cfg.mu!r}", f"solver.method = {cfg.method}",
              f"solver.restarts = {cfg.restarts}"]
    if cfg.network:
        lines.append(f"network = {cfg.network}")
    for f in fields(ServiceParams):
        lines.append(f"service.{f.name} = {getattr(cfg.params, f.name)!r}")
    return "\n".join(lines) + "\n"
