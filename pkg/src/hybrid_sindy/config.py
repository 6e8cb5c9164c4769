"""YAML experiment configs and their validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import SirCalendar, SirParams


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


SYSTEMS = ("hopper", "sir")


@dataclass
class SystemConfig:
    name: str
    kappa: float = 10.0
    form: str = "printed"
    dt: float = 0.033
    t_end: float = 5.0
    substeps: int = 10
    nu: float = 1 / 365
    d: float = 1 / 365
    N: float = 1000.0
    gamma: float = 0.2
    beta_hat: float = 9.336
    b: float = 0.8
    calendar: list = field(default_factory=lambda: [list(s) for s in SirCalendar().sessions])
    years: int = 5
    perturb: bool = True

    @property
    def record_dt(self) -> float:
        return self.dt if self.name == "hopper" else 1.0

    def sir_params(self) -> SirParams:
        cal = SirCalendar(tuple((float(a), float(b), bool(c)) for a, b, c in self.calendar))
        return SirParams(self.nu, self.d, self.N, self.gamma, self.beta_hat, self.b, cal)


@dataclass
class PipelineConfig:
    system: SystemConfig
    train_ics: list
    validation_ics: list
    K: int
    q: int = 10
    max_order: int = 2
    coordinates: list = field(default_factory=lambda: [0, 1])
    state_columns: list | None = None
    lambdas: list = field(default_factory=lambda: np.logspace(-4, 1, 30).tolist())
    threshold: float = 3.0
    max_iters: int = 20
    normalize: bool = False
    zscore: bool = False
    min_improvement: float = 0.1
    noise: float = 0.0
    noise_on_validation: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return config_digest(self.to_dict())


@dataclass
class SweepConfig:
    system: SystemConfig
    K_grid: list = field(default_factory=lambda: [10, 30, 100, 300, 1000])
    eps_grid: list = field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0])
    realizations: int = 5
    n_train_ics: int = 100
    y0_range: list = field(default_factory=lambda: [1.0, 1.5])
    v0_range: list = field(default_factory=lambda: [0.0, 0.5])
    max_order: int = 2
    lambdas: list = field(default_factory=lambda: np.logspace(-4, 1, 30).tolist())
    max_iters: int = 20
    regimes: list = field(default_factory=lambda: ["compression", "flight"])
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return config_digest(self.to_dict())


def config_digest(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()


# -- parsing ------------------------------------------------------------------

def _require(section: dict, key: str, path: str):
    if not isinstance(section, dict) or key not in section or section[key] is None:
        raise ConfigError(f"{path}.{key}" if path else key, "required field is missing")
    return section[key]


def _num(value, path: str, kind=float, positive=False, nonneg=False):
    try:
        if kind is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError
            out = int(float(value))
        else:
            out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {kind.__name__}, got {value!r}") from None
    if positive and not out > 0:
        raise ConfigError(path, f"must be positive, got {out}")
    if nonneg and out < 0:
        raise ConfigError(path, f"must be non-negative, got {out}")
    return out


def _ic_list(value, path: str, n: int) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "must be a non-empty list of initial conditions")
    out = []
    for i, ic in enumerate(value):
        if not isinstance(ic, list) or len(ic) != n:
            raise ConfigError(f"{path}[{i}]", f"expected a list of {n} numbers")
        out.append([_num(v, f"{path}[{i}]") for v in ic])
    return out


def _lambdas(value, path: str) -> list:
    if isinstance(value, dict):
        lo = _num(value.get("min", 1e-4), f"{path}.min", positive=True)
        hi = _num(value.get("max", 10.0), f"{path}.max", positive=True)
        count = _num(value.get("count", 30), f"{path}.count", int, positive=True)
        if hi < lo:
            raise ConfigError(path, "max must be >= min")
        return np.logspace(np.log10(lo), np.log10(hi), count).tolist()
    if isinstance(value, list) and value:
        return [_num(v, f"{path}[{i}]", nonneg=True) for i, v in enumerate(value)]
    raise ConfigError(path, "expected {min, max, count} or a non-empty list")


_SYSTEM_FLOATS = ("kappa", "dt", "t_end", "nu", "d", "N", "gamma", "beta_hat", "b")


def parse_system(raw: Any) -> SystemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("system", "required section is missing")
    name = _require(raw, "name", "system")
    if name not in SYSTEMS:
        raise ConfigError("system.name", f"must be one of {SYSTEMS}, got {name!r}")
    cfg = SystemConfig(name=name)
    for key in _SYSTEM_FLOATS:
        if key in raw:
            setattr(cfg, key, _num(raw[key], f"system.{key}", nonneg=True))
    for key in ("substeps", "years"):
        if key in raw:
            setattr(cfg, key, _num(raw[key], f"system.{key}", int, positive=True))
    if "form" in raw:
        if raw["form"] not in ("printed", "physical"):
            raise ConfigError("system.form", "must be 'printed' or 'physical'")
        cfg.form = raw["form"]
    if "perturb" in raw:
        cfg.perturb = bool(raw["perturb"])
    if "calendar" in raw:
        cfg.calendar = raw["calendar"]
    for key in ("kappa", "dt", "t_end", "N"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"system.{key}", "must be positive")
    if name == "sir":
        try:
            cfg.sir_params()
        except (ValueError, TypeError) as exc:
            raise ConfigError("system.calendar", str(exc)) from None
    return cfg


def parse_pipeline(raw: Any) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    system = parse_system(raw.get("system"))
    n = 2 if system.name == "hopper" else 3
    data = raw.get("data")
    if not isinstance(data, dict):
        raise ConfigError("data", "required section is missing")
    ident = raw.get("identify")
    if not isinstance(ident, dict):
        raise ConfigError("identify", "required section is missing")
    cfg = PipelineConfig(
        system=system,
        train_ics=_ic_list(_require(data, "train_ics", "data"), "data.train_ics", n),
        validation_ics=_ic_list(_require(data, "validation_ics", "data"), "data.validation_ics", n),
        K=_num(_require(ident, "K", "identify"), "identify.K", int, positive=True),
    )
    if system.name == "sir":
        for key in ("train_ics", "validation_ics"):
            for i, ic in enumerate(getattr(cfg, key)):
                if abs(sum(ic) - system.N) > 1e-9 * system.N:
                    raise ConfigError(f"data.{key}[{i}]", f"S + I + R = {sum(ic)} must equal N = {system.N}")
    if "noise" in data:
        cfg.noise = _num(data["noise"], "data.noise", nonneg=True)
    if "noise_on_validation" in data:
        cfg.noise_on_validation = bool(data["noise_on_validation"])
    for key, kind in (("q", int), ("max_order", int), ("max_iters", int),
                      ("threshold", float), ("min_improvement", float)):
        if key in ident:
            setattr(cfg, key, _num(ident[key], f"identify.{key}", kind, nonneg=True))
    if cfg.q < 1:
        raise ConfigError("identify.q", "must be >= 1")
    if cfg.max_iters < 1:
        raise ConfigError("identify.max_iters", "must be >= 1")
    if not cfg.threshold > 0:
        raise ConfigError("identify.threshold", "must be positive")
    for key in ("normalize", "zscore"):
        if key in ident:
            setattr(cfg, key, bool(ident[key]))
    if "lambdas" in ident:
        cfg.lambdas = _lambdas(ident["lambdas"], "identify.lambdas")
    if "state_columns" in ident and ident["state_columns"] is not None:
        cols = [_num(c, "identify.state_columns", int, nonneg=True) for c in ident["state_columns"]]
        if not cols or max(cols) >= n:
            raise ConfigError("identify.state_columns", f"indices must lie in [0, {n})")
        cfg.state_columns = cols
    width = 2 * len(cfg.state_columns or range(n))
    if "coordinates" in ident:
        cols = ident["coordinates"]
        if not isinstance(cols, list) or not cols:
            raise ConfigError("identify.coordinates", "must be a non-empty list")
        cfg.coordinates = [_num(c, "identify.coordinates", int, nonneg=True) for c in cols]
    if max(cfg.coordinates) >= width:
        raise ConfigError("identify.coordinates", f"indices must lie in [0, {width})")
    if "seed" in raw:
        cfg.seed = _num(raw["seed"], "seed", int, nonneg=True)
    return cfg


def parse_sweep(raw: Any) -> SweepConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    system = parse_system(raw.get("system"))
    if system.name != "hopper":
        raise ConfigError("system.name", "the noise sweep is defined for the hopper only")
    cfg = SweepConfig(system=system)
    sweep = raw.get("sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("sweep", "required section is missing")
    cfg.K_grid = [_num(v, "sweep.K_grid", int, positive=True) for v in _require(sweep, "K_grid", "sweep")]
    cfg.eps_grid = [_num(v, "sweep.eps_grid", nonneg=True) for v in _require(sweep, "eps_grid", "sweep")]
    if not cfg.K_grid or not cfg.eps_grid:
        raise ConfigError("sweep", "grids must be non-empty")
    for key, kind in (("realizations", int), ("n_train_ics", int), ("max_order", int), ("max_iters", int)):
        if key in sweep:
            setattr(cfg, key, _num(sweep[key], f"sweep.{key}", kind, positive=True))
    for key in ("y0_range", "v0_range"):
        if key in sweep:
            r = sweep[key]
            if not isinstance(r, list) or len(r) != 2:
                raise ConfigError(f"sweep.{key}", "expected [low, high]")
            setattr(cfg, key, [_num(v, f"sweep.{key}") for v in r])
    if "lambdas" in sweep:
        cfg.lambdas = _lambdas(sweep["lambdas"], "sweep.lambdas")
    if "regimes" in sweep:
        regs = sweep["regimes"]
        if not isinstance(regs, list) or not set(regs) <= {"compression", "flight"} or not regs:
            raise ConfigError("sweep.regimes", "must list 'compression' and/or 'flight'")
        cfg.regimes = list(regs)
    if "seed" in raw:
        cfg.seed = _num(raw["seed"], "seed", int, nonneg=True)
    return cfg


def load_yaml(path) -> dict:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark else "config"
        raise ConfigError(where, f"malformed YAML ({getattr(exc, 'problem', exc)})") from None
    return raw


def bundled_config(name: str) -> Path:
    """Path of a bundled config: ``hopper``, ``sir`` or ``sweep``."""
    return Path(str(resources.files("hybrid_sindy") / "configs" / f"{name}.yaml"))


def load_pipeline_config(path) -> PipelineConfig:
    return parse_pipeline(load_yaml(path))


def load_sweep_config(path) -> SweepConfig:
    return parse_sweep(load_yaml(path))
