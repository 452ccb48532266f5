"""Experiment configuration: YAML in, validated dataclasses out."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np
import yaml

from .. import entropy_flux as ef
from ..errors import ConfigError
from ..shock_profile import rankine_hugoniot

PERTURBATION_SHAPES = ("none", "gaussian", "gaussian_dipole", "random_bumps")


@dataclass
class FluxConfig:
    name: str = "burgers"
    transverse: str = "zero"


@dataclass
class EntropyConfig:
    name: str = "paper"
    b: float = 1.0


@dataclass
class ShockConfig:
    u_minus: float = 1.0
    eps: float = 0.1
    lam: float = 0.4


@dataclass
class GeometryConfig:
    L: float = 200.0
    n_xi: int = 2048
    d: int = 1
    n_t: int = 8


@dataclass
class PerturbationConfig:
    shape: str = "gaussian"
    amplitude: float = 0.5
    width: float = 20.0  # u += A exp(-(xi - center)^2 / width) ...
    center: float = 0.0
    modes: list = field(default_factory=lambda: [1])  # transverse mode per periodic axis
    count: int = 4  # random_bumps only


@dataclass
class RunConfig:
    t_end: float = 10.0
    cadence: float = 1.0
    scheme: str = "muscl"
    time: str = "ssprk2"
    cfl_advective: float = 0.4
    cfl_diffusive: float = 0.4


@dataclass
class ExperimentConfig:
    experiment: str = "profile"
    seed: int = 0
    out: str = "runs"
    flux: FluxConfig = field(default_factory=FluxConfig)
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    shock: ShockConfig = field(default_factory=ShockConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    run: RunConfig = field(default_factory=RunConfig)
    params: dict = field(default_factory=dict)  # experiment-specific, checked by the registry

    def to_dict(self) -> dict:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# parsing


def _build(cls, data, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        where = f"{path}.{name}" if path else name
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        else:
            kwargs[name] = _coerce(default, value, where)
    return cls(**kwargs)


def _coerce(default, value, where):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        return dict(value)
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, copy.deepcopy(data), "")


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {p} is not a section")
        node[parts[-1]] = _scalar(raw)
    return data


def _scalar(raw: str):
    # YAML 1.1 reads "1e-3" as a string; accept it as a number
    value = yaml.safe_load(raw)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    return value


def load_config(path=None, overrides=(), seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    data = apply_overrides(data, overrides)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["out"] = out
    cfg = config_from_dict(data)
    validate_config(cfg)
    return cfg


# ---------------------------------------------------------------------------
# validation


def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Raise ConfigError on invalid fields; return regime warnings."""
    errs = []
    if cfg.flux.name not in ef.FLUXES:
        errs.append(f"flux.name: unknown flux {cfg.flux.name!r} (choose from {', '.join(ef.FLUXES)})")
    if cfg.entropy.name not in ("paper", "quadratic"):
        errs.append(f"entropy.name: unknown entropy {cfg.entropy.name!r}")
    if cfg.entropy.b <= 0:
        errs.append("entropy.b: must be positive")
    s = cfg.shock
    if not s.eps > 0:
        errs.append("shock.eps: must be positive")
    if not 0 < s.lam < 1:
        errs.append("shock.lam: must lie in (0, 1)")
    g = cfg.geometry
    if g.L <= 0:
        errs.append("geometry.L: must be positive")
    if g.n_xi < 16:
        errs.append("geometry.n_xi: must be at least 16")
    if g.d not in (0, 1, 2):
        errs.append("geometry.d: must be 0, 1 or 2")
    if g.d > 0 and g.n_t < 2:
        errs.append("geometry.n_t: must be at least 2 when d > 0")
    p = cfg.perturbation
    if p.shape not in PERTURBATION_SHAPES:
        errs.append(f"perturbation.shape: unknown shape {p.shape!r}")
    if p.width <= 0:
        errs.append("perturbation.width: must be positive")
    if any((not isinstance(m, int)) or m < 0 for m in p.modes):
        errs.append("perturbation.modes: must be non-negative integers")
    if p.count < 1:
        errs.append("perturbation.count: must be at least 1")
    r = cfg.run
    if r.t_end < 0 or r.cadence < 0:
        errs.append("run.t_end / run.cadence: must be non-negative")
    if r.scheme not in ("muscl", "llf"):
        errs.append("run.scheme: must be 'muscl' or 'llf'")
    if r.time not in ("ssprk2", "imex"):
        errs.append("run.time: must be 'ssprk2' or 'imex'")
    for name in ("cfl_advective", "cfl_diffusive"):
        if not 0 < getattr(r, name) < 1:
            errs.append(f"run.{name}: must lie in (0, 1)")
    if errs:
        raise ConfigError("; ".join(errs))
    warnings = []
    if s.lam > 0.5:
        warnings.append(f"lambda = {s.lam:g} is large; contraction is expected only for small lambda")
    if s.eps / s.lam > 0.5:
        warnings.append(f"eps/lambda = {s.eps / s.lam:g} is large; contraction needs eps << lambda")
    return warnings


# ---------------------------------------------------------------------------
# derived objects


@dataclass
class Setup:
    sys: ef.EntropySystem
    u_minus: float
    u_plus: float
    speed_offset: float


def build_setup(cfg: ExperimentConfig) -> Setup:
    """Entropy system and end states; non-positive speeds are shifted.

    When the shock speed s <= 0 the flux is replaced by f(u) + c u with
    c = -2 s (or c = eps when s = 0), which moves the shock to speed
    s + c > 0 without changing the profile shape.
    """
    sys = ef.make_system(cfg.flux.name, cfg.entropy.name, b=cfg.entropy.b, transverse=cfg.flux.transverse)
    u_minus = cfg.shock.u_minus
    u_plus = u_minus - cfg.shock.eps
    s = rankine_hugoniot(sys.flux, u_minus, u_plus)
    c = 0.0
    if s <= 0:
        c = -2.0 * s if s < 0 else cfg.shock.eps
        sys = ef.EntropySystem(sys.flux.with_speed_offset(c), sys.entropy, sys.q1_base, sys.u_min, sys.u_max)
    return Setup(sys, u_minus, u_plus, c)


def _transverse_factor(grid, modes, phases=None):
    coords = grid.coords()[1:]
    fac = 1.0
    for ax, x in enumerate(coords):
        k = modes[ax] if ax < len(modes) else 0
        ph = 0.0 if phases is None else phases[ax]
        fac = fac * (1.0 + np.cos(2 * np.pi * k * x + ph)) / 2.0 if k else fac
    return fac


def perturbation(cfg: ExperimentConfig, grid) -> np.ndarray:
    """Initial perturbation on the grid (deterministic given the seed)."""
    p = cfg.perturbation
    xi = grid.coords()[0]
    if p.shape == "none":
        return np.zeros(grid.shape)
    if p.shape == "gaussian":
        v = p.amplitude * np.exp(-((xi - p.center) ** 2) / p.width) * _transverse_factor(grid, p.modes)
    elif p.shape == "gaussian_dipole":
        s = (xi - p.center) / math.sqrt(p.width)
        v = p.amplitude * s * np.exp(-(s**2)) * _transverse_factor(grid, p.modes)
    else:  # random_bumps
        rng = np.random.default_rng(cfg.seed)
        v = np.zeros(grid.shape)
        spread = 3.0 * math.sqrt(p.width)
        for _ in range(p.count):
            c = p.center + rng.uniform(-spread, spread)
            amp = p.amplitude * rng.uniform(-1.0, 1.0)
            phases = rng.uniform(0, 2 * np.pi, size=max(grid.d, 1))
            v = v + amp * np.exp(-((xi - c) ** 2) / p.width) * _transverse_factor(grid, p.modes, phases)
    return np.array(np.broadcast_to(v, grid.shape), dtype=float)
