"""Run configuration: defaults, strict parsing, canonical serialization.

Pure standard library on purpose: the command line front end imports this
before numpy, so thread environment variables can take effect first.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError

GAMMA_WINDOW = 0.6
GAMMA_CRITICAL = 0.3775


@dataclass(frozen=True)
class GridConfig:
    kappa: int = -1
    n: int = 200
    map_scale: float = 1.0


@dataclass(frozen=True)
class ContourConfig:
    m_nodes: int = 64
    margin: float = 0.5


@dataclass(frozen=True)
class NbodyConfig:
    n_particles: int = 2
    z_charge: float = 2.0
    n_plus: int = 20
    antisymmetrize: bool = False


@dataclass(frozen=True)
class TolerancesConfig:
    tol_gap: float = 1e-6
    tol_diag: float = 1e-9


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    gamma_list: tuple[float, ...] = (0.1, 0.2, 0.3)
    series_order: int = 12
    contour: ContourConfig = field(default_factory=ContourConfig)
    nbody: NbodyConfig = field(default_factory=NbodyConfig)
    tolerances: TolerancesConfig = field(default_factory=TolerancesConfig)
    output_dir: str = "out"
    seed: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_GROUPS = {
    "grid": (GridConfig, {"kappa": int, "n": int, "map_scale": float}),
    "contour": (ContourConfig, {"m_nodes": int, "margin": float}),
    "nbody": (NbodyConfig, {"n_particles": int, "z_charge": float,
                            "n_plus": int, "antisymmetrize": bool}),
    "tolerances": (TolerancesConfig, {"tol_gap": float, "tol_diag": float}),
}
_SCALARS = {"series_order": int, "output_dir": str, "seed": int}


def _coerce(key: str, value, want):
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"key '{key}' must be a boolean, got {value!r}")
        return value
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{key}' must be an integer, got {value!r}")
        return value
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{key}' must be a number, got {value!r}")
        return float(value)
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"key '{key}' must be a string, got {value!r}")
        return value
    raise AssertionError(want)


def config_from_dict(raw: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON, rejecting unknown or mistyped keys."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config document must be an object, got {type(raw).__name__}")
    known = set(_GROUPS) | set(_SCALARS) | {"gamma_list"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
    kwargs = {}
    for group, (cls, fields) in _GROUPS.items():
        if group not in raw:
            continue
        sub = raw[group]
        if not isinstance(sub, dict):
            raise ConfigError(f"key '{group}' must be an object")
        for key in sub:
            if key not in fields:
                raise ConfigError(f"unknown config key '{group}.{key}'")
        kwargs[group] = cls(**{k: _coerce(f"{group}.{k}", v, fields[k])
                               for k, v in sub.items()})
    for key, want in _SCALARS.items():
        if key in raw:
            kwargs[key] = _coerce(key, raw[key], want)
    if "gamma_list" in raw:
        gl = raw["gamma_list"]
        if not isinstance(gl, list):
            raise ConfigError("key 'gamma_list' must be a list of numbers")
        if not gl:
            raise ConfigError("gamma_list is empty: nothing to do")
        kwargs["gamma_list"] = tuple(_coerce("gamma_list", g, float) for g in gl)
    cfg = RunConfig(**kwargs)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    g = cfg.grid
    if g.kappa == 0:
        raise ConfigError("grid.kappa must be a nonzero integer")
    if g.n < 4:
        raise ConfigError(f"grid.n must be at least 4, got {g.n}")
    if g.map_scale <= 0:
        raise ConfigError(f"grid.map_scale must be positive, got {g.map_scale}")
    for gamma in cfg.gamma_list:
        if not 0.0 <= gamma < GAMMA_WINDOW:
            raise ConfigError(
                f"gamma {gamma} outside the supported window [0, {GAMMA_WINDOW})")
    if cfg.series_order < 1:
        raise ConfigError(f"series_order must be at least 1, got {cfg.series_order}")
    c = cfg.contour
    if c.m_nodes < 16 or c.m_nodes % 2:
        raise ConfigError(f"contour.m_nodes must be an even integer >= 16, got {c.m_nodes}")
    if c.margin <= 0:
        raise ConfigError(f"contour.margin must be positive, got {c.margin}")
    nb = cfg.nbody
    if nb.n_particles < 1:
        raise ConfigError(f"nbody.n_particles must be at least 1, got {nb.n_particles}")
    if nb.z_charge <= 0:
        raise ConfigError(f"nbody.z_charge must be positive, got {nb.z_charge}")
    if nb.n_plus < 1:
        raise ConfigError(f"nbody.n_plus must be at least 1, got {nb.n_plus}")
    if nb.antisymmetrize and nb.n_particles > nb.n_plus:
        raise ConfigError("nbody.antisymmetrize needs n_plus >= n_particles")
    t = cfg.tolerances
    if t.tol_gap <= 0 or t.tol_diag <= 0:
        raise ConfigError("tolerances must be positive")


def load_config(path: str | None) -> RunConfig:
    """Read a JSON config file; no path means all defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def require_convergence_window(cfg: RunConfig) -> None:
    """Convergence claims need couplings strictly below the critical value."""
    for gamma in cfg.gamma_list:
        if gamma >= GAMMA_CRITICAL:
            raise ConfigError(
                f"gamma {gamma} is not below the critical coupling {GAMMA_CRITICAL}; "
                f"the expansion is not guaranteed to converge there")


def config_digest(cfg: RunConfig) -> str:
    """Stable hash of the canonical JSON form, recorded in every output.

    The output directory is excluded: runs that differ only in where they
    write are the same computation and share a digest.
    """
    canon = cfg.to_dict()
    canon.pop("output_dir", None)
    payload = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
