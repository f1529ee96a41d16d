"""Flat key = value run configuration.

One dotted key per line, UTF-8, '#' comments; unknown keys are rejected so a
typo cannot silently fall back to a default.  The manifest written by every
run uses the same format with all values resolved, so it re-parses as a
config that reproduces the run bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .discretization import Grid, StateField, build_grid
from .evolution import SCHEME_KINDS, StepScheme
from .kernels import FAMILIES, Kernel, make_kernel

INIT_KINDS = ("constant", "step", "cosine", "gaussian", "file")


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


@dataclass
class SimConfig:
    kernel_family: str = "triangle"
    kernel_radius: float = 1.0
    kernel_epsilon: float = 1.0
    grid_n_local: int = 200
    grid_n_nonlocal: int = 200
    time_scheme: str = "implicit"
    time_dt: float | str = "auto"
    time_horizon: float = 5.0
    time_snapshot_stride: int = 0
    picard_window: float | str = "auto"
    picard_tol: float = 1e-10
    picard_max_iters: int = 60
    init_kind: str = "gaussian"
    init_value: float = 1.0
    init_u_value: float = 1.0
    init_v_value: float = 0.0
    init_amplitude: float = 1.0
    init_center: float = -0.5
    init_width: float = 0.15
    init_path: str = ""
    output_dir: str = "out"
    seed: int = 20260801


def _parse_auto_float(raw: str):
    return "auto" if raw == "auto" else float(raw)


# dotted key -> (attribute, parser)
_KEYS = {
    "kernel.family": ("kernel_family", str),
    "kernel.radius": ("kernel_radius", float),
    "kernel.epsilon": ("kernel_epsilon", float),
    "grid.n_local": ("grid_n_local", int),
    "grid.n_nonlocal": ("grid_n_nonlocal", int),
    "time.scheme": ("time_scheme", str),
    "time.dt": ("time_dt", _parse_auto_float),
    "time.horizon": ("time_horizon", float),
    "time.snapshot_stride": ("time_snapshot_stride", int),
    "picard.window": ("picard_window", _parse_auto_float),
    "picard.tol": ("picard_tol", float),
    "picard.max_iters": ("picard_max_iters", int),
    "init.kind": ("init_kind", str),
    "init.value": ("init_value", float),
    "init.u_value": ("init_u_value", float),
    "init.v_value": ("init_v_value", float),
    "init.amplitude": ("init_amplitude", float),
    "init.center": ("init_center", float),
    "init.width": ("init_width", float),
    "init.path": ("init_path", str),
    "output.dir": ("output_dir", str),
    "seed": ("seed", int),
}
_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def parse_config_text(text: str) -> SimConfig:
    cfg = SimConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        set_key(cfg, key, value, where=f"line {lineno}")
    validate(cfg)
    return cfg


def set_key(cfg: SimConfig, key: str, value: str, where: str = "override"):
    if key not in _KEYS:
        raise ConfigError(f"{where}: unknown config key {key!r}")
    attr, parser = _KEYS[key]
    try:
        setattr(cfg, attr, parser(value))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from exc


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def config_to_text(cfg: SimConfig) -> str:
    lines = []
    for f in fields(SimConfig):
        key = _ATTR_TO_KEY[f.name]
        lines.append(f"{key} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def validate(cfg: SimConfig):
    if cfg.kernel_family not in FAMILIES:
        raise ConfigError(f"kernel.family: unknown family {cfg.kernel_family!r}")
    if not cfg.kernel_radius > 0.0:
        raise ConfigError("kernel.radius: must be positive")
    if not cfg.kernel_epsilon > 0.0:
        raise ConfigError("kernel.epsilon: must be positive")
    if cfg.grid_n_local < 4 or cfg.grid_n_nonlocal < 4:
        raise ConfigError("grid.n_local / grid.n_nonlocal: need at least 4 cells each")
    if cfg.time_scheme not in SCHEME_KINDS:
        raise ConfigError(f"time.scheme: unknown scheme {cfg.time_scheme!r}")
    if cfg.time_dt != "auto" and not float(cfg.time_dt) > 0.0:
        raise ConfigError("time.dt: must be positive or 'auto'")
    if not cfg.time_horizon > 0.0:
        raise ConfigError("time.horizon: must be positive")
    if cfg.time_snapshot_stride < 0:
        raise ConfigError("time.snapshot_stride: must be nonnegative")
    if cfg.picard_window != "auto" and not float(cfg.picard_window) > 0.0:
        raise ConfigError("picard.window: must be positive or 'auto'")
    if not cfg.picard_tol > 0.0:
        raise ConfigError("picard.tol: must be positive")
    if cfg.picard_max_iters < 1:
        raise ConfigError("picard.max_iters: must be at least 1")
    if cfg.init_kind not in INIT_KINDS:
        raise ConfigError(f"init.kind: unknown kind {cfg.init_kind!r}")
    if cfg.init_kind == "gaussian" and not cfg.init_width > 0.0:
        raise ConfigError("init.width: must be positive")
    if cfg.init_kind == "file" and not cfg.init_path:
        raise ConfigError("init.path: required when init.kind = file")


def kernel_from(cfg: SimConfig) -> Kernel:
    return make_kernel(cfg.kernel_family, cfg.kernel_radius, cfg.kernel_epsilon)


def grid_from(cfg: SimConfig) -> Grid:
    return build_grid(cfg.grid_n_local, cfg.grid_n_nonlocal)


def scheme_from(cfg: SimConfig) -> StepScheme:
    return StepScheme(
        kind=cfg.time_scheme,
        dt=cfg.time_dt,
        picard_window=cfg.picard_window,
        picard_tol=cfg.picard_tol,
        picard_max_iters=cfg.picard_max_iters,
    )


def initial_profile(cfg: SimConfig):
    """The initial condition as a function of position (file kind excluded)."""
    kind = cfg.init_kind
    if kind == "constant":
        return lambda x: np.full_like(np.asarray(x, dtype=float), cfg.init_value)
    if kind == "step":
        return lambda x: np.where(
            np.asarray(x, dtype=float) <= 0.0, cfg.init_u_value, cfg.init_v_value
        )
    if kind == "cosine":
        return lambda x: cfg.init_amplitude * np.cos(
            np.pi * (np.asarray(x, dtype=float) + 1.0) / 2.0
        )
    if kind == "gaussian":
        return lambda x: cfg.init_amplitude * np.exp(
            -((np.asarray(x, dtype=float) - cfg.init_center) ** 2)
            / (2.0 * cfg.init_width**2)
        )
    raise ConfigError(f"init.kind: {kind!r} has no closed-form profile")


def initial_state(cfg: SimConfig, grid: Grid) -> StateField:
    if cfg.init_kind == "file":
        return _state_from_csv(cfg.init_path, grid)
    profile = initial_profile(cfg)
    return StateField(grid, profile(grid.positions))


def _state_from_csv(path, grid: Grid) -> StateField:
    try:
        rows = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"init.path: cannot read {path}: {exc}") from exc
    if not rows or rows[0].split(",")[:2] != ["x", "w"]:
        raise ConfigError(f"init.path: {path} is not a snapshot CSV (x,w,region)")
    data = [line.split(",") for line in rows[1:] if line.strip()]
    if len(data) != grid.size:
        raise ConfigError(
            f"init.path: snapshot has {len(data)} rows, grid needs {grid.size}"
        )
    x = np.array([float(r[0]) for r in data])
    w = np.array([float(r[1]) for r in data])
    if not np.allclose(x, grid.positions, atol=1e-9):
        raise ConfigError("init.path: snapshot positions do not match the grid")
    return StateField(grid, w)
