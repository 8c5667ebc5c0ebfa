"""Plain key-value run configuration: dotted keys, `=`, `#` comments.

Unknown keys are hard errors, every omitted key has a documented default,
and serialize/parse round-trips exactly.  The builders at the bottom turn a
parsed config into live solver objects.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import PhysicsParams
from .errors import ConfigParseError, ConfigValidationError
from .grid import GridSpec
from .initial import make_blob, make_random, make_rossby, make_zonal
from .particles import ParticleSet
from .stepping import State, StepControl

_TWO_PI = 2.0 * math.pi

IC_KINDS = ("rossby", "random_spectrum", "gaussian_blob", "zonal", "file")


@dataclass
class ICSpec:
    """Initial-condition request; which fields matter depends on ``kind``."""

    kind: str = "rossby"
    sx: int = 1
    sy: int = 1
    sz: int = 1
    amplitude: float = 1.0
    slope: float = -3.0
    energy: float = 1.0
    seed: int = 0
    band_lo: int = 2
    band_hi: int = 0  # 0 means: pick the default band for the grid
    center: tuple[float, ...] = (math.pi, math.pi, math.pi)
    width: float = 0.5
    path: str = ""
    profile: tuple[float, ...] = ()


@dataclass
class TimeConfig:
    mode: str = "cfl"
    dt: float = 1e-3
    cfl_number: float = 0.5
    dt_min: float = 1e-9
    dt_max: float = 5e-2
    t_end: float = 1.0


@dataclass
class OutputConfig:
    directory: str = "qg3d-out"
    record_every: float = 0.01
    snapshot_every: float = 0.0
    checkpoint_every: float = 0.0


@dataclass
class ChecksConfig:
    conservation: bool = True
    growth: bool = True
    interpolation: bool = True
    tol_conservation: float = 1e-6
    tol_growth: float = 1e-3
    sobolev_m: int = 4


@dataclass
class LagrangianConfig:
    enabled: bool = False
    particles: int = 512
    z_levels: tuple[float, ...] = (0.0,)
    seed: int = 0
    sample_every: int = 10


@dataclass
class RunConfig:
    nx: int = 64
    ny: int = 64
    nz: int = 64
    lx: float = _TWO_PI
    ly: float = _TWO_PI
    lz: float = _TWO_PI
    beta: float = 1.0
    F: float = 1.0
    nu: float = 0.0
    ic: ICSpec = field(default_factory=ICSpec)
    time: TimeConfig = field(default_factory=TimeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    checks: ChecksConfig = field(default_factory=ChecksConfig)
    lagrangian: LagrangianConfig = field(default_factory=LagrangianConfig)
    max_particles: int = 4096


# key -> (section object attr path, value type); types: int, float, bool,
# str, floats (comma list)
_SCHEMA: dict[str, tuple[str, str]] = {
    "grid.nx": ("nx", "int"),
    "grid.ny": ("ny", "int"),
    "grid.nz": ("nz", "int"),
    "grid.lx": ("lx", "float"),
    "grid.ly": ("ly", "float"),
    "grid.lz": ("lz", "float"),
    "physics.beta": ("beta", "float"),
    "physics.F": ("F", "float"),
    "physics.nu": ("nu", "float"),
    "ic.kind": ("ic.kind", "str"),
    "ic.sx": ("ic.sx", "int"),
    "ic.sy": ("ic.sy", "int"),
    "ic.sz": ("ic.sz", "int"),
    "ic.amplitude": ("ic.amplitude", "float"),
    "ic.slope": ("ic.slope", "float"),
    "ic.energy": ("ic.energy", "float"),
    "ic.seed": ("ic.seed", "int"),
    "ic.band_lo": ("ic.band_lo", "int"),
    "ic.band_hi": ("ic.band_hi", "int"),
    "ic.center": ("ic.center", "floats"),
    "ic.width": ("ic.width", "float"),
    "ic.path": ("ic.path", "str"),
    "ic.profile": ("ic.profile", "floats"),
    "time.mode": ("time.mode", "str"),
    "time.dt": ("time.dt", "float"),
    "time.cfl_number": ("time.cfl_number", "float"),
    "time.dt_min": ("time.dt_min", "float"),
    "time.dt_max": ("time.dt_max", "float"),
    "time.t_end": ("time.t_end", "float"),
    "output.directory": ("output.directory", "str"),
    "output.record_every": ("output.record_every", "float"),
    "output.snapshot_every": ("output.snapshot_every", "float"),
    "output.checkpoint_every": ("output.checkpoint_every", "float"),
    "checks.conservation": ("checks.conservation", "bool"),
    "checks.growth": ("checks.growth", "bool"),
    "checks.interpolation": ("checks.interpolation", "bool"),
    "checks.tol_conservation": ("checks.tol_conservation", "float"),
    "checks.tol_growth": ("checks.tol_growth", "float"),
    "checks.sobolev_m": ("checks.sobolev_m", "int"),
    "lagrangian.enabled": ("lagrangian.enabled", "bool"),
    "lagrangian.particles": ("lagrangian.particles", "int"),
    "lagrangian.z_levels": ("lagrangian.z_levels", "floats"),
    "lagrangian.seed": ("lagrangian.seed", "int"),
    "lagrangian.sample_every": ("lagrangian.sample_every", "int"),
    "limits.max_particles": ("max_particles", "int"),
}


def _parse_value(kind: str, raw: str, key: str, lineno: int):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError("expected true or false")
        if kind == "floats":
            if raw == "":
                return ()
            return tuple(float(part.strip()) for part in raw.split(","))
        return raw
    except ValueError as exc:
        raise ConfigParseError(f"line {lineno}: bad value for {key!r}: {exc}") from None


def _set_path(cfg: RunConfig, path: str, value) -> None:
    parts = path.split(".")
    obj = cfg
    for part in parts[:-1]:
        obj = getattr(obj, part)
    setattr(obj, parts[-1], value)


def parse_config(text: str) -> RunConfig:
    """Parse config text, fill defaults, and validate every invariant."""
    cfg = RunConfig()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _SCHEMA:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
        path, kind = _SCHEMA[key]
        _set_path(cfg, path, _parse_value(kind, raw, key, lineno))
    validate_config(cfg)
    return cfg


def _get_path(cfg: RunConfig, path: str):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def serialize_config(cfg: RunConfig) -> str:
    """Full key set in schema order; parse(serialize(c)) == c."""
    lines = []
    for key, (path, kind) in _SCHEMA.items():
        value = _get_path(cfg, path)
        if kind == "bool":
            text = "true" if value else "false"
        elif kind == "floats":
            text = ", ".join(repr(float(v)) for v in value)
        elif kind == "float":
            text = repr(float(value))
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("ascii")).hexdigest()


def validate_config(cfg: RunConfig) -> None:
    def fail(message: str):
        raise ConfigValidationError(message)

    try:
        grid_spec(cfg)
    except ValueError as exc:
        fail(f"grid: {exc}")
    try:
        PhysicsParams(beta=cfg.beta, nu=cfg.nu, F=cfg.F)
    except ValueError as exc:
        fail(f"physics: {exc}")
    if cfg.ic.kind not in IC_KINDS:
        fail(f"ic.kind must be one of {IC_KINDS}, got {cfg.ic.kind!r}")
    if cfg.ic.kind == "gaussian_blob" and not cfg.ic.width > 0.0:
        fail("ic.width must be > 0")
    if cfg.ic.kind == "file" and not cfg.ic.path:
        fail("ic.kind = file needs ic.path")
    if len(cfg.ic.center) != 3:
        fail("ic.center needs exactly three components")
    try:
        step_control(cfg)
    except ValueError as exc:
        fail(f"time: {exc}")
    if not cfg.time.t_end > 0.0:
        fail("time.t_end must be > 0")
    if not cfg.output.record_every > 0.0:
        fail("output.record_every must be > 0")
    if cfg.output.snapshot_every < 0.0 or cfg.output.checkpoint_every < 0.0:
        fail("output intervals must be >= 0")
    if not cfg.checks.tol_conservation > 0.0 or not cfg.checks.tol_growth > 0.0:
        fail("check tolerances must be > 0")
    if cfg.checks.sobolev_m < 1:
        fail("checks.sobolev_m must be >= 1")
    if cfg.max_particles < 1:
        fail("limits.max_particles must be >= 1")
    if cfg.lagrangian.particles < 0:
        fail("lagrangian.particles must be >= 0")
    if cfg.lagrangian.particles > cfg.max_particles:
        fail(
            f"lagrangian.particles = {cfg.lagrangian.particles} exceeds "
            f"limits.max_particles = {cfg.max_particles}"
        )
    if cfg.lagrangian.enabled and not cfg.lagrangian.z_levels:
        fail("lagrangian.z_levels must not be empty when the tracer is on")
    if cfg.lagrangian.sample_every < 1:
        fail("lagrangian.sample_every must be >= 1")


# ---- builders --------------------------------------------------------------

def grid_spec(cfg: RunConfig) -> GridSpec:
    return GridSpec(
        nx=cfg.nx, ny=cfg.ny, nz=cfg.nz,
        lx=cfg.lx, ly=cfg.ly, lz=cfg.lz, F=cfg.F,
    )


def physics_params(cfg: RunConfig) -> PhysicsParams:
    return PhysicsParams(beta=cfg.beta, nu=cfg.nu, F=cfg.F)


def step_control(cfg: RunConfig) -> StepControl:
    return StepControl(
        mode=cfg.time.mode,
        dt_fixed=cfg.time.dt,
        cfl_number=cfg.time.cfl_number,
        dt_min=cfg.time.dt_min,
        dt_max=cfg.time.dt_max,
    )


def build_initial_state(cfg: RunConfig) -> State:
    """Construct the starting state the config asks for."""
    grid = grid_spec(cfg)
    params = physics_params(cfg)
    ic = cfg.ic
    if ic.kind == "rossby":
        state, _ = make_rossby(grid, cfg.F, cfg.beta, ic.sx, ic.sy, ic.sz, ic.amplitude)
        return State(state.q_hat, 0.0, params)
    if ic.kind == "random_spectrum":
        band = None if ic.band_hi <= 0 else (ic.band_lo, ic.band_hi)
        return make_random(grid, ic.slope, ic.energy, ic.seed, band=band, params=params)
    if ic.kind == "gaussian_blob":
        return make_blob(grid, tuple(ic.center), ic.width, ic.amplitude, params=params)
    if ic.kind == "zonal":
        profile = ic.profile
        if not profile:
            # default jet: one cosine across the box
            profile = tuple(
                ic.amplitude * math.cos(_TWO_PI * j / cfg.ny) for j in range(cfg.ny)
            )
        return make_zonal(grid, profile, params=params)
    if ic.kind == "file":
        from .snapshots import read_snapshot

        state = read_snapshot(ic.path)
        if state.grid != grid:
            raise ConfigValidationError(
                f"snapshot grid {state.grid} does not match configured grid {grid}"
            )
        return State(state.q_hat, state.t, params)
    raise ConfigValidationError(f"unhandled ic.kind {ic.kind!r}")


def build_particle_sets(cfg: RunConfig, grid: GridSpec) -> list[ParticleSet]:
    """Uniformly seeded particles, split evenly across the z-levels."""
    levels = cfg.lagrangian.z_levels
    count = cfg.lagrangian.particles
    per_level = count // len(levels) if levels else 0
    rng = np.random.default_rng(cfg.lagrangian.seed)
    sets = []
    for z in levels:
        xy = np.column_stack(
            (
                rng.uniform(0.0, grid.lx, size=per_level),
                rng.uniform(0.0, grid.ly, size=per_level),
            )
        )
        sets.append(ParticleSet.at_rest(grid, xy, z))
    return sets
