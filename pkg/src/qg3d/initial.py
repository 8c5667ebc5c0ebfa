"""Initial conditions and manufactured-solution forcings.

Generators return full States (the scalar at t = 0 plus physics constants).
Everything produced here is zero-mean, which the elliptic inversion requires
on a periodic box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import Forcing, PhysicsParams, jacobian_raw
from .errors import EmptyBandError, ZeroModeError
from .grid import GridSpec
from .spectral import SpectralField, fwd, l2_norm
from .stepping import State


def _canonical_mode(s: tuple[int, int, int]) -> tuple[int, int, int]:
    # cos(k.x) = cos(-k.x), so flip the sign to make the leading nonzero
    # component positive and store a single representative.
    sx, sy, sz = s
    if sx < 0 or (sx == 0 and (sy < 0 or (sy == 0 and sz < 0))):
        return (-sx, -sy, -sz)
    return (sx, sy, sz)


def _check_representable(grid: GridSpec, s: tuple[int, int, int]) -> None:
    for name, n, si in (("x", grid.nx, s[0]), ("y", grid.ny, s[1]), ("z", grid.nz, s[2])):
        if n == 1:
            if si != 0:
                raise ValueError(f"mode s_{name} = {si} needs more than one point on {name}")
        elif abs(si) > n // 2 - 1:
            raise ValueError(f"mode s_{name} = {si} not representable on {n} points")


def single_mode_coeffs(grid: GridSpec, s: tuple[int, int, int], c: complex) -> np.ndarray:
    """Coefficients of the real field 2*Re(c * exp(i k.x)) for mode s.

    ``s`` must already be canonical (leading nonzero component positive).
    On the s_x = 0 plane both conjugate partners are stored explicitly.
    """
    sx, sy, sz = s
    coeffs = np.zeros(grid.kshape, dtype=np.complex128)
    coeffs[sz % grid.nz, sy % grid.ny, sx] = c
    if sx == 0 and (sy, sz) != (0, 0):
        coeffs[(-sz) % grid.nz, (-sy) % grid.ny, 0] = np.conj(c)
    return coeffs


def make_rossby(
    grid: GridSpec,
    F: float,
    beta: float,
    s_x: int,
    s_y: int,
    s_z: int,
    A: float = 1.0,
) -> tuple[State, Callable[[float], SpectralField]]:
    """Single-mode wave: psi0 = A cos(k.x), an exact solution of the dynamics.

    The nonlinear term vanishes identically because the scalar is a multiple
    of the streamfunction, so the mode just rotates with frequency
    omega = -beta * kx / (kx^2 + ky^2 + F^2 kz^2).  The second return value
    maps any time to the exact spectral scalar, for error measurements.
    """
    if (s_x, s_y, s_z) == (0, 0, 0):
        raise ZeroModeError("the (0, 0, 0) mode has no dynamics")
    s = _canonical_mode((s_x, s_y, s_z))
    _check_representable(grid, s)
    kx = 2.0 * np.pi * s[0] / grid.lx
    ky = 2.0 * np.pi * s[1] / grid.ly
    kz = 2.0 * np.pi * s[2] / grid.lz
    k2 = kx * kx + ky * ky + (F * F) * (kz * kz)
    omega = -beta * kx / k2

    def exact(t: float) -> SpectralField:
        c = (-k2 * A / 2.0) * np.exp(-1j * omega * t)
        return SpectralField(grid, single_mode_coeffs(grid, s, c))

    state = State(exact(0.0), 0.0, PhysicsParams(beta=beta, nu=0.0, F=F))
    return state, exact


def make_random(
    grid: GridSpec,
    slope: float,
    energy: float,
    seed: int,
    band: Optional[tuple[int, int]] = None,
    params: Optional[PhysicsParams] = None,
) -> State:
    """Seeded random field with a power-law shell spectrum.

    Every retained mode in shells ``band[0]..band[1]`` (integer radius,
    rounded) gets a uniformly random phase; amplitudes are constant per shell
    and weighted so the shell-summed power of the scalar follows m^slope.
    The whole field is rescaled to the requested L2 norm.  The same seed
    reproduces the field bitwise.
    """
    if params is None:
        params = PhysicsParams(F=grid.F)
    if band is None:
        sizes = [n for n in (grid.nx, grid.ny, grid.nz) if n > 1]
        if not sizes:
            raise EmptyBandError("grid has a single point, nothing to excite")
        band = (2, max(2, min(sizes) // 4))
    lo, hi = band
    if lo < 1 or hi < lo:
        raise EmptyBandError(f"band {band} is empty or touches the zero mode")

    SX = grid.sx.reshape(1, 1, -1)
    SY = grid.sy.reshape(1, -1, 1)
    SZ = grid.sz.reshape(-1, 1, 1)
    shell = np.rint(np.sqrt((SX * SX + SY * SY + SZ * SZ).astype(np.float64))).astype(int)
    canonical = (SX > 0) | ((SX == 0) & ((SY > 0) | ((SY == 0) & (SZ > 0))))
    sel = (shell >= lo) & (shell <= hi) & grid.dealias_mask & canonical
    if not np.any(sel):
        raise EmptyBandError(f"no retained modes in shells {lo}..{hi}")

    # Each selected representative stands for exactly two modes of the full
    # lattice (its Hermitian partner), so the shell population carries a 2.
    sel_shells = shell[sel]
    counts = np.bincount(sel_shells, minlength=hi + 1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_mode = np.sqrt(
            np.arange(hi + 1, dtype=np.float64) ** slope / (2.0 * counts)
        )
    amplitudes = per_mode[sel_shells]

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=amplitudes.shape[0])
    coeffs = np.zeros(grid.kshape, dtype=np.complex128)
    coeffs[sel] = amplitudes * np.exp(1j * phases)

    # Mirror the s_x = 0 plane so the stored spectrum is Hermitian.
    plane = coeffs[:, :, 0]
    iz = (-np.arange(grid.nz)) % grid.nz
    iy = (-np.arange(grid.ny)) % grid.ny
    coeffs[:, :, 0] = plane + np.conj(plane[np.ix_(iz, iy)])

    field = SpectralField(grid, coeffs)
    if energy == 0.0:
        return State(SpectralField(grid, np.zeros_like(coeffs)), 0.0, params)
    current = l2_norm(field)
    coeffs *= energy / current
    return State(SpectralField(grid, coeffs), 0.0, params)


def make_blob(
    grid: GridSpec,
    center: tuple[float, float, float],
    width: float,
    A: float,
    params: Optional[PhysicsParams] = None,
) -> State:
    """Periodized Gaussian bump in the scalar, mean-subtracted.

    The box forces total mass zero, so the constant (the bump's mean) is
    removed; that shifts the values but none of the derived velocities.
    """
    if not width > 0.0:
        raise ValueError(f"width must be positive, got {width}")
    if params is None:
        params = PhysicsParams(F=grid.F)

    def periodized(coord: np.ndarray, c: float, length: float) -> np.ndarray:
        acc = np.zeros_like(coord)
        for j in range(-4, 5):
            acc += np.exp(-((coord - c + j * length) ** 2) / (2.0 * width**2))
        return acc

    gx = periodized(grid.x, center[0], grid.lx)
    gy = periodized(grid.y, center[1], grid.ly)
    gz = periodized(grid.z, center[2], grid.lz)
    values = A * gz[:, None, None] * gy[None, :, None] * gx[None, None, :]
    values = values - np.mean(values)
    coeffs = fwd(grid, values)
    coeffs[0, 0, 0] = 0.0
    return State(SpectralField(grid, coeffs), 0.0, params)


def make_zonal(
    grid: GridSpec,
    profile: Sequence[float],
    params: Optional[PhysicsParams] = None,
) -> State:
    """x- and z-independent streamfunction given by samples psi(y_j).

    Zonal states are exact steady states of the inviscid dynamics: the
    advection term and the beta term both vanish.
    """
    if params is None:
        params = PhysicsParams(F=grid.F)
    prof = np.asarray(profile, dtype=np.float64)
    if prof.shape != (grid.ny,):
        raise ValueError(f"profile needs {grid.ny} samples, got {prof.shape}")
    psi = np.broadcast_to(prof[None, :, None], grid.shape).copy()
    q_c = fwd(grid, psi) * grid.stratified_symbol(params.F)
    q_c[0, 0, 0] = 0.0
    return State(SpectralField(grid, q_c), 0.0, params)


# ---- manufactured solutions -----------------------------------------------

_KINDS = ("one", "cos", "sin")


@dataclass(frozen=True)
class TrigTerm:
    """One separable term A * T(t) * X(x) * Y(y) * Z(z) of a target field.

    Each factor is "one", "cos", or "sin"; spatial factors use the integer
    mode on their axis, the time factor uses the angular frequency omega
    (cos(omega t) or sin(omega t)).  Term tables are exactly differentiable,
    which is the whole point: no symbolic engine needed.
    """

    amplitude: float
    tkind: str = "one"
    omega: float = 0.0
    xkind: str = "one"
    sx: int = 0
    ykind: str = "one"
    sy: int = 0
    zkind: str = "one"
    sz: int = 0

    def __post_init__(self):
        for kind in (self.tkind, self.xkind, self.ykind, self.zkind):
            if kind not in _KINDS:
                raise ValueError(f"factor kind must be one of {_KINDS}, got {kind!r}")

    def time_value(self, t: float) -> float:
        if self.tkind == "one":
            return 1.0
        if self.tkind == "cos":
            return float(np.cos(self.omega * t))
        return float(np.sin(self.omega * t))

    def time_derivative(self, t: float) -> float:
        if self.tkind == "one":
            return 0.0
        if self.tkind == "cos":
            return float(-self.omega * np.sin(self.omega * t))
        return float(self.omega * np.cos(self.omega * t))

    def spatial_values(self, grid: GridSpec) -> np.ndarray:
        def factor(kind: str, s: int, coord: np.ndarray, length: float) -> np.ndarray:
            if kind == "one":
                return np.ones_like(coord)
            angle = 2.0 * np.pi * s * coord / length
            return np.cos(angle) if kind == "cos" else np.sin(angle)

        fx = factor(self.xkind, self.sx, grid.x, grid.lx)
        fy = factor(self.ykind, self.sy, grid.y, grid.ly)
        fz = factor(self.zkind, self.sz, grid.z, grid.lz)
        return self.amplitude * fz[:, None, None] * fy[None, :, None] * fx[None, None, :]


def traveling_wave(
    amplitude: float, s: tuple[int, int, int], omega: float
) -> tuple[TrigTerm, ...]:
    """Term table of A*cos(k.x - omega t), expanded into separable factors.

    The expansion of a cosine of a four-term sum runs over the even-sized
    subsets of factors turned into sines, with sign (-1)^(|subset|/2).
    """
    axes = (("x", s[0]), ("y", s[1]), ("z", s[2]), ("t", None))
    terms = []
    for mask in range(16):
        chosen = [i for i in range(4) if mask & (1 << i)]
        if len(chosen) % 2 != 0:
            continue
        sign = (-1) ** (len(chosen) // 2)
        kinds = ["sin" if i in chosen else "cos" for i in range(4)]
        # sin of a zero spatial frequency kills the whole term
        if any(kinds[i] == "sin" and axes[i][1] == 0 for i in range(3)):
            continue
        terms.append(
            TrigTerm(
                amplitude=sign * amplitude,
                tkind=kinds[3],
                omega=-omega,  # the phase is k.x - omega t
                xkind=kinds[0] if s[0] != 0 else "one",
                sx=s[0],
                ykind=kinds[1] if s[1] != 0 else "one",
                sy=s[1],
                zkind=kinds[2] if s[2] != 0 else "one",
                sz=s[2],
            )
        )
    return tuple(terms)


def manufactured_solution(
    grid: GridSpec, target: Sequence[TrigTerm], F: float, t: float
) -> SpectralField:
    """Exact spectral scalar of the target streamfunction table at time t."""
    psi = np.zeros(grid.kshape, dtype=np.complex128)
    for term in target:
        psi += term.time_value(t) * fwd(grid, term.spatial_values(grid))
    q_c = psi * grid.stratified_symbol(F)
    q_c[0, 0, 0] = 0.0
    return SpectralField(grid, q_c)


def make_mms(
    grid: GridSpec,
    params: PhysicsParams,
    target: Sequence[TrigTerm],
) -> tuple[State, Forcing]:
    """Source term that makes the target streamfunction an exact solution.

    The source is assembled from the same discrete operators the solver
    applies (dealiased advection, spectral derivatives), so the only error
    left when running against it is time integration.
    """
    phi_hats = [fwd(grid, term.spatial_values(grid)) for term in target]
    sym = grid.stratified_symbol(params.F)
    terms = list(target)

    cache: dict[float, np.ndarray] = {}

    def evaluator(g: GridSpec, t: float) -> np.ndarray:
        if t in cache:
            return cache[t]
        psi = np.zeros(grid.kshape, dtype=np.complex128)
        psi_t = np.zeros(grid.kshape, dtype=np.complex128)
        for term, phi in zip(terms, phi_hats):
            psi += term.time_value(t) * phi
            psi_t += term.time_derivative(t) * phi
        q_c = sym * psi
        q_t = sym * psi_t
        out = q_t + jacobian_raw(grid, psi, q_c) + params.beta * (psi * grid.ikx)
        if params.nu != 0.0:
            out += params.nu * (grid.k2_iso * q_c)
        out[0, 0, 0] = 0.0
        if len(cache) > 8:
            cache.clear()
        cache[t] = out
        return out

    state = State(manufactured_solution(grid, target, params.F, 0.0), 0.0, params)
    return state, Forcing(kind="manufactured", evaluator=evaluator)
