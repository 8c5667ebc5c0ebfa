"""Norm time series, conservation checks, and growth-bound verification.

A DiagnosticsRecord is one time sample of every monitored norm.  The checks
compare those series against the identities the dynamics are supposed to
satisfy: exact conservation of the quadratic invariants and integral-form
growth bounds driven by the second velocity component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientHistoryError
from .spectral import (
    PhysicalField,
    SpectralField,
    derivative,
    inv,
    sobolev_norm,
    solve_stratified_poisson,
    velocity_spectra,
)
from .stepping import State

#: CSV column order; the header is part of the on-disk contract.
CSV_COLUMNS = (
    "t",
    "v_l2",
    "q_l2",
    "q_l4",
    "q_l6",
    "q_linf",
    "v_linf",
    "v2_l6",
    "v2_linf",
    "dq_l2",
    "dq_l3",
    "dq_l4",
    "d2q_l3",
    "hm_q",
    "hm_v",
    "grad_v_linf",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """All monitored norms at one instant.

    The trailing grad_v_l2/l4/l6 entries feed the reported (never asserted)
    inequality ratios and are not part of the CSV schema.
    """

    t: float
    v_l2: float
    q_l2: float
    q_l4: float
    q_l6: float
    q_linf: float
    v_linf: float
    v2_l6: float
    v2_linf: float
    dq_l2: float
    dq_l3: float
    dq_l4: float
    d2q_l3: float
    hm_q: float
    hm_v: float
    grad_v_linf: float
    grad_v_l2: float
    grad_v_l4: float
    grad_v_l6: float


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verified bound: passed iff slack >= -tolerance."""

    name: str
    bound_lhs: float
    bound_rhs: float
    slack: float
    passed: bool
    tolerance: float

    @classmethod
    def from_bound(cls, name: str, lhs: float, rhs: float, tolerance: float) -> "CheckResult":
        slack = rhs - lhs
        return cls(name, lhs, rhs, slack, slack >= -tolerance, tolerance)


def _lp_raw(cell_volume: float, values: np.ndarray, p: float) -> float:
    if p == math.inf or p == np.inf:
        return float(np.max(np.abs(values))) if values.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    # |f|^p can overflow on a diverging state; inf is the right saturation
    with np.errstate(over="ignore"):
        return float((np.sum(np.abs(values) ** p) * cell_volume) ** (1.0 / p))


def lp_norm(f: PhysicalField, p: float) -> float:
    """Uniform-grid quadrature of the L^p norm; p = inf gives the grid max."""
    return _lp_raw(f.grid.cell_volume, f.values, p)


def record(state: State, m: int = 4) -> DiagnosticsRecord:
    """Compute every monitored norm from the prognostic coefficients.

    m sets the Sobolev monitoring order: the scalar is tracked in H^(m-1)
    and the velocity in H^m.
    """
    grid = state.grid
    q_hat = state.q_hat
    psi_hat = solve_stratified_poisson(q_hat, state.params.F)
    v1h, v2h, v3h = velocity_spectra(psi_hat)

    q = inv(grid, q_hat.coeffs)
    v1 = inv(grid, v1h.coeffs)
    v2 = inv(grid, v2h.coeffs)
    v3 = inv(grid, v3h.coeffs)
    vmag = np.sqrt(v1 * v1 + v2 * v2 + v3 * v3)

    dv = grid.cell_volume

    def d(fh: SpectralField, axis: str) -> np.ndarray:
        return inv(grid, derivative(fh, axis).coeffs)

    qx, qy, qz = d(q_hat, "x"), d(q_hat, "y"), d(q_hat, "z")
    dqmag = np.sqrt(qx * qx + qy * qy + qz * qz)

    # Hessian magnitude with the off-diagonal entries counted twice.
    h2 = np.zeros_like(q)
    for ax1, ax2, mult in (
        ("x", "x", 1.0), ("y", "y", 1.0), ("z", "z", 1.0),
        ("x", "y", 2.0), ("x", "z", 2.0), ("y", "z", 2.0),
    ):
        comp = inv(grid, derivative(derivative(q_hat, ax1), ax2).coeffs)
        h2 += mult * comp * comp
    d2qmag = np.sqrt(h2)

    g2 = np.zeros_like(q)
    for comp_hat in (v1h, v2h, v3h):
        for axis in ("x", "y", "z"):
            comp = d(comp_hat, axis)
            g2 += comp * comp
    gradvmag = np.sqrt(g2)

    return DiagnosticsRecord(
        t=state.t,
        v_l2=_lp_raw(dv, vmag, 2),
        q_l2=_lp_raw(dv, q, 2),
        q_l4=_lp_raw(dv, q, 4),
        q_l6=_lp_raw(dv, q, 6),
        q_linf=_lp_raw(dv, q, math.inf),
        v_linf=_lp_raw(dv, vmag, math.inf),
        v2_l6=_lp_raw(dv, v2, 6),
        v2_linf=_lp_raw(dv, v2, math.inf),
        dq_l2=_lp_raw(dv, dqmag, 2),
        dq_l3=_lp_raw(dv, dqmag, 3),
        dq_l4=_lp_raw(dv, dqmag, 4),
        d2q_l3=_lp_raw(dv, d2qmag, 3),
        hm_q=sobolev_norm(q_hat, m - 1),
        hm_v=float(np.sqrt(sum(sobolev_norm(vh, m) ** 2 for vh in (v1h, v2h, v3h)))),
        grad_v_linf=_lp_raw(dv, gradvmag, math.inf),
        grad_v_l2=_lp_raw(dv, gradvmag, 2),
        grad_v_l4=_lp_raw(dv, gradvmag, 4),
        grad_v_l6=_lp_raw(dv, gradvmag, 6),
    )


def check_conservation(
    history: Sequence[DiagnosticsRecord], tol_rel: float
) -> list[CheckResult]:
    """Relative drift of the two exactly conserved norms.

    Valid for inviscid unforced runs.  The velocity-norm identity assumes
    the stratification ratio is 1; otherwise only the F-weighted form is
    conserved and this check will report honest drift.
    """
    if not history:
        raise InsufficientHistoryError("need at least one record")
    results = []
    for name in ("v_l2", "q_l2"):
        series = np.array([getattr(r, name) for r in history])
        scale = series[0] if series[0] > 0.0 else 1.0
        drift = float(np.max(np.abs(series - series[0])) / scale)
        results.append(
            CheckResult.from_bound(f"{name} conservation", drift, tol_rel, 0.0)
        )
    return results


def _integral_bound_check(
    name: str,
    t: np.ndarray,
    lhs_series: np.ndarray,
    rate_series: np.ndarray,
    tol_rel: float,
) -> CheckResult:
    rhs_series = lhs_series[0] + _cumtrapz(rate_series, t)
    margins = rhs_series - lhs_series
    worst = int(np.argmin(margins / np.maximum(np.abs(rhs_series), 1e-300)))
    lhs, rhs = float(lhs_series[worst]), float(rhs_series[worst])
    return CheckResult.from_bound(name, lhs, rhs, tol_rel * max(abs(rhs), 1e-300))


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if y.shape[0] > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def check_growth_bounds(
    history: Sequence[DiagnosticsRecord], tol_rel: float
) -> list[CheckResult]:
    """Integral-form growth bounds along the recorded time series.

    Checks, with trapezoid path integrals over the record cadence,
      (a) ||q(t)||_L6   <= ||q0||_L6   + integral of ||v2||_L6, and
      (b) ||q(t)||_Linf <= ||q0||_Linf + integral of ||v2||_Linf;
    both follow from integrating the scalar along horizontal particle paths,
    where only v2 sources it.  Valid for inviscid unforced runs.
    """
    if len(history) < 2:
        raise InsufficientHistoryError("growth bounds need at least two records")
    t = np.array([r.t for r in history])
    return [
        _integral_bound_check(
            "q_l6 growth bound",
            t,
            np.array([r.q_l6 for r in history]),
            np.array([r.v2_l6 for r in history]),
            tol_rel,
        ),
        _integral_bound_check(
            "q_linf growth bound",
            t,
            np.array([r.q_linf for r in history]),
            np.array([r.v2_linf for r in history]),
            tol_rel,
        ),
    ]


def check_lp_interpolation(history: Sequence[DiagnosticsRecord]) -> CheckResult:
    """Holder interpolation sanity: ||q||_L4 <= ||q||_L2^(1/4) ||q||_L6^(3/4).

    Asserted with a 1e-12 relative cushion at the worst record.
    """
    if not history:
        raise InsufficientHistoryError("need at least one record")
    lhs = np.array([r.q_l4 for r in history])
    rhs = np.array([r.q_l2 ** 0.25 * r.q_l6 ** 0.75 for r in history]) * (1.0 + 1e-12)
    worst = int(np.argmax(lhs - rhs))
    return CheckResult.from_bound(
        "l4 interpolation", float(lhs[worst]), float(rhs[worst]), 0.0
    )


@dataclass(frozen=True)
class RatioReport:
    """Reported-only inequality ratios; nan marks an undefined sample."""

    t: tuple[float, ...]
    columns: dict[str, tuple[float, ...]]


def monitor_ratios(history: Sequence[DiagnosticsRecord]) -> RatioReport:
    """Time series of the unquantified-constant inequality ratios.

    These come from bounds whose constants are unknown, so nothing here is
    asserted; the report exists so a human can eyeball boundedness.
    """

    def ratio(num: Iterable[float], den: Iterable[float]) -> tuple[float, ...]:
        return tuple(
            (n / d) if d > 0.0 else math.nan for n, d in zip(num, den)
        )

    t = tuple(r.t for r in history)
    poly = [1.0 + r.t**2 for r in history]
    columns = {
        "cz_ratio_l2": ratio((r.grad_v_l2 for r in history), (r.q_l2 for r in history)),
        "cz_ratio_l4": ratio((r.grad_v_l4 for r in history), (r.q_l4 for r in history)),
        "gn_ratio": ratio(
            (r.v_linf for r in history),
            (r.grad_v_l6**0.75 * r.v_l2**0.25 for r in history),
        ),
        "q_l2_over_poly": ratio((r.q_l2 for r in history), poly),
        "q_l4_over_poly": ratio((r.q_l4 for r in history), poly),
        "q_l6_over_poly": ratio((r.q_l6 for r in history), poly),
        "d2q_l3": tuple(r.d2q_l3 for r in history),
    }
    return RatioReport(t=t, columns=columns)


def write_diagnostics_csv(path, history: Sequence[DiagnosticsRecord]) -> None:
    """One row per record, 17-significant-digit decimal, fixed header."""
    lines = [",".join(CSV_COLUMNS)]
    for r in history:
        lines.append(",".join("%.17g" % getattr(r, c) for c in CSV_COLUMNS))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ratios_csv(path, report: RatioReport) -> None:
    names = list(report.columns.keys())
    lines = [",".join(["t"] + names)]
    for i, t in enumerate(report.t):
        row = [t] + [report.columns[n][i] for n in names]
        lines.append(",".join("%.17g" % v for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
