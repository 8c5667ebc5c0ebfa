"""Command-line front end: run, verify, converge, trace, plot, info.

All human-readable output goes to standard error; files are the only data
channel.  Exit codes: 0 success, 1 input/environment failure, 2 blow-up
(non-finite state, last good checkpoint retained), 3 a verification check
failed, 64 usage errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    RunConfig,
    build_initial_state,
    build_particle_sets,
    config_digest,
    grid_spec,
    parse_config,
    physics_params,
    step_control,
)
from .diagnostics import (
    CheckResult,
    check_conservation,
    check_growth_bounds,
    check_lp_interpolation,
    monitor_ratios,
    record,
    write_diagnostics_csv,
    write_ratios_csv,
)
from .dynamics import PhysicsParams, tendency_raw
from .errors import ConfigError, NonFiniteError, QGError
from .grid import GridSpec
from .initial import make_random, make_rossby
from .particles import TrajectoryTracer, write_trajectories_csv
from .snapshots import read_checkpoint, read_snapshot, write_checkpoint, write_snapshot
from .spectral import SpectralField, inner_product, inv, l2_norm, solve_stratified_poisson
from .stepping import Observer, State, run
from .svgplot import render_line_plot

_USAGE_EXIT = 64


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="qg3d", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qg3d {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate and emit diagnostics")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override ic.seed")
    p_run.add_argument("--restart", default=None, help="checkpoint to resume from")

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("config")
    p_verify.add_argument("--seed", type=int, default=None)

    p_conv = sub.add_parser("converge", help="temporal/spatial refinement study")
    p_conv.add_argument("config")

    p_trace = sub.add_parser("trace", help="run with the particle tracer")
    p_trace.add_argument("config")
    p_trace.add_argument("--seed", type=int, default=None)

    p_plot = sub.add_parser("plot", help="render diagnostics CSV to SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("out")
    p_plot.add_argument(
        "--columns", default=None, help="comma-separated column names (default: all)"
    )

    p_info = sub.add_parser("info", help="print snapshot header and norms")
    p_info.add_argument("snapshot")
    return parser


def _load_config(path: str, seed=None) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    cfg = parse_config(text)
    if seed is not None:
        cfg.ic.seed = seed
        cfg.lagrangian.seed = seed
    return cfg


def _output_dir(cfg: RunConfig) -> Path:
    directory = os.environ.get("QG3D_OUTPUT_DIR") or cfg.output.directory
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_check_table(results: list[CheckResult]) -> None:
    name_w = max((len(r.name) for r in results), default=4)
    _eprint(f"{'check':<{name_w}}  {'lhs':>13} {'rhs':>13} {'slack':>13}  status")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        _eprint(
            f"{r.name:<{name_w}}  {r.bound_lhs:13.6e} {r.bound_rhs:13.6e} "
            f"{r.slack:13.6e}  {status}"
        )


def _evaluate_checks(cfg: RunConfig, history) -> list[CheckResult]:
    results: list[CheckResult] = []
    inviscid = cfg.nu == 0.0
    if cfg.checks.conservation and inviscid:
        results += check_conservation(history, cfg.checks.tol_conservation)
    if cfg.checks.growth and inviscid and len(history) >= 2:
        results += check_growth_bounds(history, cfg.checks.tol_growth)
    if cfg.checks.interpolation:
        results.append(check_lp_interpolation(history))
    if not inviscid and (cfg.checks.conservation or cfg.checks.growth):
        _eprint("note: conservation/growth checks skipped (viscous run)")
    return results


def _simulate(cfg: RunConfig, state: State, out: Path, extra_observers=(), history=None):
    """Shared run loop: records, snapshots, checkpoints, final outputs.

    Pass ``history`` to keep the records reachable when the run raises.
    """
    if history is None:
        history = []
    m = cfg.checks.sobolev_m
    observers = [
        Observer(lambda s: history.append(record(s, m)), every=cfg.output.record_every)
    ]
    snap_index = [0]

    def write_numbered_snapshot(s: State) -> None:
        write_snapshot(s, out / f"snapshot_{snap_index[0]:05d}.qg3d")
        snap_index[0] += 1

    if cfg.output.snapshot_every > 0.0:
        observers.append(Observer(write_numbered_snapshot, every=cfg.output.snapshot_every))
    digest = config_digest(cfg)
    if cfg.output.checkpoint_every > 0.0:
        observers.append(
            Observer(
                lambda s: write_checkpoint(s, out / "checkpoint.qg3d", digest),
                every=cfg.output.checkpoint_every,
            )
        )
    observers.extend(extra_observers)

    final = run(state, cfg.time.t_end, step_control(cfg), observers=observers)
    return final, history


def _finish_outputs(cfg: RunConfig, out: Path, history, final: State | None) -> None:
    if history:
        write_diagnostics_csv(out / "diagnostics.csv", history)
        write_ratios_csv(out / "ratios.csv", monitor_ratios(history))
    if final is not None:
        write_snapshot(final, out / "final.qg3d")
        write_checkpoint(final, out / "checkpoint.qg3d", config_digest(cfg))


def _cmd_run(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out = _output_dir(cfg)
    if args.restart:
        state, meta = read_checkpoint(args.restart)
        if meta.get("config_sha256") not in (None, config_digest(cfg)):
            _eprint("warning: checkpoint was produced under a different config")
        if state.grid != grid_spec(cfg):
            _eprint("error: checkpoint grid does not match the configured grid")
            return 1
        state = State(state.q_hat, state.t, physics_params(cfg))
        _eprint(f"restarting from t = {state.t:.6g}")
    else:
        state = build_initial_state(cfg)

    history = []
    try:
        final, history = _simulate(cfg, state, out, history=history)
    except NonFiniteError as exc:
        _eprint(f"blow-up: {exc} (last good checkpoint retained)")
        _finish_outputs(cfg, out, history, None)
        return 2
    _finish_outputs(cfg, out, history, final)
    _eprint(f"run complete: t = {final.t:.6g}, {len(history)} records -> {out}")

    results = _evaluate_checks(cfg, history)
    if results:
        _print_check_table(results)
        if not all(r.passed for r in results):
            return 3
    return 0


def _neutrality_results(grid: GridSpec, params: PhysicsParams, n_states: int = 10):
    """Max relative inner products of the tendency with the scalar and the
    streamfunction over seeded random states (both must vanish)."""
    inviscid = PhysicsParams(beta=params.beta, nu=0.0, F=params.F)
    worst_q = 0.0
    worst_psi = 0.0
    for seed in range(n_states):
        state = make_random(grid, slope=-3.0, energy=1.0, seed=seed)
        q_hat = state.q_hat
        tend = SpectralField(
            grid, tendency_raw(grid, q_hat.coeffs, 0.0, inviscid)
        )
        psi_hat = solve_stratified_poisson(q_hat, inviscid.F)
        scale_t = l2_norm(tend)
        if scale_t == 0.0:
            continue
        worst_q = max(
            worst_q, abs(inner_product(tend, q_hat)) / (scale_t * l2_norm(q_hat))
        )
        worst_psi = max(
            worst_psi, abs(inner_product(tend, psi_hat)) / (scale_t * l2_norm(psi_hat))
        )
    return [
        CheckResult.from_bound("enstrophy neutrality <dq/dt, q>", worst_q, 1e-12, 0.0),
        CheckResult.from_bound("energy neutrality <dq/dt, psi>", worst_psi, 1e-12, 0.0),
    ]


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out = _output_dir(cfg)
    results = _neutrality_results(grid_spec(cfg), physics_params(cfg))
    state = build_initial_state(cfg)
    try:
        final, history = _simulate(cfg, state, out)
    except NonFiniteError as exc:
        _eprint(f"blow-up during verification run: {exc}")
        return 2
    _finish_outputs(cfg, out, history, final)
    results += _evaluate_checks(cfg, history)
    _print_check_table(results)
    return 0 if all(r.passed for r in results) else 3


def _converge_temporal() -> tuple[list[float], list[float]]:
    """Global wave error at t = 1 for a halving dt ladder; returns errors
    and observed orders.  A fast mode (frequency 8) keeps the errors far
    above the rounding floor so the ratios are clean."""
    grid = GridSpec(16, 16, 16)
    errors = []
    for dt in (4e-3, 2e-3, 1e-3):
        state, exact = make_rossby(grid, 1.0, 8.0, 1, 0, 0, 1.0)
        control = _fixed_control(dt)
        final = run(state, 1.0, control)
        err = np.max(np.abs(inv(grid, final.q_hat.coeffs - exact(1.0).coeffs)))
        errors.append(float(err))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
    return errors, orders


def _fixed_control(dt: float):
    from .stepping import StepControl

    return StepControl(mode="fixed", dt_fixed=dt, dt_min=min(1e-9, dt), dt_max=max(5e-2, dt))


def _converge_spatial(F: float) -> list[tuple[int, float]]:
    rows = []
    for n in (4, 8, 16, 32):
        grid = GridSpec(n, n, n, F=F)
        state, exact = make_rossby(grid, F, 1.0, 1, 1, 1, 1.0)
        final = run(state, 0.25, _fixed_control(1e-3))
        err = np.max(np.abs(inv(grid, final.q_hat.coeffs - exact(0.25).coeffs)))
        rows.append((n, float(err)))
    return rows


def _cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    errors, orders = _converge_temporal()
    _eprint("temporal refinement (wave frequency 8, t = 1):")
    for dt, err in zip((4e-3, 2e-3, 1e-3), errors):
        _eprint(f"  dt = {dt:.0e}  max error = {err:.6e}")
    for i, order in enumerate(orders):
        _eprint(f"  observed order (level {i}) = {order:.3f}")
    rows = _converge_spatial(cfg.F)
    _eprint("spatial refinement (single mode, t = 0.25):")
    for n, err in rows:
        _eprint(f"  n = {n:3d}  max error = {err:.6e}")
    orders_ok = all(3.8 <= o <= 4.2 for o in orders)
    spatial_ok = all(err <= 1e-10 for n, err in rows if n >= 8)
    _eprint(f"temporal order in [3.8, 4.2]: {'yes' if orders_ok else 'NO'}")
    _eprint(f"spatial floor <= 1e-10 for n >= 8: {'yes' if spatial_ok else 'NO'}")
    return 0 if (orders_ok and spatial_ok) else 3


def _cmd_trace(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out = _output_dir(cfg)
    state = build_initial_state(cfg)
    sets = build_particle_sets(cfg, state.grid)
    tracer = TrajectoryTracer(
        sets,
        state.q_hat,
        beta=cfg.beta,
        sample_every=cfg.lagrangian.sample_every,
    )
    history = []
    try:
        final, history = _simulate(
            cfg, state, out, extra_observers=[Observer(tracer)], history=history
        )
    except NonFiniteError as exc:
        _eprint(f"blow-up: {exc} (last good checkpoint retained)")
        _finish_outputs(cfg, out, history, final=None)
        return 2
    tracer.finalize()
    _finish_outputs(cfg, out, history, final)
    write_trajectories_csv(out / "particles.csv", tracer.samples)
    _eprint(
        f"traced {sum(len(ps) for ps in tracer.sets)} particles to t = {final.t:.6g}"
    )
    _eprint(f"max |duhamel residual| = {tracer.max_residual():.6e}")
    return 0


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise QGError(f"{path}: empty CSV")
    header = [name.strip() for name in lines[0].split(",")]
    rows = [[float(cell) for cell in line.split(",")] for line in lines[1:]]
    if not rows:
        raise QGError(f"{path}: no data rows")
    if any(len(row) != len(header) for row in rows):
        raise QGError(f"{path}: ragged CSV")
    return header, np.array(rows, dtype=float)


def _cmd_plot(args) -> int:
    header, data = _read_csv(args.csv)
    x_name = header[0]
    if args.columns is None:
        selected = header[1:]
    else:
        selected = [c.strip() for c in args.columns.split(",") if c.strip()]
    for name in selected:
        if name not in header:
            _eprint(f"qg3d plot: error: column {name!r} not in {header}")
            return _USAGE_EXIT
    xs = data[:, 0]
    series = [
        (name, xs.tolist(), data[:, header.index(name)].tolist()) for name in selected
    ]
    svg = render_line_plot(series, title=Path(args.csv).name, xlabel=x_name)
    Path(args.out).write_text(svg, encoding="ascii")
    _eprint(f"wrote {args.out} ({len(selected)} series)")
    return 0


def _cmd_info(args) -> int:
    state = read_snapshot(args.snapshot)
    grid = state.grid
    p = state.params
    _eprint(f"snapshot:  {args.snapshot}")
    _eprint(f"grid:      {grid.nx} x {grid.ny} x {grid.nz}")
    _eprint(f"box:       {grid.lx:.6g} x {grid.ly:.6g} x {grid.lz:.6g}")
    _eprint(f"F = {p.F:.6g}  beta = {p.beta:.6g}  nu = {p.nu:.6g}  t = {state.t:.6g}")
    q_hat = state.q_hat
    mean = q_hat.coeffs[0, 0, 0].real
    _eprint(f"mean(q) = {mean:.3e}")
    projected = q_hat.coeffs.copy()
    projected[0, 0, 0] = 0.0
    q_proj = SpectralField(grid, projected)
    psi_hat = solve_stratified_poisson(q_proj, p.F)
    from .spectral import velocity_spectra

    v_sq = sum(l2_norm(vh) ** 2 for vh in velocity_spectra(psi_hat))
    _eprint(f"||q||_L2 = {l2_norm(q_hat):.9e}")
    _eprint(f"||q||_Linf = {np.max(np.abs(inv(grid, q_hat.coeffs))):.9e}")
    _eprint(f"||v||_L2 = {math.sqrt(v_sq):.9e}")
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "verify": _cmd_verify,
    "converge": _cmd_converge,
    "trace": _cmd_trace,
    "plot": _cmd_plot,
    "info": _cmd_info,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except FileNotFoundError as exc:
        _eprint(f"qg3d {args.command}: error: {exc}")
        return 1
    except ConfigError as exc:
        _eprint(f"qg3d {args.command}: config error: {exc}")
        return 1
    except QGError as exc:
        _eprint(f"qg3d {args.command}: error: {exc}")
        return 1
    except ValueError as exc:
        _eprint(f"qg3d {args.command}: error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
