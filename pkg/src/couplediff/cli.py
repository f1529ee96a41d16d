"""Command-line front end: simulate, spectrum, sweep-epsilon, verify.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime
failure.  All artifacts are CSV (17 significant digits, headers always);
SVG plots are opt-in and purely decorative.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import verify as verify_mod
from .analysis import decay_report, epsilon_sweep
from .config import (
    ConfigError,
    SimConfig,
    config_to_text,
    grid_from,
    initial_state,
    kernel_from,
    load_config,
    scheme_from,
    set_key,
    validate,
)
from .discretization import assemble_generator, assemble_heat_generator
from .energy_spectrum import estimate_beta1, estimate_energy_control_k
from .evolution import cfl_limit, evolve, picard_window_solve
from .kernels import coupling_constants
from .output import atomic_write_text, svg_line_plot, write_csv

TIMESERIES_COLUMNS = (
    "t",
    "mass",
    "energy_total",
    "energy_local",
    "energy_nonlocal",
    "energy_coupling",
    "dist_to_mean",
)
SPECTRUM_SAMPLES = 200


def _setup(cfg: SimConfig):
    kernel = kernel_from(cfg)
    constants = coupling_constants(kernel)
    grid = grid_from(cfg)
    try:
        generator = assemble_generator(grid, kernel, constants)
    except ValueError as exc:
        raise ConfigError(f"grid.n_nonlocal / kernel.epsilon: {exc}") from exc
    return kernel, constants, grid, generator


def _write_timeseries(path, traj):
    rows = zip(
        traj.times,
        traj.mass,
        traj.energy_total,
        traj.energy_local,
        traj.energy_nonlocal,
        traj.energy_coupling,
        traj.dist_to_mean,
    )
    write_csv(path, TIMESERIES_COLUMNS, ([float(v) for v in row] for row in rows))


def _write_snapshot(path, state):
    grid = state.grid
    iface = grid.interface_index
    rows = (
        (float(x), float(w), "local" if i <= iface else "nonlocal")
        for i, (x, w) in enumerate(zip(grid.positions, state.values))
    )
    write_csv(path, ("x", "w", "region"), rows)


def run_simulate(cfg: SimConfig, svg: bool = False) -> list:
    kernel, constants, grid, generator = _setup(cfg)
    scheme = scheme_from(cfg)
    if scheme.kind == "explicit" and scheme.dt != "auto":
        limit = cfl_limit(generator)
        if float(scheme.dt) > limit * (1.0 + 1e-12):
            raise ConfigError(
                f"time.dt: {scheme.dt} exceeds the explicit CFL limit {limit:.6g}"
            )
    w0 = initial_state(cfg, grid)

    if scheme.kind == "picard":
        scheme.window_for(constants)  # validates the window against the constants
        traj, report = picard_window_solve(
            grid, kernel, constants, w0, scheme, cfg.time_horizon
        )
    else:
        report = None
        traj = evolve(generator, w0, scheme, cfg.time_horizon, cfg.time_snapshot_stride)

    out = Path(cfg.output_dir)
    artifacts = []
    ts = out / "timeseries.csv"
    _write_timeseries(ts, traj)
    artifacts.append(ts)
    for k, (_, state) in enumerate(traj.snapshots):
        snap = out / f"snapshot_{k:06d}.csv"
        _write_snapshot(snap, state)
        artifacts.append(snap)

    resolved = replace(cfg, time_dt=traj.dt)
    if scheme.kind == "picard":
        resolved = replace(resolved, picard_window=scheme.window_for(constants))
    manifest = out / "manifest.cfg"
    header = "# manifest: resolved parameters; re-parses as a config\n"
    extra = ""
    if report is not None:
        extra = (
            f"# picard.windows = {report.window_count}; "
            f"iterations = {report.iterations}; kappa = {report.kappa:.6g}\n"
        )
    atomic_write_text(manifest, header + extra + config_to_text(resolved))
    artifacts.append(manifest)

    try:
        spectral = estimate_beta1(generator)
        decay = decay_report(traj, spectral)
        dec = out / "decay.csv"
        write_csv(
            dec,
            ("fitted_rate", "beta1", "lambda2", "r_squared", "bound_satisfied"),
            [(
                decay.fitted_rate,
                spectral.beta1,
                spectral.lambda2,
                decay.r_squared,
                decay.bound_satisfied,
            )],
        )
        artifacts.append(dec)
    except ValueError:
        pass  # too few usable samples for a fit; timeseries still stands

    if svg:
        plot = out / "dist_to_mean.svg"
        svg_line_plot(
            plot,
            traj.times.tolist(),
            traj.dist_to_mean.tolist(),
            title="distance to mean",
            xlabel="t",
            ylabel="||w - mean||",
            log_y=True,
        )
        artifacts.append(plot)
    return artifacts


def run_spectrum(cfg: SimConfig, pure_heat: bool = False) -> list:
    if pure_heat:
        n = cfg.grid_n_local + cfg.grid_n_nonlocal
        generator = assemble_heat_generator(n)
        spectral = estimate_beta1(generator)
        row = (n, 0, 0.0, spectral.beta1, spectral.lambda2, spectral.residual,
               float("nan"))
    else:
        kernel, constants, grid, generator = _setup(cfg)
        spectral = estimate_beta1(generator)
        k_hat = estimate_energy_control_k(
            grid, kernel, constants, n_samples=SPECTRUM_SAMPLES, seed=cfg.seed
        )
        row = (
            cfg.grid_n_local,
            cfg.grid_n_nonlocal,
            cfg.kernel_epsilon,
            spectral.beta1,
            spectral.lambda2,
            spectral.residual,
            k_hat,
        )
    path = Path(cfg.output_dir) / "spectrum.csv"
    write_csv(
        path,
        ("n_local", "n_nonlocal", "epsilon", "beta1", "lambda2", "residual", "k_estimate"),
        [row],
    )
    return [path]


def run_sweep(cfg: SimConfig, eps_list, svg: bool = False) -> list:
    try:
        rows = epsilon_sweep(cfg, eps_list)
    except ValueError as exc:
        raise ConfigError(f"sweep epsilon list: {exc}") from exc
    path = Path(cfg.output_dir) / "sweep.csv"
    write_csv(
        path,
        ("epsilon", "n_nonlocal", "dt", "sup_error_l2", "beta1_eps"),
        [(r.epsilon, r.n_nonlocal, r.dt, r.sup_error_l2, r.beta1_eps) for r in rows],
    )
    artifacts = [path]
    if svg:
        plot = Path(cfg.output_dir) / "sweep.svg"
        svg_line_plot(
            plot,
            [r.epsilon for r in rows],
            [r.sup_error_l2 for r in rows],
            title="rescaling convergence",
            xlabel="epsilon",
            ylabel="sup L2 error",
            log_x=True,
            log_y=True,
        )
        artifacts.append(plot)
    return artifacts


def _parse_eps(raw: str):
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--eps: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="couplediff",
        description="Coupled local/nonlocal diffusion simulator and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "spectrum", "sweep-epsilon", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", help="override output.dir")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        if name in ("simulate", "sweep-epsilon"):
            p.add_argument("--svg", action="store_true", help="also write SVG plots")
        if name == "sweep-epsilon":
            p.add_argument(
                "--eps",
                default="0.4,0.2,0.1,0.05",
                help="comma-separated decreasing epsilon values",
            )
        if name == "spectrum":
            p.add_argument(
                "--pure-heat",
                action="store_true",
                help="diagnostic single-domain Neumann Laplacian instead of the coupled model",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            set_key(cfg, key.strip(), value.strip())
        if args.out:
            cfg.output_dir = args.out
        validate(cfg)

        if args.command == "simulate":
            artifacts = run_simulate(cfg, svg=args.svg)
        elif args.command == "spectrum":
            artifacts = run_spectrum(cfg, pure_heat=args.pure_heat)
        elif args.command == "sweep-epsilon":
            artifacts = run_sweep(cfg, _parse_eps(args.eps), svg=args.svg)
        else:
            return verify_mod.run_all(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
