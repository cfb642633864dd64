"""Command-line surface: config parsing, run orchestration, file emission.

Subcommands: ``simulate`` (the coupled run), ``witness`` (the sweep),
``nash`` (solve a game file), ``feedback-check`` (finite-difference oracle
report for the feedback fields), ``vink`` (walker-ensemble equivariance
check). Config files are flat JSON objects whose keys mirror
SimulationConfig / WitnessConfig; CLI flags override file values. Floats
are written with shortest round-trip decimals so outputs are byte-stable.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from ._version import __version__
from . import nash as nash_mod
from . import witness as witness_mod
from .coupled import ConfigError, RunRecord, SimulationConfig, run_coupled
from .numerics import PhysicalConstants, make_gaussian, make_grid
from .potentials import GravityParams, feedback_first, feedback_second
from .trajectories import run_equivariance_check

TRAJECTORY_HEADER = ("t,X1,X2,v1,v2,norm1,norm2,residual1,residual2,"
                     "net_gain,overlap,distance")


def _fmt(value: float) -> str:
    return repr(float(value))


def parse_simulation_config(path: str | None, overrides: dict) -> SimulationConfig:
    """Resolve a SimulationConfig from an optional flat JSON file plus overrides.

    Unknown keys and type mismatches are rejected with the offending key
    named; constraint violations surface from validate() the same way.
    """
    known = {f.name: f for f in dataclass_fields(SimulationConfig)}
    data = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file: expected a flat JSON object")
        data.update(raw)
    data.update(overrides)
    cleaned = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{key}: unknown configuration key")
        cleaned[key] = _coerce(key, value)
    config = SimulationConfig(**cleaned)
    config.validate()
    return config


def _coerce(key: str, value):
    int_keys = {"n_points", "seed", "record_waves_every"}
    str_keys = {"feedback_sign", "f2_variant", "trajectory_mode",
                "update_scheme", "impulse_mode", "derivative_scheme"}
    bool_keys = {"interactions_enabled"}
    if key == "tau_cap" and value is None:
        return None
    if key == "initial_directions":
        if value is None:
            return None
        try:
            return tuple(int(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a pair of +-1") from exc
    if key in int_keys:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if key in str_keys:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if key in bool_keys:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def emit_run(record: RunRecord, out_dir: str | Path,
             started: float | None = None) -> Path:
    """Write trajectory.csv and manifest.json; returns the output directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [TRAJECTORY_HEADER]
    for i in range(record.n_recorded):
        lines.append(",".join(_fmt(col[i]) for col in (
            record.time, record.x1, record.x2, record.v1, record.v2,
            record.norm1, record.norm2, record.residual_first,
            record.residual_second, record.net_gain, record.overlap,
            record.distance)))
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")
    manifest = record.manifest()
    manifest["started_unix"] = started
    manifest["finished_unix"] = time.time() if started is not None else None
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True) + "\n")
    return out


def _run_and_emit(config: SimulationConfig, out_dir: str):
    """Worker for seed sweeps: one full run emitted into its own directory."""
    started = time.time()
    record = run_coupled(config)
    emit_run(record, out_dir, started=started)
    return record.abort_status, record.aborted_step, record.n_recorded


def _cmd_simulate(args) -> int:
    overrides = {}
    for key in ("seed", "dt"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.steps is not None:
        dt = overrides.get("dt")
        if dt is None:
            base = parse_simulation_config(args.config, {})
            dt = base.dt
        overrides["total_time"] = args.steps * dt
    if args.mode is not None:
        overrides["trajectory_mode"] = args.mode
    if args.f2_variant is not None:
        overrides["f2_variant"] = args.f2_variant
    if args.feedback_sign is not None:
        overrides["feedback_sign"] = args.feedback_sign
    config = parse_simulation_config(args.config, overrides)

    if args.seeds is None:
        status, step, n_rec = _run_and_emit(config, args.out)
        if status is not None:
            print(f"aborted: {status} at step {step}", file=sys.stderr)
            return 3
        print(f"wrote {args.out}/trajectory.csv ({n_rec} steps)")
        return 0

    # seed sweep: independent runs, one subdirectory per seed
    from concurrent.futures import ProcessPoolExecutor
    from dataclasses import replace as dc_replace

    jobs = [(dc_replace(config, seed=seed), str(Path(args.out) / f"seed{seed}"))
            for seed in range(args.seeds)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_and_emit, *zip(*jobs)))
    else:
        results = [_run_and_emit(cfg, out) for cfg, out in jobs]
    aborted = [(jobs[i][1], r[0]) for i, r in enumerate(results)
               if r[0] is not None]
    for out_dir, status in aborted:
        print(f"aborted: {status} in {out_dir}", file=sys.stderr)
    print(f"wrote {len(jobs)} runs under {args.out}/seed*/ "
          f"({len(aborted)} aborted)")
    return 3 if aborted else 0


def _cmd_witness(args) -> int:
    kwargs = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from exc
        allowed = {"delta_x_wide", "delta_x_split", "gammas", "r_values",
                   "distance_floor"}
        for key, value in raw.items():
            if key not in allowed:
                raise ConfigError(f"{key}: unknown configuration key")
            if key == "gammas":
                value = tuple(float(v) for v in value)
            elif key == "r_values":
                value = np.asarray(value, dtype=np.float64)
            kwargs[key] = value
    try:
        config = witness_mod.WitnessConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    curves = witness_mod.sweep_witness(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = witness_mod.curves_to_rows(curves)
    path = out / "witness.csv"
    path.write_text("\n".join(",".join(row) for row in rows) + "\n")
    print(f"wrote {path} ({len(rows) - 1} rows, "
          f"{len(config.gammas)} gamma curves)")
    return 0


def _cmd_nash(args) -> int:
    try:
        game = nash_mod.load_game(args.game)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"game file: {exc}") from exc
    profile, status = nash_mod.find_equilibrium(
        game, tol=args.tol, damping=args.damping)
    lines = [f"status: {status}",
             f"x: {' '.join(_fmt(v) for v in profile.x)}",
             f"y: {' '.join(_fmt(v) for v in profile.y)}",
             f"max_gain: {_fmt(nash_mod.max_gain(profile, game))}"]
    checks = nash_mod.best_response_check(profile, game)
    lines.append(f"best_response: {checks[0]} {checks[1]}")
    if max(game.shape) <= 3:
        result = nash_mod.enumerate_equilibria_small(game)
        lines.append(f"oracle_equilibria: {len(result.equilibria)}"
                     + (" (degenerate)" if result.degenerate else ""))
        for eq in result.equilibria:
            lines.append("  x: " + " ".join(_fmt(v) for v in eq.x)
                         + " | y: " + " ".join(_fmt(v) for v in eq.y))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "nash.txt").write_text(text)
    print(text, end="")
    return 0


def _cmd_feedback_check(args) -> int:
    """Finite-difference oracle report for the second-order feedback field.

    Differentiates the derivative-convention first-order field centrally in
    the other particle's coordinate and compares against both second-order
    variants over randomly sampled configurations.
    """
    rng = np.random.default_rng(args.seed)
    grid = make_grid(200, 40.0)
    constants = PhysicalConstants()
    h = 1e-4
    print("feedback-check: d/dx2 of first-order field vs second-order variants")
    print(f"  samples per softening: {args.samples}; fd step h = {h:g}")
    worst_analytic = 0.0
    worst_printed = 0.0
    for eps in (0.1, 0.5, 1.0):
        params = GravityParams(constants, eps)
        rel_analytic = []
        rel_printed = []
        for _ in range(args.samples):
            x1 = float(rng.uniform(-12.0, 12.0))
            x2 = float(rng.uniform(-12.0, 12.0))
            if abs(x1 - x2) < 0.5:
                x2 = x1 + 0.5
            plus = feedback_first(grid, x1, x2 + h, params, sign=-1.0)
            minus = feedback_first(grid, x1, x2 - h, params, sign=-1.0)
            fd = (plus - minus) / (2.0 * h)
            scale = float(np.max(np.abs(fd))) or 1.0
            ana = feedback_second(grid, x1, x2, params, variant="analytic")
            pri = feedback_second(grid, x1, x2, params, variant="printed")
            rel_analytic.append(float(np.max(np.abs(ana - fd))) / scale)
            rel_printed.append(float(np.max(np.abs(pri - fd))) / scale)
        worst_analytic = max(worst_analytic, max(rel_analytic))
        worst_printed = max(worst_printed, max(rel_printed))
        print(f"  eps={eps:<4}: analytic max rel err {max(rel_analytic):.3e}"
              f" | printed max rel err {max(rel_printed):.3e}")
    print(f"  overall: analytic {worst_analytic:.3e} (matches the oracle); "
          f"printed {worst_printed:.3e} (printed formula, does not)")
    return 0


def _cmd_vink(args) -> int:
    grid = make_grid(args.n_points, args.length)
    constants = PhysicalConstants()
    psi0 = make_gaussian(grid, 0.0, args.sigma)
    tv = run_equivariance_check(psi0, 1.0, constants, args.dt, args.t_final,
                                args.walkers, args.seed)
    print(f"vink equivariance: TV distance {tv:.4f} "
          f"({args.walkers} walkers, t={args.t_final:g}, 50 bins)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotgrav",
        description="coupled pilot-wave simulator and companion tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the coupled two-particle loop")
    sim.add_argument("--config", default=None, help="flat JSON config file")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--steps", type=int, default=None,
                     help="override step count (total_time = steps*dt)")
    sim.add_argument("--dt", type=float, default=None)
    sim.add_argument("--mode", choices=("guidance", "vink"), default=None)
    sim.add_argument("--f2-variant", dest="f2_variant",
                     choices=("printed", "analytic"), default=None)
    sim.add_argument("--feedback-sign", dest="feedback_sign",
                     choices=("+", "-"), default=None)
    sim.add_argument("--seeds", type=int, default=None,
                     help="sweep seeds 0..N-1 into <out>/seed<k>/")
    sim.add_argument("--workers", type=int, default=1,
                     help="parallel workers for the seed sweep")
    sim.set_defaults(func=_cmd_simulate)

    wit = sub.add_parser("witness", help="entanglement-witness sweep")
    wit.add_argument("--config", default=None)
    wit.add_argument("--out", default="out")
    wit.set_defaults(func=_cmd_witness)

    nsh = sub.add_parser("nash", help="solve a bimatrix game file")
    nsh.add_argument("--game", required=True, help="two matrices, blank-line separated")
    nsh.add_argument("--out", default=None)
    nsh.add_argument("--tol", type=float, default=1e-6)
    nsh.add_argument("--damping", type=float, default=1.0)
    nsh.set_defaults(func=_cmd_nash)

    fbc = sub.add_parser("feedback-check",
                         help="finite-difference oracle report for feedback fields")
    fbc.add_argument("--samples", type=int, default=100)
    fbc.add_argument("--seed", type=int, default=0)
    fbc.set_defaults(func=_cmd_feedback_check)

    vnk = sub.add_parser("vink", help="walker-ensemble equivariance check")
    vnk.add_argument("--walkers", type=int, default=10_000)
    vnk.add_argument("--t-final", dest="t_final", type=float, default=2.0)
    vnk.add_argument("--dt", type=float, default=0.01)
    vnk.add_argument("--sigma", type=float, default=1.0)
    vnk.add_argument("--n-points", dest="n_points", type=int, default=1000)
    vnk.add_argument("--length", type=float, default=100.0)
    vnk.add_argument("--seed", type=int, default=0)
    vnk.set_defaults(func=_cmd_vink)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
