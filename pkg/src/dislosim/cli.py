"""Scenario runner: `dislosim run <config.json>`, `dislosim compare <a> <b>`,
`dislosim list-scenarios`.

A run writes a self-describing directory: manifest.txt (resolved config and
the physical constants M0, L0, M1, L1 plus residuals and flags), one binary
snapshot per stored time for u (and chi for the weak engine), report.csv
with the diagnostic time series, and optional PGM rasters of u with the zero
band painted black.  Re-running the config embedded in manifest.txt
reproduces the directory bit for bit: iteration orders are fixed and nothing
is seeded from the clock.

Exit codes: 1 config error, 2 numerical failure (CFL or domain overflow),
3 fixed-point non-convergence (results are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError
from .grid import ScalarField, superlevel_indicator
from .eikonal import SpeedField, Trajectory, solve_fixed_speed
from .kernels import OccupancyField
from .weak import FixedPointConfig, solve_weak
from .slepcev import SlepcevConfig, counterexample_family, solve_slepcev
from . import diagnostics, scenarios, snapshots

OUTPUT_ROOT_ENV = "DISLOSIM_OUTPUT_ROOT"


def _output_dir(cfg: dict) -> Path:
    out = cfg.get("output", {})
    directory = out.get("directory", f"runs/{cfg.get('name', 'run')}")
    root = os.environ.get(OUTPUT_ROOT_ENV)
    path = Path(root) / directory if root else Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_pgm(field: ScalarField, path: Path, band: float) -> None:
    """8-bit PGM: u mapped linearly from [-1, 1] to [255, 0], zero band 0."""
    vals = field.values if field.grid.dim == 2 else field.values[np.newaxis, :]
    gray = np.clip(np.round((1.0 - vals) / 2.0 * 255.0), 0, 255).astype(np.uint8)
    gray[np.abs(vals) <= band] = 0
    with open(path, "wb") as fh:
        fh.write(f"P5\n{gray.shape[1]} {gray.shape[0]}\n255\n".encode())
        fh.write(gray.tobytes())


def _write_manifest(path: Path, cfg: dict, constants: dict, extras: dict) -> None:
    with open(path / "manifest.txt", "w") as fh:
        fh.write(f"name={cfg.get('name', 'run')}\n")
        fh.write(f"engine={cfg['engine']}\n")
        for k, v in constants.items():
            fh.write(f"{k}={v!r}\n")
        for k, v in extras.items():
            fh.write(f"{k}={v!r}\n")
        fh.write(f"config_json={json.dumps(cfg, sort_keys=True)}\n")


def run_scenario(raw_cfg: dict) -> tuple[int, Path]:
    """Execute one scenario; returns (exit code, run directory)."""
    problem = scenarios.build_problem(raw_cfg)
    cfg = problem.config
    out_dir = _output_dir(cfg)
    solver_cfg = cfg.get("solver", {})
    out_cfg = cfg.get("output", {})
    band = problem.grid.h

    exit_code = 0
    extras: dict = {}
    chi_fields = None

    if problem.engine == "local":
        traj = solve_fixed_speed(
            problem.u0,
            lambda t: SpeedField.from_values(problem.c1.sample_on(problem.grid, t)),
            problem.stepper,
            speed_bound=problem.c1.M1,
        )
    elif problem.engine == "slepcev":
        s_cfg = SlepcevConfig(
            stepper=problem.stepper,
            mode=solver_cfg.get("mode", "auto"),
            bins=int(solver_cfg.get("bins", 64)),
        )
        traj = solve_slepcev(problem.u0, problem.kernel, problem.c1, s_cfg)
    elif problem.engine == "counterexample":
        gamma_val = float(solver_cfg.get("gamma", 1.0))
        traj, chis, _ = counterexample_family(
            lambda t: gamma_val, problem.grid, t_end=problem.horizon, ctrl=problem.stepper
        )
        chi_fields = [
            OccupancyField(problem.grid, c, t) for c, t in zip(chis, traj.times)
        ]
    else:  # weak
        fp = FixedPointConfig(
            stepper=problem.stepper,
            eps_schedule=solver_cfg.get("eps_schedule"),
            max_picard=int(solver_cfg.get("max_picard", 25)),
            tol=float(solver_cfg.get("tol", 1e-6)),
            relax=float(solver_cfg.get("relax", 1.0)),
            occupancy_every=int(solver_cfg.get("occupancy_every", 1)),
        )
        ws = solve_weak(problem.u0, problem.kernel, problem.c1, fp)
        traj = ws.u
        chi_fields = ws.chi
        extras.update(
            residual=ws.residual,
            converged=ws.converged,
            classical=ws.classical,
            eps_final=ws.eps_final,
            max_sandwich_violations=max(ws.sandwich_violations, default=0),
        )
        if not ws.converged:
            exit_code = 3

    for i, f in enumerate(traj.fields):
        snapshots.write_snapshot(f, out_dir / f"u_{i:05d}.dls")
        if out_cfg.get("images"):
            write_pgm(f, out_dir / f"u_{i:05d}.pgm", band)
    if chi_fields is not None:
        for i, c in enumerate(chi_fields):
            snapshots.write_snapshot(
                ScalarField(problem.grid, c.values, c.time), out_dir / f"chi_{i:05d}.dls"
            )

    report = diagnostics.build_report(traj, band=band)
    report.to_csv(out_dir / "report.csv")

    constants = {
        "M0": problem.kernel.M0,
        "L0": problem.kernel.L0,
        "m0": problem.kernel.m0,
        "M1": problem.c1.M1,
        "L1": problem.c1.L1,
        "h": problem.grid.h,
        "times_stored": len(traj.times),
    }
    _write_manifest(out_dir, cfg, constants, extras)
    return exit_code, out_dir


def rerun_from_manifest(run_dir: str | Path) -> tuple[int, Path]:
    """Re-execute the config embedded in a run's manifest."""
    manifest = Path(run_dir) / "manifest.txt"
    cfg = None
    for line in manifest.read_text().splitlines():
        if line.startswith("config_json="):
            cfg = json.loads(line[len("config_json="):])
    if cfg is None:
        raise ConfigurationError(f"{manifest} has no config_json line")
    return run_scenario(cfg)


def _load_run(run_dir: Path) -> Trajectory:
    traj = Trajectory()
    for p in sorted(run_dir.glob("u_*.dls")):
        traj.append(snapshots.read_snapshot(p))
    if len(traj) == 0:
        raise ConfigurationError(f"{run_dir} holds no snapshots")
    return traj


def compare_runs(dir_a: str | Path, dir_b: str | Path, out_path: str | Path | None = None) -> list[dict]:
    """Running sup deviation and zero-set symmetric differences of two runs.

    Zero sets are extracted at the one-cell level {u >= -h} so that plateaus
    settling a hair below the level still count."""
    a = _load_run(Path(dir_a))
    b = _load_run(Path(dir_b))
    if a.grid != b.grid:
        raise ConfigurationError("runs use different grids")
    if len(a) != len(b) or any(
        abs(x - y) > 1e-9 for x, y in zip(a.times, b.times)
    ):
        raise ConfigurationError("runs store different times")
    band = a.grid.h
    rows: list[dict] = []
    running = 0.0
    for fa, fb in zip(a.fields, b.fields):
        running = max(running, float(np.max(np.abs(fa.values - fb.values))))
        ia = superlevel_indicator(fa, -band)
        ib = superlevel_indicator(fb, -band)
        rows.append(
            {
                "time": fa.time,
                "alpha": running,
                "zero_set_symdiff": diagnostics.symmetric_difference_measure(ia, ib),
            }
        )
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write("time,alpha,zero_set_symdiff\n")
            for r in rows:
                fh.write(f"{r['time']!r},{r['alpha']!r},{r['zero_set_symdiff']!r}\n")
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dislosim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config (JSON)")
    p_run.add_argument("config", help="path to a JSON config file")

    p_cmp = sub.add_parser("compare", help="compare two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--out", default=None, help="CSV output path")

    sub.add_parser("list-scenarios", help="list built-in scenarios")

    args = parser.parse_args(argv)

    if args.command == "list-scenarios":
        for name, cfg in sorted(scenarios.builtin_scenarios().items()):
            print(f"{name}: {cfg.get('comment', '')}")
        return 0

    if args.command == "compare":
        try:
            rows = compare_runs(args.dir_a, args.dir_b, args.out)
        except ConfigurationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if args.out is None:
            print("time,alpha,zero_set_symdiff")
            for r in rows:
                print(f"{r['time']!r},{r['alpha']!r},{r['zero_set_symdiff']!r}")
        return 0

    # run
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        code, out_dir = run_scenario(raw)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"run written to {out_dir}")
    if code == 3:
        print("warning: fixed point did not converge; results written anyway", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
