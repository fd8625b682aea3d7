"""Built-in scenario configurations and config-to-problem assembly.

A scenario config is a flat JSON document with nested sections per
subsystem; all physical constants are computed from the kernel and external
velocity and logged, never silently defaulted.  A config may name a built-in
scenario through the "scenario" key, whose settings it then overrides
field by field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigurationError
from .grid import Disk, DiskUnion, Grid, Interval, ScalarField, make_signed_initial
from .eikonal import SpeedField, StepControl
from .kernels import ExternalVelocity, KernelSpec
from .oracles import c1_law
from . import snapshots

ENGINES = ("weak", "slepcev", "local", "counterexample")


def builtin_scenarios() -> dict[str, dict]:
    """Named ready-to-run configurations."""
    return {
        "example_3_2": {
            "name": "example_3_2",
            "engine": "counterexample",
            "comment": "1-D sign-changing load: the front shrinks to the origin "
            "and then fattens; gamma picks the realized occupancy weight",
            "grid": {"dim": 1, "origin": [0.0], "extent": 4.0, "n": 801},
            "kernel": {"builtin": "box", "height": 1.0, "radius": 3.5},
            "c1": {"builtin": "parabolic_pulse"},
            "initial": {"shape": "interval", "a": -1.0, "b": 1.0},
            "horizon": 2.0,
            "solver": {"cfl": 0.5, "gamma": 1.0, "mode": "exact"},
            "output": {"store_every": 40, "images": False},
        },
        "example_3_2_slepcev": {
            "name": "example_3_2_slepcev",
            "engine": "slepcev",
            "comment": "all-level run of the same 1-D fattening benchmark",
            "grid": {"dim": 1, "origin": [0.0], "extent": 4.0, "n": 801},
            "kernel": {"builtin": "box", "height": 1.0, "radius": 3.5},
            "c1": {"builtin": "parabolic_pulse"},
            "initial": {"shape": "interval", "a": -1.0, "b": 1.0},
            "horizon": 2.0,
            "solver": {"cfl": 0.5, "mode": "exact"},
            "output": {"store_every": 40, "images": False},
        },
        "expanding_two_disks": {
            "name": "expanding_two_disks",
            "engine": "weak",
            "comment": "2-D merger of two disks under a strictly positive load; "
            "stays classical (no fattening)",
            "grid": {"dim": 2, "origin": [0.0, 0.0], "extent": 1.6, "n": 161},
            "kernel": {"builtin": "cone", "height": 0.5, "radius": 0.2},
            "c1": {"builtin": "constant", "value": 1.0},
            "initial": {
                "shape": "disks",
                "disks": [
                    {"center": [-0.35, 0.0], "radius": 0.3},
                    {"center": [0.35, 0.0], "radius": 0.3},
                ],
            },
            "horizon": 0.3,
            "solver": {"cfl": 0.5, "max_picard": 20, "tol": 1e-5, "occupancy_every": 4},
            "output": {"store_every": 15, "images": True},
        },
        "radial_flat_kernel": {
            "name": "radial_flat_kernel",
            "engine": "weak",
            "comment": "2-D disk with a flat kernel: the front radius follows "
            "dr/dt = c1 + k0 pi r^2",
            "grid": {"dim": 2, "origin": [0.0, 0.0], "extent": 1.3, "n": 131},
            "kernel": {"builtin": "box", "height": 0.5, "radius": 2.7},
            "c1": {"builtin": "constant", "value": 1.0},
            "initial": {"shape": "disk", "center": [0.0, 0.0], "radius": 0.25},
            "horizon": 0.2,
            "solver": {"cfl": 0.5, "max_picard": 20, "tol": 1e-5, "occupancy_every": 4},
            "output": {"store_every": 10, "images": False},
        },
        "shrinking_interval": {
            "name": "shrinking_interval",
            "engine": "local",
            "comment": "1-D cone eroded by a constant negative speed",
            "grid": {"dim": 1, "origin": [0.0], "extent": 4.0, "n": 801},
            "kernel": {"builtin": "box", "height": 0.0, "radius": 0.5},
            "c1": {"builtin": "constant", "value": -1.0},
            "initial": {"shape": "interval", "a": -1.0, "b": 1.0},
            "horizon": 0.5,
            "solver": {"cfl": 0.5},
            "output": {"store_every": 10, "images": False},
        },
    }


def resolve_config(raw: dict) -> dict:
    """Merge a named built-in (if any) under the user's overrides."""
    if "scenario" in raw:
        name = raw["scenario"]
        bases = builtin_scenarios()
        if name not in bases:
            raise ConfigurationError(
                f"unknown scenario {name!r}; available: {', '.join(sorted(bases))}"
            )
        merged = _deep_merge(bases[name], {k: v for k, v in raw.items() if k != "scenario"})
        return merged
    return raw


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _require(cfg: dict, key: str, where: str = "config") -> Any:
    if key not in cfg:
        raise ConfigurationError(f"{where} is missing required field {key!r}")
    return cfg[key]


def build_grid(cfg: dict) -> Grid:
    g = _require(cfg, "grid")
    return Grid(
        dim=int(_require(g, "dim", "grid")),
        origin=tuple(float(v) for v in _require(g, "origin", "grid")),
        extent=float(_require(g, "extent", "grid")),
        n=int(_require(g, "n", "grid")),
    )


def build_kernel(cfg: dict, grid: Grid) -> KernelSpec:
    k = _require(cfg, "kernel")
    if "path" in k:
        f = snapshots.read_snapshot(k["path"])
        return KernelSpec.from_samples(f.values, f.grid.h)
    name = _require(k, "builtin", "kernel")
    return KernelSpec.builtin(
        name,
        h=grid.h,
        dim=grid.dim,
        radius=float(_require(k, "radius", "kernel")),
        height=float(k.get("height", 1.0)),
        sigma=k.get("sigma"),
    )


def build_c1(cfg: dict) -> ExternalVelocity:
    c = _require(cfg, "c1")
    name = _require(c, "builtin", "c1")
    if name == "constant":
        return ExternalVelocity.constant(float(_require(c, "value", "c1")))
    if name == "parabolic_pulse":
        # 2(t-1)(2-t): drives the fattening benchmark
        return ExternalVelocity.time_law(c1_law, sup=4.0)
    if name == "sin":
        amp = float(c.get("amplitude", 1.0))
        freq = float(c.get("frequency", 1.0))
        off = float(c.get("offset", 0.0))
        return ExternalVelocity(
            fn=lambda coords, t: off + amp * np.sin(freq * coords[0]),
            M1=abs(off) + abs(amp),
            L1=abs(amp * freq),
        )
    raise ConfigurationError(f"unknown c1 builtin {name!r}")


def build_initial(cfg: dict, grid: Grid, margin: float = 0.0) -> ScalarField:
    s = _require(cfg, "initial")
    shape_name = _require(s, "shape", "initial")
    if shape_name == "interval":
        if grid.dim != 1:
            raise ConfigurationError("initial shape 'interval' needs a 1-D grid")
        shape = Interval(float(_require(s, "a", "initial")), float(_require(s, "b", "initial")))
    elif shape_name == "disk":
        shape = Disk(
            center=tuple(float(v) for v in _require(s, "center", "initial")),
            radius=float(_require(s, "radius", "initial")),
        )
    elif shape_name == "disks":
        disks = tuple(
            Disk(center=tuple(float(v) for v in d["center"]), radius=float(d["radius"]))
            for d in _require(s, "disks", "initial")
        )
        shape = DiskUnion(disks)
    else:
        raise ConfigurationError(f"unknown initial shape {shape_name!r}")
    return make_signed_initial(grid, shape, margin=margin)


def build_stepper(cfg: dict, horizon: float) -> StepControl:
    solver = cfg.get("solver", {})
    out = cfg.get("output", {})
    return StepControl(
        t_end=horizon,
        cfl=float(solver.get("cfl", 0.5)),
        dt=solver.get("dt"),
        collar_width=int(solver.get("collar_width", 1)),
        store_every=int(out.get("store_every", 1)),
    )


@dataclass
class Problem:
    """Assembled scenario inputs."""

    config: dict
    engine: str
    grid: Grid
    u0: ScalarField
    kernel: KernelSpec
    c1: ExternalVelocity
    horizon: float
    stepper: StepControl


def build_problem(raw: dict) -> Problem:
    cfg = resolve_config(raw)
    engine = _require(cfg, "engine")
    if engine not in ENGINES:
        raise ConfigurationError(f"engine must be one of {ENGINES}, got {engine!r}")
    grid = build_grid(cfg)
    horizon = float(_require(cfg, "horizon"))
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    kernel = build_kernel(cfg, grid)
    c1 = build_c1(cfg)
    u0 = build_initial(cfg, grid)
    stepper = build_stepper(cfg, horizon)
    return Problem(
        config=cfg,
        engine=engine,
        grid=grid,
        u0=u0,
        kernel=kernel,
        c1=c1,
        horizon=horizon,
        stepper=stepper,
    )
