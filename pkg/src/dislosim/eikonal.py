"""Monotone explicit solver for the local eikonal equation u_t = a(x,t)|Du|.

The spatial operator is the first-order Osher-Sethian upwind stencil.  With
one-sided differences D-_k = (u_i - u_{i-ek})/h and D+_k = (u_{i+ek} - u_i)/h,

    grad_sup = sqrt( sum_k  max(D+_k, 0)^2 + min(D-_k, 0)^2 )   for a > 0
    grad_inf = sqrt( sum_k  max(D-_k, 0)^2 + min(D+_k, 0)^2 )   for a < 0

    u_new = u + dt * ( max(a,0) * grad_sup + min(a,0) * grad_inf )

For a > 0 this realizes the sup-propagation (values spread from high to low),
for a < 0 the inf-propagation; a strict local max is frozen under expansion
and a strict local min under contraction, giving a discrete maximum
principle: min u <= u_new <= max u nodewise.

The one-step map is nondecreasing in every stencil value provided
dt * |a| * sqrt(2 dim) <= h; the default CFL factor 0.5 with the admissible
step dt <= cfl * h / (dim * sup|a|) stays inside that bound (cfl must be
<= sqrt(dim/2) for strict monotonicity, so <= 0.707 in 1-D).

Speeds are frozen over each step (explicit in time), consistent with a
velocity entering the equation only through its time integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CFLError, ConfigurationError, DomainTooSmallError
from .grid import Grid, ScalarField

_DIV_GUARD = 1e-300


@dataclass
class SpeedField:
    """Speed a(., t) frozen over one time step, with its cached sup norm."""

    values: np.ndarray
    sup: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "SpeedField":
        vals = np.asarray(values, dtype=np.float64)
        return cls(values=vals, sup=float(np.abs(vals).max()) if vals.size else 0.0)

    @classmethod
    def constant(cls, value: float, grid: Grid) -> "SpeedField":
        return cls(values=np.full(grid.shape, float(value)), sup=abs(value))


@dataclass
class StepControl:
    """Time stepping policy.

    cfl: stability factor in (0, 1]; strict scheme monotonicity additionally
        needs cfl <= sqrt(dim/2).
    t_end: horizon.
    dt: fixed step; if None it is derived from a speed bound so that runs
        sharing the bound share step times (deterministic stepping).
    collar_width: nodes clamped to -1 at the box boundary after each step.
    store_every: snapshot thinning for stored trajectories.
    """

    t_end: float
    cfl: float = 0.5
    dt: float | None = None
    collar_width: int = 1
    store_every: int = 1

    def __post_init__(self) -> None:
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigurationError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.t_end <= 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if self.store_every < 1:
            raise ConfigurationError("store_every must be >= 1")

    def resolve_dt(self, grid: Grid, speed_bound: float) -> float:
        """Fixed step: largest dt <= admissible that divides t_end evenly."""
        if self.dt is not None:
            return self.dt
        limit = admissible_dt(grid, speed_bound, self.cfl)
        n_steps = max(1, int(math.ceil(self.t_end / limit - 1e-12)))
        return self.t_end / n_steps


@dataclass
class Trajectory:
    """Fields stored at increasing times."""

    times: list[float] = field(default_factory=list)
    fields: list[ScalarField] = field(default_factory=list)

    def append(self, f: ScalarField) -> None:
        self.times.append(f.time)
        self.fields.append(f)

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def at_time(self, t: float) -> ScalarField:
        """Field at the latest stored time <= t (piecewise-constant lookup)."""
        times = np.asarray(self.times)
        idx = int(np.searchsorted(times, t + 1e-12, side="right")) - 1
        idx = max(idx, 0)
        return self.fields[idx]

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        times = np.asarray(self.times)
        idx = int(np.argmin(np.abs(times - t)))
        if abs(times[idx] - t) > tol:
            raise ConfigurationError(f"time {t} not stored (nearest {times[idx]})")
        return idx


def admissible_dt(grid: Grid, speed_sup: float, cfl: float = 0.5) -> float:
    """CFL-admissible step cfl * h / (dim * sup|a|)."""
    return cfl * grid.h / (grid.dim * max(speed_sup, _DIV_GUARD))


def upwind_gradients(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(grad_sup, grad_inf) of the Osher-Sethian stencil.

    Boundary one-sided differences use edge replication (zero difference);
    the collar clamp makes their exact value irrelevant.
    """
    dim = values.ndim
    sup_acc = np.zeros_like(values)
    inf_acc = np.zeros_like(values)
    for ax in range(dim):
        padded = np.pad(values, [(1, 1) if k == ax else (0, 0) for k in range(dim)], mode="edge")
        sl_lo = tuple(slice(0, -2) if k == ax else slice(None) for k in range(dim))
        sl_hi = tuple(slice(2, None) if k == ax else slice(None) for k in range(dim))
        dminus = (values - padded[sl_lo]) / h
        dplus = (padded[sl_hi] - values) / h
        sup_acc += np.maximum(dplus, 0.0) ** 2 + np.minimum(dminus, 0.0) ** 2
        inf_acc += np.maximum(dminus, 0.0) ** 2 + np.minimum(dplus, 0.0) ** 2
    return np.sqrt(sup_acc), np.sqrt(inf_acc)


def apply_collar(values: np.ndarray, grid: Grid, width: int) -> None:
    """Clamp the boundary collar to -1 in place."""
    if width <= 0:
        return
    mask = grid.collar_mask(width)
    values[mask] = -1.0


def eikonal_step(
    u: ScalarField,
    a: SpeedField,
    dt: float,
    cfl: float = 0.5,
    collar_width: int = 1,
) -> ScalarField:
    """One explicit upwind step of u_t = a |Du|; collar nodes reset to -1."""
    grid = u.grid
    limit = admissible_dt(grid, a.sup, cfl)
    if dt > limit * (1.0 + 1e-12):
        raise CFLError(
            f"dt={dt:.3e} violates the CFL bound; admissible dt <= {limit:.3e} "
            f"(cfl={cfl}, h={grid.h:.3e}, sup|a|={a.sup:.3e}, dim={grid.dim})"
        )
    gsup, ginf = upwind_gradients(u.values, grid.h)
    av = a.values
    new_vals = u.values + dt * (np.maximum(av, 0.0) * gsup + np.minimum(av, 0.0) * ginf)
    apply_collar(new_vals, grid, collar_width)
    return ScalarField(grid, new_vals, u.time + dt)


def check_domain(values: np.ndarray, grid: Grid, collar_width: int, t: float) -> None:
    """Raise if the zero superlevel set reached the collar neighborhood."""
    guard = grid.collar_mask(collar_width + 1)
    if np.any(values[guard] >= 0.0):
        raise DomainTooSmallError(
            f"front reached the boundary collar at t={t:.6g}; enlarge the grid extent"
        )


def solve_fixed_speed(
    u0: ScalarField,
    a_of_t: Callable[[float], SpeedField],
    ctrl: StepControl,
    speed_bound: float | None = None,
) -> Trajectory:
    """March u_t = a(x,t)|Du| from u0 to ctrl.t_end with per-step frozen speed.

    Either ctrl.dt or speed_bound must be given so the step size is fixed up
    front; the per-step CFL check still guards against an underestimated
    bound.  Snapshots are stored every ctrl.store_every steps (first and last
    always included).
    """
    if ctrl.dt is None and speed_bound is None:
        raise ConfigurationError("solve_fixed_speed needs ctrl.dt or a speed_bound")
    dt = ctrl.resolve_dt(u0.grid, speed_bound if speed_bound is not None else 0.0)
    n_steps = max(1, int(round(ctrl.t_end / dt)))
    if abs(n_steps * dt - ctrl.t_end) > 1e-9 * max(1.0, ctrl.t_end):
        n_steps = int(math.ceil(ctrl.t_end / dt - 1e-12))
        dt = ctrl.t_end / n_steps

    u = u0.copy()
    apply_collar(u.values, u.grid, ctrl.collar_width)
    traj = Trajectory()
    traj.append(u)
    for k in range(n_steps):
        t = k * dt
        u = eikonal_step(u, a_of_t(t), dt, ctrl.cfl, ctrl.collar_width)
        u.time = (k + 1) * dt
        check_domain(u.values, u.grid, ctrl.collar_width, u.time)
        if (k + 1) % ctrl.store_every == 0 or (k + 1) == n_steps:
            traj.append(u)
    return traj


def oleinik_lax_1d(
    u0: Callable[[np.ndarray], np.ndarray],
    x: float,
    t: float,
    sign: str = "inf",
    radius: float | None = None,
    samples: int = 10_000,
    refine_tol: float = 1e-12,
) -> float:
    """Inf/sup of u0 over the ball [x - r, x + r], the closed-form solution
    of u_t = a |u_x| with spatially constant a (r = |a| t).

    Dense sampling (default 1e4 points) followed by golden-section refinement
    around the best sample down to refine_tol in the argument.
    """
    r = abs(t) if radius is None else radius
    if r < 0:
        raise ConfigurationError("radius must be >= 0")
    if sign not in ("inf", "sup"):
        raise ConfigurationError(f"sign must be 'inf' or 'sup', got {sign!r}")
    if r == 0.0:
        return float(np.asarray(u0(np.array([x])))[0])
    xs = np.linspace(x - r, x + r, samples)
    vals = np.asarray(u0(xs), dtype=np.float64)
    if sign == "inf":
        best = int(np.argmin(vals))
        better = min
    else:
        best = int(np.argmax(vals))
        better = max
    lo = xs[max(best - 1, 0)]
    hi = xs[min(best + 1, samples - 1)]

    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a_, b_ = lo, hi
    c_ = b_ - phi * (b_ - a_)
    d_ = a_ + phi * (b_ - a_)
    fc = float(u0(np.array([c_]))[0])
    fd = float(u0(np.array([d_]))[0])
    while b_ - a_ > refine_tol:
        take_c = (fc <= fd) if sign == "inf" else (fc >= fd)
        if take_c:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - phi * (b_ - a_)
            fc = float(u0(np.array([c_]))[0])
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + phi * (b_ - a_)
            fd = float(u0(np.array([d_]))[0])
    cand = float(u0(np.array([(a_ + b_) / 2.0]))[0])
    return better(float(vals[best]), cand)
