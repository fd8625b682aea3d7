"""All-level-set solver for nonnegative kernels, extremal weak solutions and
the non-uniqueness witness family.

Stepping.  Every level of u must move by the velocity of its own superlevel
set.  Evaluating the velocity naively at each node's current value breaks
the discrete comparison principle: when a value plateau (from clamping or
fattening) sits exactly at a node's level, an infinitesimal ordered
perturbation can change the velocity by a finite amount, so the one-step map
is not monotone in the field.  The update used here is instead the level
crossing

    u'(x) = sup { theta : u(x) + dt * Phi_x(c_theta(x)) >= theta },

where c_theta = c1 + c0 * 1{u >= theta} and Phi_x applies the upwind
gradients of the current stencil (grad_sup for positive speed, grad_inf for
negative).  For c0 >= 0 the rows c_theta are nonincreasing in theta, the
crossing is unique, and the map is nondecreasing in every node value: the
threshold theta replaces the self-value in the superlevel set, which is
exactly the non-monotone term of the naive update.  Ordered initial data
therefore stay ordered at every node and step, exactly, whenever two runs
share step times.  Where all node values are distinct the crossing lands
within O(dt) of the naive value, so consistency is unchanged.

Exact mode resolves every distinct node value (1-D); binned mode quantizes
to at most B thresholds (default for 2-D), which for c0 >= 0 biases fronts
outward by at most the reported quantization bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CFLError, ConfigurationError
from .grid import Grid, IndicatorField, ScalarField, superlevel_indicator
from .eikonal import (
    SpeedField,
    StepControl,
    Trajectory,
    admissible_dt,
    apply_collar,
    check_domain,
    solve_fixed_speed,
    upwind_gradients,
)
from .kernels import (
    ExternalVelocity,
    KernelSpec,
    binned_thresholds,
    superlevel_velocity_table,
)
from . import diagnostics
from .oracles import c1_law, x1


@dataclass
class SlepcevConfig:
    """Stepping policy for the all-level solver.

    mode: "exact" resolves every distinct level (the comparison-exact path),
    "binned" uses at most `bins` thresholds, "auto" picks exact in 1-D and
    binned in 2-D.
    """

    stepper: StepControl
    mode: str = "auto"
    bins: int = 64

    def __post_init__(self) -> None:
        if self.mode not in ("auto", "exact", "binned"):
            raise ConfigurationError(f"mode must be auto, exact or binned, got {self.mode!r}")
        if self.bins < 2:
            raise ConfigurationError(f"binned mode needs >= 2 bins, got {self.bins}")


@dataclass
class ExtremalPair:
    """All-level solution with its extremal occupancy evolutions.

    rho_plus/rho_minus are the closed/open zero-superlevel indicators of the
    all-level solution; v_plus/v_minus solve the frozen-occupancy problems
    with speeds c[rho+] and c[rho-].  `unique` is set when the two stay
    within tolerance of each other, i.e. the zero level set never fattens.
    """

    u: Trajectory
    rho_plus: list[IndicatorField]
    rho_minus: list[IndicatorField]
    v_plus: Trajectory
    v_minus: Trajectory
    unique: bool
    max_gap: float
    inclusion_ok: bool
    symdiff_plus: list[float]
    symdiff_minus: list[float]


def _require_nonnegative(kernel: KernelSpec) -> None:
    frames = kernel.frames or ((0.0, kernel.samples),)
    worst = min(float(np.min(s)) for _, s in frames)
    if worst < 0.0:
        raise ConfigurationError(
            "the all-level formulation requires a nonnegative kernel (c0 >= 0); "
            f"got a sample of {worst:.3g}"
        )


def crossing_step(
    u: ScalarField,
    kernel: KernelSpec,
    c1: ExternalVelocity,
    t: float,
    dt: float,
    mode: str,
    bins: int,
    cfl: float,
    collar_width: int,
) -> ScalarField:
    """One monotone level-crossing step of the all-level equation."""
    grid = u.grid
    speed_cap = kernel.M0 + c1.M1
    limit = admissible_dt(grid, speed_cap, cfl)
    if dt > limit * (1.0 + 1e-12):
        raise CFLError(
            f"dt={dt:.3e} violates the CFL bound; admissible dt <= {limit:.3e} "
            f"(cfl={cfl}, h={grid.h:.3e}, speed cap={speed_cap:.3e}, dim={grid.dim})"
        )
    vals = u.values
    if mode == "exact":
        levels = np.unique(vals)
        method = "cumulative" if grid.dim == 1 else "fft"
    else:
        levels = binned_thresholds(vals, bins)
        method = "fft"
    # external load sampled at the step midpoint (second-order in time for
    # the c1 part; the occupancy part stays explicit)
    c1_vals = c1.sample_on(grid, t + dt / 2.0)
    rows = superlevel_velocity_table(
        kernel, c1_vals, vals, levels, t, method=method, quadrature="halved"
    )
    n = vals.size
    m = levels.size
    rows = rows.reshape(m + 1, n)
    gsup, ginf = upwind_gradients(vals, grid.h)

    flat_u = vals.ravel()
    gsup_f = gsup.ravel()
    ginf_f = ginf.ravel()
    node = np.arange(n)

    # Segment j covers theta in (levels[j-1], levels[j]].  The positive
    # velocity branch uses the row one level below (A_j = rows[j-1], the set
    # still containing the mover's own node ring), the negative branch the
    # segment's own row (B_j = rows[j]): an up-move entering the segment and
    # a down-move leaving it then both see the velocity of the superlevel
    # set whose boundary ring is the mover's, at half weight, which is the
    # unbiased midpoint measure in both directions.
    def psi(row_idx: np.ndarray) -> np.ndarray:
        a = rows[np.maximum(row_idx - 1, 0), node]
        b = rows[row_idx, node]
        return flat_u + dt * (
            np.maximum(a, 0.0) * gsup_f + np.minimum(b, 0.0) * ginf_f
        )

    # segments j = 0..m: segment j covers theta in (levels[j-1], levels[j]];
    # segment m covers (levels[m-1], inf) with the empty-superlevel rows.
    # pred(j) = psi_j > levels[j-1] is nonincreasing in j, so the largest
    # valid segment is found by bisection.
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, m, dtype=np.int64)
    while np.any(lo < hi):
        mid = (lo + hi + 1) // 2
        pred = psi(mid) > levels[np.maximum(mid - 1, 0)]
        pred |= mid == 0
        lo = np.where(pred, mid, lo)
        hi = np.where(pred, hi, mid - 1)

    caps = np.concatenate([levels, [np.inf]])
    theta = np.minimum(psi(lo), caps[lo])
    new_vals = theta.reshape(grid.shape)
    apply_collar(new_vals, grid, collar_width)
    return ScalarField(grid, new_vals, t + dt)


def solve_slepcev(
    u0: ScalarField,
    kernel: KernelSpec,
    c1: ExternalVelocity,
    cfg: SlepcevConfig,
) -> Trajectory:
    """March the all-level equation from u0 to the horizon."""
    _require_nonnegative(kernel)
    grid = u0.grid
    mode = cfg.mode
    if mode == "auto":
        mode = "exact" if grid.dim == 1 else "binned"
    ctrl = cfg.stepper
    speed_bound = kernel.M0 + c1.M1
    dt = ctrl.resolve_dt(grid, speed_bound)
    n_steps = max(1, int(round(ctrl.t_end / dt)))
    if abs(n_steps * dt - ctrl.t_end) > 1e-9 * max(1.0, ctrl.t_end):
        n_steps = int(math.ceil(ctrl.t_end / dt - 1e-12))
        dt = ctrl.t_end / n_steps

    u = u0.copy()
    apply_collar(u.values, grid, ctrl.collar_width)
    traj = Trajectory()
    traj.append(u)
    for k in range(n_steps):
        t = k * dt
        u = crossing_step(u, kernel, c1, t, dt, mode, cfg.bins, ctrl.cfl, ctrl.collar_width)
        u.time = (k + 1) * dt
        check_domain(u.values, grid, ctrl.collar_width, u.time)
        if (k + 1) % ctrl.store_every == 0 or (k + 1) == n_steps:
            traj.append(u)
    return traj


def zero_set_thresholds(f: ScalarField, prox: float = 1e-3, cap: float = 5.0) -> tuple[float, float]:
    """Discrete thresholds for the closed and open zero superlevel sets.

    Exact thresholds are float-fragile: a fattened plateau settles a few
    grid errors off the zero level, and after an all-level run the ramp
    around it is stretched nearly flat, so a fixed value band maps to many
    cells.  When the field maximum sits within cap * prox of zero, the
    plateau IS the discrete zero set and the thresholds ride it:

        closed: u >= min(0, shift) - prox,   open: u > max(0, shift) + prox,

    with shift = clamp(max u, -cap * prox, cap * prox).  For an ordinary
    transversal front (|max u| large) this reduces to u >= -prox / u > prox.
    """
    mx = float(f.values.max())
    shift = min(max(mx, -cap * prox), cap * prox)
    return min(0.0, shift) - prox, max(0.0, shift) + prox


def extremal_zero_sets(
    f: ScalarField, prox: float = 1e-3
) -> tuple[IndicatorField, IndicatorField]:
    """(closed, open) discrete zero superlevel sets via `zero_set_thresholds`."""
    th_plus, th_minus = zero_set_thresholds(f, prox)
    return (
        superlevel_indicator(f, th_plus, strict=False),
        superlevel_indicator(f, th_minus, strict=True),
    )


def extremal_solutions(
    u_traj: Trajectory,
    kernel: KernelSpec,
    c1: ExternalVelocity,
    ctrl: StepControl,
    prox: float = 1e-3,
    unique_tol: float | None = None,
) -> ExtremalPair:
    """Extract rho+- from an all-level trajectory and solve the frozen
    occupancy problems for the extremal pair v+-.

    rho+ (closed zero set) and rho- (open zero set) are read per stored time
    with the plateau-aware thresholds of `zero_set_thresholds`; the v+-
    solves freeze the speeds c[rho+-] piecewise-constant between stored
    times.  Set matches are reported as symmetric-difference measures with
    each field's own thresholds; inclusions are checked with a one-cell
    dilation."""
    _require_nonnegative(kernel)
    grid = u_traj.grid
    rho_plus = []
    rho_minus = []
    for f in u_traj.fields:
        closed, open_ = extremal_zero_sets(f, prox)
        rho_plus.append(closed)
        rho_minus.append(open_)

    times = np.asarray(u_traj.times)
    u0 = u_traj.fields[0]
    speed_bound = kernel.M0 + c1.M1

    def speed_from(rhos: list[IndicatorField]) -> Callable[[float], SpeedField]:
        from .kernels import convolve

        def a_of_t(t: float) -> SpeedField:
            idx = int(np.searchsorted(times, t + 1e-12, side="right")) - 1
            idx = max(idx, 0)
            conv = convolve(kernel, rhos[idx], t).values
            return SpeedField.from_values(conv + c1.sample_on(grid, t))

        return a_of_t

    v_plus = solve_fixed_speed(u0, speed_from(rho_plus), ctrl, speed_bound=speed_bound)
    v_minus = solve_fixed_speed(u0, speed_from(rho_minus), ctrl, speed_bound=speed_bound)

    # compare at the stored times of u_traj
    symdiff_plus: list[float] = []
    symdiff_minus: list[float] = []
    inclusion_ok = True
    max_gap = 0.0
    cell = grid.h
    dilate = int(round(1))
    for t, uf, u_closed_ind, u_open_ind in zip(
        u_traj.times, u_traj.fields, rho_plus, rho_minus
    ):
        vp = v_plus.fields[v_plus.index_of(t)]
        vm = v_minus.fields[v_minus.index_of(t)]
        max_gap = max(max_gap, float(np.max(vp.values - vm.values)), 0.0)
        vp_closed, _ = extremal_zero_sets(vp, prox)
        _, vm_open = extremal_zero_sets(vm, prox)
        symdiff_plus.append(
            diagnostics.symmetric_difference_measure(vp_closed, u_closed_ind)
        )
        symdiff_minus.append(
            diagnostics.symmetric_difference_measure(vm_open, u_open_ind)
        )
        # one-cell-tolerant inclusions {v+ > 0} subset {u >= 0} subset {v+ >= 0}
        th_p, th_m = zero_set_thresholds(vp, prox)
        vp_strict = superlevel_indicator(vp, th_m, strict=True).values
        vp_wide = _dilate(superlevel_indicator(vp, th_p).values, dilate)
        u_closed_dil = _dilate(u_closed_ind.values, dilate)
        if np.any(vp_strict > u_closed_dil) or np.any(u_closed_ind.values > vp_wide):
            inclusion_ok = False
    tol = 5.0 * grid.h if unique_tol is None else unique_tol
    unique = max_gap <= tol
    return ExtremalPair(
        u=u_traj,
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        v_plus=v_plus,
        v_minus=v_minus,
        unique=unique,
        max_gap=max_gap,
        inclusion_ok=inclusion_ok,
        symdiff_plus=symdiff_plus,
        symdiff_minus=symdiff_minus,
    )


def _dilate(ind: np.ndarray, cells: int) -> np.ndarray:
    """Grow a {0,1} node set by `cells` rings (axis-aligned)."""
    out = ind.astype(bool)
    for _ in range(cells):
        grown = out.copy()
        for ax in range(out.ndim):
            sl_lo = [slice(None)] * out.ndim
            sl_hi = [slice(None)] * out.ndim
            sl_lo[ax] = slice(0, -1)
            sl_hi[ax] = slice(1, None)
            grown[tuple(sl_lo)] |= out[tuple(sl_hi)]
            grown[tuple(sl_hi)] |= out[tuple(sl_lo)]
        out = grown
    return out.astype(np.uint8)


def counterexample_family(
    gamma: Callable[[float], float],
    grid: Grid,
    t_end: float = 2.0,
    ctrl: StepControl | None = None,
) -> tuple[Trajectory, list[np.ndarray], Callable[[float], float]]:
    """Build the benchmark family member U_gamma on [0, 2].

    The spatially constant speed is c1(t) + 2 x1(t) while the front shrinks
    (t <= 1) and c1(t) + 2 gamma(t) y_gamma(t) while it fattens (t > 1),
    with y_gamma integrated by RK4 at the PDE step size.  Returns the
    trajectory, the realized occupancies chi_gamma at stored times
    (gamma(t) on [-y, y] for t > 1, the closed indicator before), and the
    y_gamma interpolant.  Every member passes the occupancy sandwich check
    with zero out-of-band violations.
    """
    if grid.dim != 1:
        raise ConfigurationError("the benchmark family is 1-D")
    horizon = min(t_end, 2.0)
    from .grid import Interval, make_signed_initial

    u0 = make_signed_initial(grid, Interval(-1.0, 1.0))
    if ctrl is None:
        ctrl = StepControl(t_end=horizon, cfl=0.5)
    speed_bound = 6.0  # |c1| <= 4 on [0,2], set radius <= 1; 2y + |c1| <= 6
    dt = ctrl.resolve_dt(grid, speed_bound)

    # integrate y_gamma on the step grid (RK4 between consecutive steps)
    n_steps = max(1, int(round(horizon / dt)))
    times = dt * np.arange(n_steps + 1)
    ys = np.zeros(n_steps + 1)
    y = 0.0
    started = False
    for k in range(n_steps + 1):
        t = times[k]
        if t < 1.0 - 1e-12:
            ys[k] = 0.0
            continue
        if not started:
            # first step time at or past 1: integrate from 1 to t
            y = _rk4_ygamma(gamma, 1.0, 0.0, t, dt)
            started = True
        elif t > 1.0:
            y = _rk4_ygamma(gamma, times[k - 1] if times[k - 1] >= 1.0 else 1.0, y, t, dt)
        ys[k] = y

    def y_of(t: float) -> float:
        return float(np.interp(t, times, ys))

    def speed(t: float) -> float:
        if t <= 1.0:
            return c1_law(t) + 2.0 * x1(min(t, 1.0))
        g = float(gamma(t))
        if not (0.0 - 1e-12 <= g <= 1.0 + 1e-12):
            raise ConfigurationError(f"gamma({t}) = {g} outside [0, 1]")
        return c1_law(t) + 2.0 * g * y_of(t)

    run = StepControl(
        t_end=horizon, cfl=ctrl.cfl, dt=dt, collar_width=ctrl.collar_width,
        store_every=ctrl.store_every,
    )
    traj = solve_fixed_speed(
        u0, lambda t: SpeedField.constant(speed(t), grid), run, speed_bound=speed_bound
    )

    xs = grid.axis(0)
    chis: list[np.ndarray] = []
    for t, f in zip(traj.times, traj.fields):
        if t <= 1.0:
            chis.append((np.abs(xs) <= x1(min(t, 1.0))).astype(np.float64))
        else:
            g = float(gamma(t))
            chis.append(g * (np.abs(xs) <= y_of(t)).astype(np.float64))
    return traj, chis, y_of


def _rk4_ygamma(
    gamma: Callable[[float], float], t0: float, y0: float, t1: float, dt: float
) -> float:
    """RK4 for dy/dt = c1(t) + 2 gamma(t) y between PDE step times."""
    if t1 <= t0:
        return y0
    n = max(1, int(math.ceil((t1 - t0) / dt - 1e-12)))
    step = (t1 - t0) / n
    t, y = t0, y0
    for _ in range(n):
        def f(s: float, yy: float) -> float:
            return c1_law(s) + 2.0 * float(gamma(s)) * yy

        k1 = f(t, y)
        k2 = f(t + step / 2, y + step * k1 / 2)
        k3 = f(t + step / 2, y + step * k2 / 2)
        k4 = f(t + step, y + step * k3)
        y += step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += step
    return y
