"""Geometric and analytic observables of level-set trajectories.

Measure-zero sets are invisible on a grid, so the discrete zero set is
always a band {|u| <= band} with band defaulting to h times the measured
Lipschitz constant, and set equalities are tested through symmetric
differences.  Front positions are read off transversal ramps by linear
extrapolation, which stays accurate when a kink or plateau sits at the
level itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .grid import (
    Grid,
    IndicatorField,
    ScalarField,
    discrete_lipschitz,
    lebesgue_measure,
    superlevel_indicator,
)
from .eikonal import Trajectory, upwind_gradients


def default_band(u: ScalarField) -> float:
    """h times the measured Lipschitz constant (at least h)."""
    return u.grid.h * max(1.0, discrete_lipschitz(u))


def fattening_measure(u: ScalarField, band: float | None = None) -> float:
    """Measure of the discrete zero set {|u| <= band}."""
    b = default_band(u) if band is None else band
    if b <= 0:
        raise ConfigurationError("band must be positive")
    ind = IndicatorField(u.grid, (np.abs(u.values) <= b).astype(np.uint8))
    return lebesgue_measure(ind)


def perimeter(ind: IndicatorField) -> float:
    """Boundary size of a node set.

    1-D: number of 0/1 transitions.  2-D: marching-squares contour length at
    the midpoint level, which is symmetric under set complement (both saddle
    resolutions have the same total length for binary data).
    """
    vals = ind.values
    if ind.grid.dim == 1:
        return float(np.abs(np.diff(vals.astype(np.int8))).sum())
    h = ind.grid.h
    v00 = vals[:-1, :-1]
    v10 = vals[1:, :-1]
    v11 = vals[1:, 1:]
    v01 = vals[:-1, 1:]
    case = v00 + 2 * v10 + 4 * v11 + 8 * v01
    diag = h * math.sqrt(2.0) / 2.0  # single corner cut
    straight = h
    lengths = np.array(
        [
            0.0,  # 0000
            diag,  # corner v00
            diag,  # corner v10
            straight,  # edge v00+v10
            diag,  # corner v11
            2 * diag,  # saddle v00+v11
            straight,  # edge v10+v11
            diag,  # three corners (complement of v01)
            diag,  # corner v01
            straight,  # edge v00+v01
            2 * diag,  # saddle v10+v01
            diag,  # complement of v11
            straight,  # edge v11+v01
            diag,  # complement of v10
            diag,  # complement of v00
            0.0,  # 1111
        ]
    )
    return float(lengths[case].sum())


def _distance_to_complement(vals: np.ndarray, h: float) -> np.ndarray:
    """Distance from each set node to the in-domain complement."""
    return ndimage.distance_transform_edt(vals, sampling=h)


def interior_ball_radius(ind: IndicatorField, tol: float | None = None) -> float:
    """Largest r such that every node of the set is covered by a ball of
    radius r fully inside the set.

    Feasibility of a radius r is an erosion-dilation test run with two
    distance transforms: centers = {dist-to-complement >= r} and the set must
    lie within distance r of the centers.  A bisection over r then finds the
    largest feasible radius to resolution `tol` (default h/2).  A set that
    fills the whole box (empty complement) returns the domain inradius.
    """
    vals = ind.values.astype(bool)
    if not vals.any():
        raise ConfigurationError("interior_ball_radius of an empty set")
    if vals.all():
        return ind.grid.extent
    h = ind.grid.h
    tol = h / 2.0 if tol is None else tol
    inside = _distance_to_complement(vals, h)

    def feasible(r: float) -> bool:
        centers = inside >= r - 1e-12
        if not centers.any():
            return False
        dist_to_centers = ndimage.distance_transform_edt(~centers, sampling=h)
        return bool(np.max(dist_to_centers[vals]) <= r + 1e-12)

    lo = 0.0
    hi = float(inside.max())
    if feasible(hi):
        return hi
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def interior_ball_radius_bruteforce(ind: IndicatorField) -> float:
    """Direct evaluation of the same quantity: for every set node x, the
    largest dist-to-complement D(y) among nodes y whose maximal ball
    B(y, D(y)) covers x; then the min over x.  Oracle for tiny grids."""
    vals = ind.values.astype(bool)
    if not vals.any():
        raise ConfigurationError("interior_ball_radius of an empty set")
    if vals.all():
        return ind.grid.extent
    h = ind.grid.h
    inside = _distance_to_complement(vals, h)
    coords = ind.grid.coords().reshape(ind.grid.dim, -1).T
    flat_inside = inside.ravel()
    set_idx = np.flatnonzero(vals.ravel())
    best = math.inf
    for x in set_idx:
        px = coords[x]
        d = np.sqrt(((coords[set_idx] - px) ** 2).sum(axis=1))
        reach = flat_inside[set_idx] >= d - 1e-12
        r_x = float(flat_inside[set_idx][reach].max()) if reach.any() else 0.0
        best = min(best, r_x)
    return best


def arrival_time(u_traj: Trajectory, level: float = 0.0) -> tuple[ScalarField, bool]:
    """Per node, the first stored time with u >= level (+inf if never).

    Returns (field, monotone) where monotone is False when the zero
    superlevel sets fail to grow monotonically between stored times (the
    arrival time is then ill-defined and the caller should treat it as a
    warning)."""
    if len(u_traj) == 0:
        raise ConfigurationError("arrival_time of an empty trajectory")
    grid = u_traj.grid
    w = np.full(grid.shape, np.inf)
    prev = None
    monotone = True
    for t, f in zip(u_traj.times, u_traj.fields):
        reached = f.values >= level
        if prev is not None and np.any(prev & ~reached):
            monotone = False
        w = np.where(np.isinf(w) & reached, t, w)
        prev = reached if prev is None else (prev | reached)
    return ScalarField(grid, w, u_traj.times[-1]), monotone


def gradient_magnitude(u: ScalarField) -> np.ndarray:
    """Central-difference |Du| (edge-replicated at the boundary)."""
    vals = u.values
    h = u.grid.h
    acc = np.zeros_like(vals)
    for ax in range(u.grid.dim):
        padded = np.pad(vals, [(1, 1) if k == ax else (0, 0) for k in range(u.grid.dim)], mode="edge")
        sl_lo = tuple(slice(0, -2) if k == ax else slice(None) for k in range(u.grid.dim))
        sl_hi = tuple(slice(2, None) if k == ax else slice(None) for k in range(u.grid.dim))
        acc += ((padded[sl_hi] - padded[sl_lo]) / (2 * h)) ** 2
    return np.sqrt(acc)


def lower_gradient_check(u: ScalarField, eta: float, band: float) -> tuple[bool, float]:
    """Check min over the front band {|u| <= band} of |u| + |Du| >= eta.

    Returns (passed, attained minimum); an empty band passes vacuously with
    minimum +inf.  A fattened plateau at the zero level fails for any
    eta > 0 because both |u| and |Du| vanish there."""
    if band <= 0:
        raise ConfigurationError("band must be positive")
    mask = np.abs(u.values) <= band
    if not mask.any():
        return True, math.inf
    quantity = np.abs(u.values) + gradient_magnitude(u)
    attained = float(quantity[mask].min())
    return attained >= eta, attained


def symmetric_difference_measure(a: IndicatorField, b: IndicatorField) -> float:
    if a.grid != b.grid:
        raise ConfigurationError("symmetric difference requires one grid")
    diff = IndicatorField(a.grid, (a.values != b.values).astype(np.uint8))
    return lebesgue_measure(diff)


# ---------------------------------------------------------------------------
# front position measurement


def zero_crossings_1d(u: ScalarField, level: float = 0.0) -> list[float]:
    """Linearly interpolated crossings of u through `level` (1-D)."""
    if u.grid.dim != 1:
        raise ConfigurationError("zero_crossings_1d needs a 1-D field")
    xs = u.grid.axis(0)
    v = u.values - level
    out: list[float] = []
    sign_change = np.where(v[:-1] * v[1:] < 0)[0]
    for i in sign_change:
        frac = v[i] / (v[i] - v[i + 1])
        out.append(float(xs[i] + frac * u.grid.h))
    exact = np.where(v == 0.0)[0]
    out.extend(float(xs[i]) for i in exact)
    return sorted(out)


def front_endpoint_ramp_1d(
    u: ScalarField,
    side: str = "right",
    window: tuple[float, float] = (-0.15, -0.04),
    level: float = 0.0,
) -> float:
    """Outer front endpoint read from the transversal ramp.

    Fits a least-squares line to the nodes whose values lie in
    level + `window` on the requested side of the origin and returns the
    position where the line reaches `level`.  Extrapolating a near-level
    window is robust against kink smearing at the front, against plateaus
    that settle a few grid errors off the level, and against profile
    stretching (all-level dynamics move each level at its own speed, but the
    level-to-position map stays affine, so the intercept is unbiased).  Keep
    the window narrow: deep levels can leave the kernel coverage zone."""
    if u.grid.dim != 1:
        raise ConfigurationError("front_endpoint_ramp_1d needs a 1-D field")
    xs = u.grid.axis(0)
    v = u.values
    lo, hi = level + window[0], level + window[1]
    if side == "right":
        mask = (xs >= 0) & (v >= lo) & (v <= hi)
    elif side == "left":
        mask = (xs <= 0) & (v >= lo) & (v <= hi)
    else:
        raise ConfigurationError("side must be 'left' or 'right'")
    if mask.sum() < 2:
        raise ConfigurationError(
            f"ramp window {window} around level {level} holds {int(mask.sum())} nodes; "
            "cannot fit a line"
        )
    alpha, beta = _line_fit(xs[mask], v[mask])
    if abs(beta) < 1e-12:
        raise ConfigurationError("ramp fit degenerate: zero slope in window")
    return float((level - alpha) / beta)


def plateau_edge_1d(u: ScalarField, side: str = "right",
                    window: tuple[float, float] = (-0.15, -0.04)) -> float:
    """Edge of a fattened plateau: the ramp extrapolated to the plateau value
    (the field maximum), immune to the plateau settling off the exact
    level."""
    return front_endpoint_ramp_1d(u, side=side, window=window, level=float(u.values.max()))


def _line_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Least-squares line by explicit normal equations (deterministic
    arithmetic, no LAPACK)."""
    n = xs.size
    sx = float(xs.sum())
    sy = float(ys.sum())
    sxx = float((xs * xs).sum())
    sxy = float((xs * ys).sum())
    det = n * sxx - sx * sx
    if abs(det) < 1e-300:
        raise ConfigurationError("degenerate line fit")
    beta = (n * sxy - sx * sy) / det
    alpha = (sy - beta * sx) / n
    return alpha, beta


def ramp_zero_intercept_1d(
    u: ScalarField,
    side: str = "right",
    offset_window: tuple[float, float] = (0.55, 0.8),
    prox_tol: float = 1e-3,
) -> float:
    """Zero-level radius of a fattened profile, read from the outer ramp.

    A first-order monotone scheme rounds the plateau corner over a zone of
    width O(sqrt(speed * h * t)); inside it any level readout is biased
    inward.  This estimator finds the approximate plateau edge (outermost
    node within `prox_tol` of the field maximum), fits the ramp on the
    position window [edge + lo, edge + hi] beyond the rounding zone, and
    returns the line's zero crossing.  Keep the window inside the kernel
    coverage region: far levels move with truncated superlevel sets."""
    if u.grid.dim != 1:
        raise ConfigurationError("ramp_zero_intercept_1d needs a 1-D field")
    xs = u.grid.axis(0)
    v = u.values
    mx = float(v.max())
    near = np.abs(v - mx) <= prox_tol
    if side == "right":
        e0 = float(np.abs(xs[near]).max())
        mask = (xs >= e0 + offset_window[0]) & (xs <= e0 + offset_window[1])
    elif side == "left":
        e0 = float(np.abs(xs[near]).max())
        mask = (xs <= -e0 - offset_window[0]) & (xs >= -e0 - offset_window[1])
    else:
        raise ConfigurationError("side must be 'left' or 'right'")
    if mask.sum() < 4:
        raise ConfigurationError(
            f"offset window {offset_window} beyond edge {e0:.3g} holds "
            f"{int(mask.sum())} nodes; cannot fit the ramp"
        )
    alpha, beta = _line_fit(xs[mask], v[mask])
    if abs(beta) < 1e-12:
        raise ConfigurationError("ramp fit degenerate: zero slope in window")
    return -alpha / beta


def front_radius_from_area(u: ScalarField, level: float = 0.0) -> float:
    """Front radius inferred from the superlevel measure (sqrt(area/pi) in
    2-D, half the length in 1-D)."""
    meas = lebesgue_measure(superlevel_indicator(u, level))
    if u.grid.dim == 1:
        return meas / 2.0
    return math.sqrt(meas / math.pi)


# ---------------------------------------------------------------------------
# report


@dataclass
class RunReport:
    """Per-stored-time observables of a trajectory."""

    times: list[float] = field(default_factory=list)
    fattening: list[float] = field(default_factory=list)
    perimeter: list[float] = field(default_factory=list)
    interior_ball: list[float] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    lgb_min: list[float] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        cols = ["time", "fattening", "perimeter", "interior_ball", "lgb_min"]
        has_alpha = len(self.alpha) == len(self.times)
        if has_alpha:
            cols.insert(4, "alpha")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [t, self.fattening[i], self.perimeter[i], self.interior_ball[i]]
                if has_alpha:
                    row.append(self.alpha[i])
                row.append(self.lgb_min[i])
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def build_report(
    traj: Trajectory,
    band: float | None = None,
    reference: Trajectory | None = None,
    lgb_eta: float = 0.0,
) -> RunReport:
    """Observable time series for a trajectory.

    alpha is the running sup deviation against `reference` (at shared stored
    times); interior_ball is 0 for empty superlevel sets."""
    rep = RunReport()
    run_sup = 0.0
    for i, (t, f) in enumerate(zip(traj.times, traj.fields)):
        rep.times.append(t)
        rep.fattening.append(fattening_measure(f, band))
        ind = superlevel_indicator(f, 0.0)
        rep.perimeter.append(perimeter(ind))
        if ind.values.any():
            rep.interior_ball.append(interior_ball_radius(ind))
        else:
            rep.interior_ball.append(0.0)
        b = default_band(f) if band is None else band
        _, attained = lower_gradient_check(f, lgb_eta, b)
        rep.lgb_min.append(attained if math.isfinite(attained) else 0.0)
        if reference is not None:
            ref = reference.fields[reference.index_of(t)]
            run_sup = max(run_sup, float(np.max(np.abs(f.values - ref.values))))
            rep.alpha.append(run_sup)
    return rep
