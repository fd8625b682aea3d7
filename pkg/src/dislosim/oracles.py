"""Closed-form and ODE reference solutions used by the test suite.

Centerpiece: the 1-D sign-changing benchmark with external load
c1(t) = 2(t-1)(2-t), unit box self-force and cone initial data
u0(x) = 1 - |x|.  The front shrinks to the origin on [0, 1] along
x1(t) = (t-1)^2 and then fattens: for any occupancy weight gamma(t) in
[0, 1] the set radius y_gamma solves

    dy/dt = c1(t) + 2 gamma(t) y,   y(1) = 0,       t in [1, 2],

with closed forms y(t) = (t-1)^2 for gamma == 1 and
y(t) = -(2/3) t^3 + 3 t^2 - 4 t + 5/3 for gamma == 0.  Every choice of
gamma yields a distinct valid evolution, which is the non-uniqueness
witness exercised by the acceptance tests.

All integrators here are classic fourth-order Runge-Kutta with a step far
below the PDE grid error, so oracle error never contaminates a tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericalError


def c1_law(t: float) -> float:
    """External load 2(t-1)(2-t): negative on [0,1), zero at 1, positive on (1,2)."""
    return 2.0 * (t - 1.0) * (2.0 - t)


def u0_law(x: np.ndarray | float) -> np.ndarray | float:
    """Cone initial data 1 - |x| (unclamped)."""
    return 1.0 - np.abs(x)


@dataclass(frozen=True)
class Example32Spec:
    """Data of the 1-D fattening benchmark."""

    c1: Callable[[float], float] = c1_law
    u0: Callable[[np.ndarray | float], np.ndarray | float] = u0_law
    horizon: float = 2.0


def x1(t: float) -> float:
    """Front radius (t-1)^2 on [0,1]: solves dx/dt = c1(t) + 2x, x(0) = 1."""
    if not (0.0 <= t <= 1.0 + 1e-12):
        raise ConfigurationError(f"x1 is defined on [0, 1], got t={t}")
    return (t - 1.0) ** 2


def _rk4(
    f: Callable[[float, float], float], t0: float, y0: float, t1: float, dt: float
) -> float:
    n = max(1, int(math.ceil((t1 - t0) / dt - 1e-12)))
    step = (t1 - t0) / n
    t, y = t0, y0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + step / 2, y + step * k1 / 2)
        k3 = f(t + step / 2, y + step * k2 / 2)
        k4 = f(t + step, y + step * k3)
        y += step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += step
    return y


def y_gamma(gamma: Callable[[float], float], t: float, rk4_dt: float = 1e-4) -> float:
    """Set radius on [1,2] for occupancy weight gamma: RK4 on
    dy/dt = c1(t) + 2 gamma(t) y, y(1) = 0."""
    if not (1.0 - 1e-12 <= t <= 2.0 + 1e-12):
        raise ConfigurationError(f"y_gamma is defined on [1, 2], got t={t}")
    if rk4_dt > 1e-3:
        raise ConfigurationError("rk4_dt must be <= 1e-3 for oracle accuracy")

    def rhs(s: float, y: float) -> float:
        g = float(gamma(s))
        if not (0.0 - 1e-12 <= g <= 1.0 + 1e-12):
            raise ConfigurationError(f"gamma({s}) = {g} outside [0, 1]")
        return c1_law(s) + 2.0 * g * y

    return _rk4(rhs, 1.0, 0.0, max(t, 1.0), rk4_dt)


def y0_closed_form(t: float) -> float:
    """gamma == 0 antiderivative of c1: -(2/3)t^3 + 3t^2 - 4t + 5/3."""
    return -(2.0 / 3.0) * t**3 + 3.0 * t**2 - 4.0 * t + 5.0 / 3.0


def exact_U(
    gamma: Callable[[float], float], x: float, t: float, rk4_dt: float = 1e-4
) -> float:
    """Exact benchmark profile.

    t <= 1:  u0(|x| - x1(t) + 1)      (shrinking cone)
    t >  1:  0 on [-y_gamma, y_gamma], u(|x| - y_gamma, 1) outside, where
             u(z, 1) = -|z|.
    """
    if not (0.0 <= t <= 2.0 + 1e-12):
        raise ConfigurationError(f"exact_U is defined on [0, 2], got t={t}")
    ax = abs(x)
    if t <= 1.0:
        return float(u0_law(ax - x1(t) + 1.0))
    y = y_gamma(gamma, t, rk4_dt)
    if ax <= y:
        return 0.0
    return -(ax - y)


def radial_oracle(
    c1_const: float,
    nonlocal_of_radius: Callable[[float], float],
    r0: float,
    t: float,
    rk4_dt: float = 1e-4,
    r_max: float = math.inf,
) -> float:
    """Front radius of a radially symmetric 2-D evolution whose nonlocal
    velocity contribution at the front depends only on the current radius:

        dr/dt = c1_const + nonlocal_of_radius(r),   r(0) = r0.

    For a flat kernel of height k0, nonlocal_of_radius(r) = k0 * pi * r^2.
    Raises if the radius exceeds r_max before time t (blow-up guard).
    """
    if r0 <= 0:
        raise ConfigurationError(f"r0 must be positive, got {r0}")
    n = max(1, int(math.ceil(t / rk4_dt - 1e-12)))
    step = t / n
    r = r0

    def rhs(_s: float, rr: float) -> float:
        return c1_const + float(nonlocal_of_radius(rr))

    s = 0.0
    for _ in range(n):
        r = _rk4(rhs, s, r, s + step, step)
        s += step
        if not np.isfinite(r) or r > r_max:
            raise NumericalError(
                f"radial front exceeded r_max={r_max:.6g} at t={s:.6g} (r={r:.6g})"
            )
    return r
