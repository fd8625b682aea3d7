"""Velocity kernels and the nonlocal velocity fields built from them.

The front velocity has two parts: a convolution self-force c0 * occupancy
(the Peach-Koehler term of dislocation models) and an external load c1(x, t).
This module represents both, and assembles

    cbar(x, t)   = (c0(., t) * chi(., t))(x) + c1(x, t)        [occupancy form]
    cplus[u](x)  = c1(x, t) + (c0 * 1{u >= u(x)})(x)           [all-level form]
    cminus[u](x) = c1(x, t) + (c0 * 1{u >  u(x)})(x)

The convolution is the h^dim-weighted discrete convolution with kernel
samples on the same spacing as the field.  Two independent backends are
provided: an explicit shifted-sum ("direct") and a zero-padded real FFT
("fft", padding to the next power of two >= n + kernel width so the linear
convolution is exact).  They agree to 1e-10 and each serves as the oracle
for the other in the tests.

The all-level velocities are the performance-sensitive piece: the exact mode
needs one superlevel convolution per distinct node value.  For per-node
evaluation we loop over kernel offsets with vectorized comparisons; for the
time stepper, `superlevel_velocity_table` materializes velocity rows per
level via either cumulative node insertion (1-D exact) or batched FFTs
(binned / 2-D).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .grid import Grid, IndicatorField, ScalarField

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_SPACING_RTOL = 1e-9


@dataclass
class OccupancyField:
    """A [0,1]-valued occupancy chi on a grid, with a time stamp."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
            raise ConfigurationError(
                f"occupancy values must lie in [0,1], got range "
                f"[{vals.min():.3g}, {vals.max():.3g}]"
            )
        self.values = np.clip(vals, 0.0, 1.0)


def _kernel_norms(samples: np.ndarray, h: float, dim: int) -> tuple[float, float, float]:
    """Discrete L1 norm, gradient L1 norm and sup norm of kernel samples."""
    w = h**dim
    m0_l1 = float(np.abs(samples).sum() * w)
    grads = np.gradient(samples, h) if dim > 1 else [np.gradient(samples, h)]
    gmag = np.sqrt(np.sum([g**2 for g in grads], axis=0))
    l0 = float(gmag.sum() * w)
    m0_sup = float(np.abs(samples).max()) if samples.size else 0.0
    return m0_l1, l0, m0_sup


@dataclass
class KernelSpec:
    """Compactly supported kernel c0 sampled at node offsets.

    samples: array of odd shape (2m+1 per axis); index i corresponds to
        offset (i - m) * h.  For time-dependent kernels `frames` holds
        (time, samples) pairs used piecewise-constantly in time, and
        `samples` is the first frame.
    M0: bound on the discrete L1 norm  h^dim * sum |samples|.
    L0: bound on the discrete L1 norm of the sample gradient.
    m0: pointwise bound max |samples|.
    radius: support radius in physical units (Euclidean).
    """

    samples: np.ndarray
    h: float
    dim: int
    radius: float
    M0: float
    L0: float
    m0: float
    frames: tuple[tuple[float, np.ndarray], ...] | None = None

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != self.dim:
            raise ConfigurationError("kernel sample array rank must equal dim")
        for s in self.samples.shape:
            if s % 2 != 1:
                raise ConfigurationError("kernel sample arrays must have odd shape")
        if self.h <= 0:
            raise ConfigurationError("kernel spacing must be positive")

    @classmethod
    def from_samples(
        cls,
        samples: np.ndarray,
        h: float,
        frames: Sequence[tuple[float, np.ndarray]] | None = None,
    ) -> "KernelSpec":
        samples = np.asarray(samples, dtype=np.float64)
        dim = samples.ndim
        m = (samples.shape[0] - 1) // 2
        radius = m * h * np.sqrt(dim)
        norm_src = [samples] if frames is None else [np.asarray(s) for _, s in frames]
        m0_l1 = max(_kernel_norms(s, h, dim)[0] for s in norm_src)
        l0 = max(_kernel_norms(s, h, dim)[1] for s in norm_src)
        m0 = max(_kernel_norms(s, h, dim)[2] for s in norm_src)
        return cls(
            samples=samples,
            h=h,
            dim=dim,
            radius=radius,
            M0=m0_l1,
            L0=l0,
            m0=m0,
            frames=tuple((float(t), np.asarray(s, dtype=np.float64)) for t, s in frames)
            if frames is not None
            else None,
        )

    @classmethod
    def builtin(
        cls,
        name: str,
        h: float,
        dim: int,
        radius: float,
        height: float = 1.0,
        sigma: float | None = None,
    ) -> "KernelSpec":
        """Built-in kernels: "box", "cone", "gaussian_truncated".

        box: height on the square |x|_inf <= radius.
        cone: height * max(0, 1 - |x|_2 / radius).
        gaussian_truncated: height * exp(-|x|^2 / (2 sigma^2)) on |x|_2 <= radius.
        """
        m = int(round(radius / h))
        if m < 1:
            raise ConfigurationError(f"kernel radius {radius} below one cell {h}")
        offs = h * np.arange(-m, m + 1)
        if dim == 1:
            r2 = offs**2
            cheb = np.abs(offs)
        else:
            ox, oy = np.meshgrid(offs, offs, indexing="ij")
            r2 = ox**2 + oy**2
            cheb = np.maximum(np.abs(ox), np.abs(oy))
        r = np.sqrt(r2)
        if name == "box":
            samples = np.where(cheb <= radius + 1e-12, height, 0.0)
        elif name == "cone":
            samples = height * np.maximum(0.0, 1.0 - r / radius)
        elif name == "gaussian_truncated":
            s = sigma if sigma is not None else radius / 3.0
            samples = np.where(r <= radius + 1e-12, height * np.exp(-r2 / (2 * s * s)), 0.0)
        else:
            raise ConfigurationError(
                f"unknown builtin kernel {name!r}; expected box, cone or gaussian_truncated"
            )
        return cls.from_samples(samples, h)

    def samples_at(self, t: float) -> np.ndarray:
        """Kernel samples at time t (piecewise constant between frames)."""
        if self.frames is None:
            return self.samples
        out = self.frames[0][1]
        for ft, fs in self.frames:
            if ft <= t + 1e-12:
                out = fs
            else:
                break
        return out

    @property
    def half_width(self) -> int:
        return (self.samples.shape[0] - 1) // 2

    def split_signs(self, t: float = 0.0) -> tuple["KernelSpec", "KernelSpec"]:
        """Positive and negative parts (c0+, c0-), both nonnegative kernels."""
        s = self.samples_at(t)
        return (
            KernelSpec.from_samples(np.maximum(s, 0.0), self.h),
            KernelSpec.from_samples(np.maximum(-s, 0.0), self.h),
        )


@dataclass
class ExternalVelocity:
    """External load c1(x, t) with its sup and Lipschitz bounds.

    fn maps (coords, t) -> values, where coords is the (dim, ...) stack from
    Grid.coords().  M1 bounds |c1|, L1 bounds the spatial Lipschitz constant;
    N1 is optional second-difference metadata and is never checked.
    """

    fn: Callable[[np.ndarray, float], np.ndarray | float]
    M1: float
    L1: float
    N1: float | None = None

    def sample_on(self, grid: Grid, t: float) -> np.ndarray:
        vals = self.fn(grid.coords(), t)
        out = np.broadcast_to(np.asarray(vals, dtype=np.float64), grid.shape).copy()
        return out

    @classmethod
    def constant(cls, value: float) -> "ExternalVelocity":
        return cls(fn=lambda coords, t: value, M1=abs(value), L1=0.0)

    @classmethod
    def time_law(cls, law: Callable[[float], float], sup: float) -> "ExternalVelocity":
        """Spatially constant velocity t -> law(t)."""
        return cls(fn=lambda coords, t: law(t), M1=sup, L1=0.0)


def _check_spacing(kernel: KernelSpec, grid: Grid) -> None:
    if abs(kernel.h - grid.h) > _SPACING_RTOL * grid.h:
        raise GridMismatchError(
            f"kernel spacing {kernel.h} does not match grid spacing {grid.h}"
        )
    if kernel.dim != grid.dim:
        raise GridMismatchError(f"kernel dim {kernel.dim} != grid dim {grid.dim}")


def _fft_shape(n: int, m: int) -> int:
    """Next power of two >= n + kernel width, for exact linear convolution."""
    need = n + 2 * m + 1
    p = 1
    while p < need:
        p *= 2
    return p


def _convolve_direct(samples: np.ndarray, occ: np.ndarray, h: float) -> np.ndarray:
    dim = occ.ndim
    m = (samples.shape[0] - 1) // 2
    padded = np.pad(occ, m)
    out = np.zeros_like(occ)
    if dim == 1:
        for i in range(samples.shape[0]):
            w = samples[i]
            if w == 0.0:
                continue
            # offset d = i - m contributes K[d] * occ[x - d]
            start = 2 * m - i
            out += w * padded[start : start + occ.shape[0]]
    else:
        n0, n1 = occ.shape
        for i in range(samples.shape[0]):
            s0 = 2 * m - i
            row = samples[i]
            if not row.any():
                continue
            for j in range(samples.shape[1]):
                w = row[j]
                if w == 0.0:
                    continue
                s1 = 2 * m - j
                out += w * padded[s0 : s0 + n0, s1 : s1 + n1]
    return out * h**dim


def _convolve_fft(samples: np.ndarray, occ: np.ndarray, h: float) -> np.ndarray:
    dim = occ.ndim
    m = (samples.shape[0] - 1) // 2
    shape = tuple(_fft_shape(n, m) for n in occ.shape)
    for p, n in zip(shape, occ.shape):
        if 2 * m + 1 > p:
            raise ConfigurationError(
                f"kernel width {2 * m + 1} exceeds padded transform size {p}"
            )
    fo = np.fft.rfftn(occ, shape)
    fk = np.fft.rfftn(samples, shape)
    full = np.fft.irfftn(fo * fk, shape)
    sl = tuple(slice(m, m + n) for n in occ.shape)
    return full[sl] * h**dim


def convolve(
    kernel: KernelSpec,
    occ: OccupancyField | IndicatorField,
    t: float = 0.0,
    backend: str = "fft",
) -> ScalarField:
    """Discrete convolution (c0(., t) * occ)(x), occupancy taken as 0 outside
    the box.  |result| <= M0 everywhere (the M0 metadata is the discrete L1
    norm, so the bound is exact, with no quadrature slack)."""
    _check_spacing(kernel, occ.grid)
    samples = kernel.samples_at(t)
    vals = np.asarray(occ.values, dtype=np.float64)
    if backend == "direct":
        out = _convolve_direct(samples, vals, kernel.h)
    elif backend == "fft":
        out = _convolve_fft(samples, vals, kernel.h)
    else:
        raise ConfigurationError(f"unknown convolution backend {backend!r}")
    return ScalarField(occ.grid, out, t)


def assemble_cbar(
    kernel: KernelSpec,
    c1: ExternalVelocity,
    occ: OccupancyField | IndicatorField,
    t: float,
    backend: str = "fft",
) -> ScalarField:
    """Total velocity cbar = c0 * occ + c1 sampled on the occupancy grid."""
    conv = convolve(kernel, occ, t, backend=backend)
    return ScalarField(occ.grid, conv.values + c1.sample_on(occ.grid, t), t)


# ---------------------------------------------------------------------------
# all-level (Slepcev) velocities


def _own_level_velocity_exact(
    samples: np.ndarray, u: np.ndarray, h: float, strict: bool
) -> np.ndarray:
    """conv(1{u >= u(x)}) (or strict >) at every node, via kernel offsets."""
    dim = u.ndim
    m = (samples.shape[0] - 1) // 2
    padded = np.pad(u, m, constant_values=-np.inf)
    out = np.zeros_like(u)
    if dim == 1:
        for i in range(samples.shape[0]):
            w = samples[i]
            if w == 0.0:
                continue
            start = 2 * m - i
            shifted = padded[start : start + u.shape[0]]
            mask = shifted > u if strict else shifted >= u
            out += w * mask
    else:
        n0, n1 = u.shape
        for i in range(samples.shape[0]):
            s0 = 2 * m - i
            row = samples[i]
            if not row.any():
                continue
            for j in range(samples.shape[1]):
                w = row[j]
                if w == 0.0:
                    continue
                s1 = 2 * m - j
                shifted = padded[s0 : s0 + n0, s1 : s1 + n1]
                mask = shifted > u if strict else shifted >= u
                out += w * mask
    return out * h**dim


def binned_thresholds(u: np.ndarray, bins: int) -> np.ndarray:
    """Level thresholds for binned mode: the distinct values themselves when
    there are at most `bins` of them (making binned mode exact), otherwise
    `bins` uniform levels on [min u, max u]."""
    if bins < 2:
        raise ConfigurationError(f"binned mode needs at least 2 bins, got {bins}")
    uniq = np.unique(u)
    if uniq.size <= bins:
        return uniq
    return np.linspace(float(u.min()), float(u.max()), bins)


def ramped_weights(u: np.ndarray, theta: float, delta: float) -> np.ndarray:
    """Ramp-smoothed superlevel weights clip((u - theta)/delta + 1/2, 0, 1).

    Continuous and nondecreasing in every node value and nonincreasing in
    theta; at theta = u(x) the node's own ring carries weight 1/2, making
    the associated measure the symmetric midpoint quadrature."""
    return np.clip((u - theta) / delta + 0.5, 0.0, 1.0)


def superlevel_convolutions(
    kernel: KernelSpec,
    u: np.ndarray,
    levels: np.ndarray,
    t: float = 0.0,
    quadrature: str = "closed",
    delta: float | None = None,
) -> np.ndarray:
    """conv(w{u >= level}) for every level, batched over one FFT stack.

    quadrature "closed" uses the plain node indicator; "ramped" the
    ramp-smoothed weights of `ramped_weights` (width `delta`, default the
    kernel spacing).  Returns an array of shape (len(levels),) + u.shape.
    """
    samples = kernel.samples_at(t)
    m = (samples.shape[0] - 1) // 2
    shape = tuple(_fft_shape(n, m) for n in u.shape)
    if quadrature == "closed":
        stack = (u[np.newaxis] >= levels.reshape((-1,) + (1,) * u.ndim)).astype(np.float64)
    elif quadrature == "ramped":
        d = kernel.h if delta is None else delta
        stack = np.stack([ramped_weights(u, float(th), d) for th in levels])
    else:
        raise ConfigurationError(f"unknown quadrature {quadrature!r}")
    axes = tuple(range(1, u.ndim + 1))
    fo = np.fft.rfftn(stack, shape, axes=axes)
    fk = np.fft.rfftn(samples, shape)
    full = np.fft.irfftn(fo * fk[np.newaxis], shape, axes=axes)
    sl = (slice(None),) + tuple(slice(m, m + n) for n in u.shape)
    return full[sl] * kernel.h**u.ndim


def _cumulative_table_python(
    samples: np.ndarray, u: np.ndarray, order: np.ndarray, levels: np.ndarray, h: float
) -> np.ndarray:
    m = (samples.shape[0] - 1) // 2
    n = u.shape[0]
    running = np.zeros(n + 2 * m)
    table = np.empty((levels.size, n))
    sorted_vals = u[order]
    pos = 0
    for j in range(levels.size - 1, -1, -1):
        lev = levels[j]
        while pos < n and sorted_vals[pos] >= lev:
            y = order[pos]
            running[y : y + 2 * m + 1] += samples
            pos += 1
        table[j] = running[m : m + n]
    return table * h


if _HAVE_NUMBA:

    @njit(cache=True)
    def _cumulative_table_numba(samples, u, order, levels, h):  # pragma: no cover
        m = (samples.shape[0] - 1) // 2
        n = u.shape[0]
        width = samples.shape[0]
        running = np.zeros(n + 2 * m)
        table = np.empty((levels.shape[0], n))
        pos = 0
        for j in range(levels.shape[0] - 1, -1, -1):
            lev = levels[j]
            while pos < n and u[order[pos]] >= lev:
                y = order[pos]
                for i in range(width):
                    running[y + i] += samples[i]
                pos += 1
            for x in range(n):
                table[j, x] = running[m + x] * h
        return table

    @njit(cache=True)
    def _velocity_rows_numba(samples, u, order, levels, c1_vals, h):  # pragma: no cover
        m = (samples.shape[0] - 1) // 2
        n = u.shape[0]
        width = samples.shape[0]
        nl = levels.shape[0]
        running = np.zeros(n + 2 * m)
        rows = np.empty((nl + 1, n))
        pos = 0
        for j in range(nl - 1, -1, -1):
            lev = levels[j]
            while pos < n and u[order[pos]] >= lev:
                y = order[pos]
                for i in range(width):
                    running[y + i] += samples[i]
                pos += 1
            for x in range(n):
                rows[j, x] = running[m + x] * h + c1_vals[x]
        for x in range(n):
            rows[nl, x] = c1_vals[x]
        return rows

    @njit(cache=True)
    def _ramped_event_tables_1d(samples, u, c1_vals, h, delta):  # pragma: no cover
        """Velocity tables of the ramp-smoothed occupancy.

        Each node carries the level weight w(theta) = clip((u(y) - theta) /
        delta + 1/2, 0, 1), so the velocity c(theta) = c1 + h * conv(w) is
        continuous and piecewise linear in theta with breakpoints ("events")
        at u(y) +- delta/2.  Walking the events in descending theta order,
        this returns (events, C, S) with C[k] the velocity field at
        theta = events[k] and S[k] the slope field of the segment below:
        c(theta) = C[k] + S[k] * (events[k] - theta) for
        theta in [events[k+1], events[k]].
        """
        m = (samples.shape[0] - 1) // 2
        n = u.shape[0]
        width = samples.shape[0]
        ne = 2 * n
        events = np.empty(ne)
        kind = np.empty(ne, dtype=np.int8)
        node = np.empty(ne, dtype=np.int64)
        half = delta / 2.0
        for y in range(n):
            events[2 * y] = u[y] + half
            kind[2 * y] = 1  # ramp activates
            node[2 * y] = y
            events[2 * y + 1] = u[y] - half
            kind[2 * y + 1] = -1  # ramp completes
            node[2 * y + 1] = y
        order = np.argsort(events)[::-1]

        slope = np.zeros(n + 2 * m)
        cfield = np.zeros(n + 2 * m)
        C = np.empty((ne, n))
        S = np.empty((ne, n))
        ev_sorted = np.empty(ne)
        prev_theta = events[order[0]]
        for idx in range(ne):
            e = order[idx]
            theta = events[e]
            ev_sorted[idx] = theta
            gap = prev_theta - theta
            if gap > 0.0:
                for x in range(n + 2 * m):
                    cfield[x] += slope[x] * gap
            prev_theta = theta
            y = node[e]
            if kind[e] == 1:
                for i in range(width):
                    slope[y + i] += samples[i] / delta
            else:
                for i in range(width):
                    slope[y + i] -= samples[i] / delta
            for x in range(n):
                C[idx, x] = cfield[m + x] * h + c1_vals[x]
                S[idx, x] = slope[m + x] * h
        return ev_sorted, C, S

    @njit(cache=True)
    def _canonical_crossing_1d(
        samples, u, c1_vals, gsup, ginf, h, delta, dt, iters
    ):  # pragma: no cover
        """Float-canonical crossing solve: per node, bisect theta on the
        fixed bracket [-2, 2] with the ramped velocity evaluated by direct
        kernel-offset sums.

        Every arithmetic step is monotone in the field values and the
        bisection midpoints are data-independent dyadics, so two runs from
        pointwise-ordered fields stay ordered bit-exactly.  Slower than the
        event-table path; meant for comparison experiments.
        """
        m = (samples.shape[0] - 1) // 2
        n = u.shape[0]
        width = samples.shape[0]
        half = delta / 2.0
        out = np.empty(n)
        for x in range(n):
            lo = -2.0
            hi = 2.0
            for _ in range(iters):
                mid = 0.5 * (lo + hi)
                acc = 0.0
                for i in range(width):
                    y = x + i - m
                    if 0 <= y < n:
                        w = (u[y] - mid) / delta + 0.5
                        if w > 1.0:
                            w = 1.0
                        elif w < 0.0:
                            w = 0.0
                        acc += samples[i] * w
                c = c1_vals[x] + acc * h
                if c >= 0.0:
                    psi = u[x] + dt * c * gsup[x]
                else:
                    psi = u[x] + dt * c * ginf[x]
                if psi >= mid:
                    lo = mid
                else:
                    hi = mid
            out[x] = lo
        return out


def cumulative_superlevel_convolutions(
    kernel: KernelSpec, u: np.ndarray, levels: np.ndarray, t: float = 0.0
) -> np.ndarray:
    """Same as `superlevel_convolutions` but via cumulative node insertion,
    descending through the levels.  Exact-mode fast path for 1-D grids when
    `levels` are the distinct values of u."""
    if u.ndim != 1:
        raise ConfigurationError("cumulative insertion path is 1-D only")
    samples = kernel.samples_at(t)
    order = np.argsort(u, kind="stable")[::-1]
    if _HAVE_NUMBA:
        return _cumulative_table_numba(samples, u, order, levels, kernel.h)
    return _cumulative_table_python(samples, u, order, levels, kernel.h)


def _halved_velocity_rows_python(
    samples: np.ndarray,
    u: np.ndarray,
    order: np.ndarray,
    levels: np.ndarray,
    c1_vals: np.ndarray,
    h: float,
) -> np.ndarray:
    """Pure-python mirror of the numba halved-row builder (same summation
    order, so results are bit-identical)."""
    m = (samples.shape[0] - 1) // 2
    n = u.shape[0]
    nl = levels.size
    running = np.zeros(n + 2 * m)
    rows = np.empty((nl + 1, n))
    present = np.zeros(n, dtype=np.uint8)
    absent = np.full(n, 2, dtype=np.int8)
    pos = 0
    for j in range(nl - 1, -1, -1):
        lev = levels[j]
        while pos < n and u[order[pos]] >= lev:
            y = order[pos]
            present[y] = 1
            w = 1.0 if absent[y] == 0 else 0.5
            running[y : y + 2 * m + 1] += w * samples
            if y > 0:
                absent[y - 1] -= 1
                if present[y - 1] == 1 and absent[y - 1] == 0:
                    running[y - 1 : y + 2 * m] += 0.5 * samples
            if y < n - 1:
                absent[y + 1] -= 1
                if present[y + 1] == 1 and absent[y + 1] == 0:
                    running[y + 1 : y + 2 * m + 2] += 0.5 * samples
            pos += 1
        rows[j] = running[m : m + n] * h + c1_vals
    rows[nl] = c1_vals
    return rows


def superlevel_velocity_table(
    kernel: KernelSpec,
    c1_values: np.ndarray,
    u: np.ndarray,
    levels: np.ndarray,
    t: float = 0.0,
    method: str = "auto",
    quadrature: str = "closed",
) -> np.ndarray:
    """Velocity rows c1 + conv(w{u >= level}) for each level, plus a final
    row for the empty superlevel (velocity c1 alone).

    Rows are nonincreasing from first to last when the kernel is >= 0, for
    either quadrature ("closed" plain indicators, "halved" run-end halving),
    and pointwise nondecreasing under pointwise increase of u, which is what
    the stepping comparison argument rests on.
    """
    if method == "auto":
        method = "cumulative" if (u.ndim == 1 and levels.size > 64) else "fft"
    if method == "cumulative":
        if u.ndim != 1:
            raise ConfigurationError("cumulative insertion path is 1-D only")
        if quadrature == "halved":
            samples = kernel.samples_at(t)
            order = np.argsort(u, kind="stable")[::-1].copy()
            if _HAVE_NUMBA:
                return _halved_velocity_rows_numba(
                    samples, u, order, levels, c1_values.ravel(), kernel.h
                )
            return _halved_velocity_rows_python(
                samples, u, order, levels, c1_values.ravel(), kernel.h
            )
        if _HAVE_NUMBA:
            samples = kernel.samples_at(t)
            order = np.argsort(u, kind="stable")[::-1].copy()
            return _velocity_rows_numba(
                samples, u, order, levels, c1_values.ravel(), kernel.h
            )
        conv = cumulative_superlevel_convolutions(kernel, u, levels, t)
    elif method == "fft":
        conv = superlevel_convolutions(kernel, u, levels, t, quadrature=quadrature)
    else:
        raise ConfigurationError(f"unknown table method {method!r}")
    out = np.empty((levels.size + 1,) + u.shape)
    out[:-1] = conv
    out[:-1] += c1_values[np.newaxis]
    out[-1] = c1_values
    return out


def slepcev_velocity(
    kernel: KernelSpec,
    c1: ExternalVelocity,
    u: ScalarField,
    t: float,
    sign: str = "plus",
    mode: str = "exact",
    bins: int = 64,
    info: dict | None = None,
) -> ScalarField:
    """All-level velocity c1 + c0 * 1{u >= u(x)} ("plus") or with strict
    inequality ("minus") at every node.

    Exact mode evaluates each node against its own level.  Binned mode
    quantizes levels (see `binned_thresholds`): plus uses the largest
    threshold <= u(x), minus the smallest threshold > u(x), so for c0 >= 0
    the binned plus-velocity upper-bounds the exact one and the binned
    minus-velocity lower-bounds it.  The quantization error bound
    m0 * h^dim * (largest level-bin node count) is reported through `info`.
    """
    _check_spacing(kernel, u.grid)
    if sign not in ("plus", "minus"):
        raise ConfigurationError(f"sign must be 'plus' or 'minus', got {sign!r}")
    c1_vals = c1.sample_on(u.grid, t)
    samples = kernel.samples_at(t)
    if mode == "exact":
        conv = _own_level_velocity_exact(samples, u.values, kernel.h, strict=(sign == "minus"))
        if info is not None:
            info.update(mode="exact", quantization_bound=0.0)
        return ScalarField(u.grid, c1_vals + conv, t)
    if mode != "binned":
        raise ConfigurationError(f"mode must be 'exact' or 'binned', got {mode!r}")

    levels = binned_thresholds(u.values, bins)
    table = superlevel_velocity_table(kernel, np.zeros_like(c1_vals), u.values, levels, t)
    if sign == "plus":
        # largest threshold <= u(x); exists because levels[0] == min u
        idx = np.searchsorted(levels, u.values.ravel(), side="right") - 1
        idx = np.maximum(idx, 0)
    else:
        # smallest threshold > u(x); past the last level the set is empty
        idx = np.searchsorted(levels, u.values.ravel(), side="right")
    conv = table.reshape(levels.size + 1, -1)[idx, np.arange(idx.size)].reshape(u.grid.shape)
    if info is not None:
        counts = np.histogram(u.values.ravel(), bins=np.concatenate([levels, [np.inf]]))[0]
        bound = kernel.m0 * kernel.h ** u.grid.dim * float(counts.max()) if counts.size else 0.0
        info.update(mode="binned", bins=int(levels.size), quantization_bound=bound)
    return ScalarField(u.grid, c1_vals + conv, t)
