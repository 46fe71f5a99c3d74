"""Uniform radial grids, quadrature, finite differences and the H^1 orbit distance.

A radial function on R^3 is stored at the interior nodes r_i = (i + 1) h,
i = 0..n-1, with r_{n-1} = r_max. The value at the origin is never stored;
when a stencil needs it, it is reconstructed from the even extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import GridMismatch, GridTooCoarse, InvalidField

FOUR_PI = 4.0 * math.pi
MIN_NODES = 64


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        if not (self.r_max > 0.0 and math.isfinite(self.r_max)):
            raise InvalidField(f"r_max must be positive, got {self.r_max}")
        if self.n < MIN_NODES:
            raise GridTooCoarse(f"need at least {MIN_NODES} nodes, got {self.n}")

    @classmethod
    def from_spacing(cls, r_max: float, h: float) -> "RadialGrid":
        """Grid whose spacing does not exceed ``h`` and whose last node is >= r_max."""
        n = max(MIN_NODES, int(math.ceil(r_max / h - 1e-9)))
        return cls(n * h, n)

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        r = np.arange(1, self.n + 1, dtype=np.float64) * self.h
        r.flags.writeable = False
        return r

    def same_as(self, other: "RadialGrid") -> bool:
        return self.n == other.n and abs(self.r_max - other.r_max) <= 1e-12 * self.r_max


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a radial function (real or complex) at the grid nodes."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(np.float64)
        if v.shape != (self.grid.n,):
            raise InvalidField(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidField("field has non-finite samples")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn) -> "RadialFunction":
        return cls(grid, fn(grid.nodes))

    def __mul__(self, alpha):
        return RadialFunction(self.grid, alpha * self.values)

    __rmul__ = __mul__


RealRadialFunction = RadialFunction


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise InvalidField("field has non-finite samples")


def origin_value(values: np.ndarray) -> np.ndarray:
    """Even-extension reconstruction of f(0) from f(h), f(2h), f(3h) (exact for a + b r^2 + c r^4)."""
    return 1.5 * values[0] - 0.6 * values[1] + 0.1 * values[2]


def _simpson_weights(n_intervals: int) -> np.ndarray:
    """Weights (in units of h) for n_intervals+1 equispaced points, order 4."""
    w = np.zeros(n_intervals + 1)
    if n_intervals % 2 == 0:
        m = n_intervals
    else:
        m = n_intervals - 3
    if m > 0:
        w[0:m + 1:2] += 2.0 / 3.0
        w[1:m:2] += 4.0 / 3.0
        w[0] -= 1.0 / 3.0
        w[m] -= 1.0 / 3.0
    if m < n_intervals:
        # Simpson 3/8 on the last three intervals
        w[m:m + 4] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


_WEIGHT_CACHE: dict[int, np.ndarray] = {}


def quadrature_weights(grid: RadialGrid) -> np.ndarray:
    """Weights w_i with sum_i w_i g(r_i) ~ int_0^{r_max} g(r) dr for g(0) = 0."""
    w = _WEIGHT_CACHE.get(grid.n)
    if w is None:
        w = _simpson_weights(grid.n)[1:]
        w.flags.writeable = False
        _WEIGHT_CACHE[grid.n] = w
    return w * grid.h


def radial_integral(grid: RadialGrid, density: np.ndarray) -> float:
    """4 pi int_0^{r_max} density(r) r^2 dr (complex densities give complex results)."""
    r = grid.nodes
    total = FOUR_PI * np.dot(quadrature_weights(grid), density * r * r)
    return complex(total) if np.iscomplexobj(total) else float(total)


def integrate_radial(f: RadialFunction, power: int) -> float:
    """int_{R^3} f(|x|)^p dx by composite Simpson in r (no tail correction)."""
    if power < 0:
        raise InvalidField("power must be non-negative")
    _check_finite(f.values)
    vals = np.abs(f.values) if np.iscomplexobj(f.values) else f.values
    return radial_integral(f.grid, vals ** power)


def derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative of an even radial function at the nodes."""
    n = values.shape[0]
    if n < 6:
        raise GridTooCoarse("need at least 6 nodes for fourth-order stencils")
    f0 = origin_value(values)
    ext = np.concatenate(([values[0], f0], values))
    d = np.empty_like(values)
    # centred 5-point stencil at nodes 0..n-3 (ext index = node + 2)
    d[: n - 2] = (ext[0:n - 2] - 8.0 * ext[1:n - 1] + 8.0 * ext[3:n + 1] - ext[4:n + 2]) / (12.0 * h)
    f = values
    i = n - 2
    d[i] = (3.0 * f[i + 1] + 10.0 * f[i] - 18.0 * f[i - 1] + 6.0 * f[i - 2] - f[i - 3]) / (12.0 * h)
    i = n - 1
    d[i] = (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4]) / (12.0 * h)
    return d


def second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order second derivative of an even radial function at the nodes."""
    n = values.shape[0]
    if n < 6:
        raise GridTooCoarse("need at least 6 nodes for fourth-order stencils")
    f0 = origin_value(values)
    ext = np.concatenate(([values[0], f0], values))
    d = np.empty_like(values)
    d[: n - 2] = (-ext[0:n - 2] + 16.0 * ext[1:n - 1] - 30.0 * ext[2:n]
                  + 16.0 * ext[3:n + 1] - ext[4:n + 2]) / (12.0 * h * h)
    f = values
    i = n - 2
    d[i] = (10.0 * f[i + 1] - 15.0 * f[i] - 4.0 * f[i - 1] + 14.0 * f[i - 2]
            - 6.0 * f[i - 3] + f[i - 4]) / (12.0 * h * h)
    i = n - 1
    d[i] = (45.0 * f[i] - 154.0 * f[i - 1] + 214.0 * f[i - 2] - 156.0 * f[i - 3]
            + 61.0 * f[i - 4] - 10.0 * f[i - 5]) / (12.0 * h * h)
    return d


def gradient_norm_sq(f: RadialFunction) -> float:
    """int |grad f|^2 dx."""
    _check_finite(f.values)
    d = derivative(f.values, f.grid.h)
    return radial_integral(f.grid, np.abs(d) ** 2)


def h1_inner(u: RadialFunction, q: RadialFunction) -> complex:
    """<u, q>_{H^1} = int u conj(q) + grad u . conj(grad q) dx."""
    if not u.grid.same_as(q.grid):
        raise GridMismatch("fields live on different grids")
    h = u.grid.h
    du = derivative(u.values, h)
    dq = derivative(q.values, h)
    return complex(radial_integral(u.grid, u.values * np.conj(q.values)) + radial_integral(
        u.grid, du * np.conj(dq)))


def h1_norm(u: RadialFunction) -> float:
    vals = u.values
    d = derivative(vals, u.grid.h)
    return math.sqrt(radial_integral(u.grid, np.abs(vals) ** 2 + np.abs(d) ** 2))


def optimal_phase(u: RadialFunction, q: RadialFunction) -> float:
    """Phase theta minimising ||u - e^{i theta} q||_{H^1} for real q."""
    ip = h1_inner(u, q)
    if ip == 0:
        return 0.0
    return float(np.angle(ip))


def orbit_distance(u: RadialFunction, q: RadialFunction) -> float:
    """min over theta of ||u - e^{i theta} q||_{H^1} (translations excluded)."""
    theta = optimal_phase(u, q)
    rot = np.exp(1j * theta) if theta != 0.0 else 1.0
    diff = RadialFunction(u.grid, u.values - rot * q.values)
    return h1_norm(diff)


def resample(f: RadialFunction, grid: RadialGrid, tail: str = "zero") -> RadialFunction:
    """Quintic-spline resampling onto ``grid`` using the even extension at the origin.

    Points beyond the source r_max get 0 (``tail='zero'``) or raise.
    """
    src = f.grid
    r = src.nodes
    vals = f.values
    x = np.concatenate((-r[:5][::-1], [0.0], r))
    y = np.concatenate((vals[:5][::-1], [origin_value(vals)], vals))
    spline = make_interp_spline(x, y, k=5)
    target = grid.nodes
    out = np.zeros(grid.n, dtype=vals.dtype)
    inside = target <= src.r_max * (1 + 1e-12)
    if not np.all(inside) and tail != "zero":
        raise GridMismatch("target grid extends past the source grid")
    out[inside] = spline(target[inside])
    return RadialFunction(grid, out)
