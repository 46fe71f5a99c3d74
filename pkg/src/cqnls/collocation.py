"""Chebyshev-collocation boundary-value solve of the ground-state ODE.

Independent of the shooting solver: the profile is expanded on [-R, R] with
an odd number of intervals (so r = 0 is never a node), folded by even
symmetry, and Newton's method is applied to the collocated ODE with the
asymptotic Robin condition Q'(R) = -(sqrt(omega) + 1/R) Q(R). Integrals use
Clenshaw-Curtis weights plus the exact linear-tail contribution beyond R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure
from .ground_state import as_frequency


def cheb(n: int):
    """Chebyshev points x_j = cos(j pi / n) and the differentiation matrix."""
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, x


def clenshaw_curtis(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] at the points of ``cheb(n)``."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    inner = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(n * theta[inner]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / n
    return w


@dataclass(frozen=True)
class CollocationSolution:
    omega: float
    radius: float
    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    newton_steps: int

    def _integral(self, density):
        r = self.nodes
        return 4.0 * math.pi * float(np.dot(self.weights, density * r * r))

    def _tail(self, power: int) -> float:
        # int_R^inf (c e^{-k r}/r)^p r^2 dr for the linear tail, p = 2 only matters
        k = math.sqrt(self.omega)
        q_r = self.values[0]
        if power != 2:
            return 0.0
        return 4.0 * math.pi * q_r * q_r * self.radius ** 2 / (2.0 * k)

    @property
    def mass(self) -> float:
        return self._integral(self.values ** 2) + self._tail(2)

    def integral(self, power: int) -> float:
        return self._integral(self.values ** power) + self._tail(power)

    def __call__(self, r):
        """Barycentric evaluation of the even interpolant at radii ``r`` <= R."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        n = 2 * self.nodes.size - 1
        x = np.concatenate((self.nodes, -self.nodes[::-1])) / self.radius
        f = np.concatenate((self.values, self.values[::-1]))
        wb = (-1.0) ** np.arange(n + 1)
        wb[0] *= 0.5
        wb[-1] *= 0.5
        t = r / self.radius
        diff = t[:, None] - x[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        k = wb / diff
        out = (k @ f) / k.sum(axis=1)
        rows, cols = np.nonzero(exact)
        out[rows] = f[cols]
        return out


def default_radius(omega: float, guess) -> float:
    """Half-amplitude radius of the starting iterate plus 28 decay lengths."""
    k = math.sqrt(omega)
    r = np.linspace(0.0, 60.0 / k, 4001)[1:]
    q = np.asarray(guess(r), dtype=float)
    below = np.nonzero(q < 0.5 * q[0])[0]
    r_half = r[below[0]] if below.size else 0.0
    return r_half + 28.0 / k


def solve_collocation(omega, guess, radius: float | None = None, n: int = 901,
                      tol: float = 1e-13, max_steps: int = 60) -> CollocationSolution:
    """Newton solve on the folded Chebyshev grid with ``n`` intervals on [-R, R].

    ``guess`` is a callable r -> Q(r) supplying the starting iterate only.
    """
    w = as_frequency(omega).omega
    if n % 2 == 0:
        n += 1
    k = math.sqrt(w)
    if radius is None:
        radius = default_radius(w, guess)
    d, x = cheb(n)
    half = (n + 1) // 2
    r = radius * x[:half]
    d1 = (d[:half, :half] + d[:half, ::-1][:, :half]) / radius
    d2full = d @ d
    d2 = (d2full[:half, :half] + d2full[:half, ::-1][:, :half]) / radius ** 2
    cw = clenshaw_curtis(n)[:half] * radius

    q = np.asarray(guess(r), dtype=float)
    lin = d2 + np.diag(2.0 / r) @ d1
    bc = d1[0].copy()
    bc[0] += k + 1.0 / radius
    steps = 0
    for steps in range(1, max_steps + 1):
        f = lin @ q - w * q + q ** 3 - q ** 5
        f[0] = bc @ q
        jac = lin + np.diag(-w + 3.0 * q ** 2 - 5.0 * q ** 4)
        jac[0] = bc
        dq = np.linalg.solve(jac, -f)
        q = q + dq
        if np.max(np.abs(dq)) < tol * np.max(np.abs(q)):
            break
    else:
        raise ConvergenceFailure(f"collocation Newton did not converge at omega={w}")
    if np.any(q[1:] < -1e-8 * np.max(q)):
        raise ConvergenceFailure("collocation converged to a sign-changing solution")
    return CollocationSolution(w, radius, r, q, cw, steps)
