"""Radial linearized operators L+ and L- around a ground state and their low spectrum.

With v = r u the radial Laplacian becomes d^2/dr^2 with v(0) = 0, so on the
interior nodes r_i = (i + 1) h the operators are symmetric tridiagonal
matrices (Dirichlet also at r = (n + 1) h). Only the radial sector is
represented: the translation modes of L+ are not radial and do not appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .errors import DomainError, EigenConvergenceFailure, GridTooCoarse
from .functionals import evaluate
from .ground_state import RadialProfile
from .output import write_csv

MAX_MODES = 8


class OperatorKind(Enum):
    LPLUS = "LPlus"
    LMINUS = "LMinus"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RadialOperator:
    grid: object
    diagonal: np.ndarray = field(repr=False)
    off_diagonal: np.ndarray = field(repr=False)
    kind: OperatorKind
    omega: float

    @property
    def h(self) -> float:
        return self.grid.h

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))

    def gershgorin(self) -> tuple[float, float]:
        a = np.abs(self.off_diagonal)
        rad = np.zeros_like(self.diagonal)
        rad[:-1] += a
        rad[1:] += a
        return float(np.min(self.diagonal - rad)), float(np.max(self.diagonal + rad))


def potential(q: np.ndarray, kind: OperatorKind) -> np.ndarray:
    q2 = q * q
    if kind is OperatorKind.LPLUS:
        return -3.0 * q2 + 5.0 * q2 * q2
    return -q2 + q2 * q2


def build_operator(q: RadialProfile, kind: OperatorKind | str) -> RadialOperator:
    """Tridiagonal -d^2/dr^2 + omega + V(r) acting on v = r u, second-order stencil."""
    kind = OperatorKind(kind) if not isinstance(kind, OperatorKind) else kind
    grid = q.grid
    if grid.n < 3:
        raise GridTooCoarse("operator needs at least three nodes")
    h = grid.h
    w = q.omega.omega
    diag = 2.0 / h ** 2 + w + potential(np.asarray(q.values, float), kind)
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    diag.flags.writeable = False
    off.flags.writeable = False
    return RadialOperator(grid, diag, off, kind, w)


def free_operator(grid, omega: float) -> RadialOperator:
    """-d^2/dr^2 + omega with no potential (the Q = 0 limit)."""
    h = grid.h
    diag = np.full(grid.n, 2.0 / h ** 2 + omega)
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    return RadialOperator(grid, diag, off, OperatorKind.LPLUS, omega)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue and eigenvector v = r u with h * sum(v^2) = 1 (the r^2-weighted norm of u)."""

    value: float
    vector: np.ndarray = field(repr=False)
    residual: float = 0.0


def _norm(v: np.ndarray, h: float) -> float:
    return math.sqrt(h * float(np.dot(v, v)))


def _inverse_iteration(op: RadialOperator, lam: float, previous, gap: float, max_iter: int = 8):
    n = op.diagonal.size
    h = op.h
    ab = np.empty((3, n))
    ab[0, 1:] = op.off_diagonal
    ab[2, :-1] = op.off_diagonal
    scale = max(1.0, abs(lam))
    shift = lam + 1e-13 * scale
    ab[1] = op.diagonal - shift
    rng = np.random.default_rng(12345 + len(previous))
    v = rng.standard_normal(n)
    best = None
    for _ in range(max_iter):
        for p in previous:
            v -= h * float(np.dot(p.vector, v)) * p.vector
        v = solve_banded((1, 1), ab, v, check_finite=False)
        v /= _norm(v, h)
        res = _norm(op.apply(v) - lam * v, h)
        if best is None or res < best[1]:
            best = (v.copy(), res)
        if res < 1e-8 * gap or res < 1e-10:
            break
    v, res = best
    if not (res < 1e-8 * gap or res < 1e-10):
        raise EigenConvergenceFailure(
            f"inverse iteration residual {res:.3g} at eigenvalue {lam:.12g}")
    i = int(np.argmax(np.abs(v)))
    if v[i] < 0:
        v = -v
    return v, res


def lowest_eigenpairs(op: RadialOperator, k: int = 1, tol: float = 1e-12) -> list[EigenPair]:
    """The k smallest eigenpairs, by Sturm-sequence bisection plus inverse iteration."""
    if not 1 <= k <= MAX_MODES:
        raise DomainError(f"k must be between 1 and {MAX_MODES}")
    lower, upper = op.gershgorin()
    vals = np.asarray(kernels.bisect_eigenvalues(
        np.ascontiguousarray(op.diagonal), np.ascontiguousarray(op.off_diagonal),
        k + 1, lower, upper, tol))
    out: list[EigenPair] = []
    for j in range(k):
        lam = float(vals[j])
        gaps = [abs(vals[j + 1] - lam)]
        if j > 0:
            gaps.append(abs(lam - vals[j - 1]))
        v, res = _inverse_iteration(op, lam, out, min(gaps))
        v.flags.writeable = False
        out.append(EigenPair(lam, v, res))
    return out


@dataclass(frozen=True)
class LambdaStar:
    formula: float
    rayleigh: float

    @property
    def agreement(self) -> float:
        return abs(self.formula - self.rayleigh) / abs(self.formula)


def rayleigh_lambda_star(q: RadialProfile) -> LambdaStar:
    """(int -2Q^4 + 4Q^6) / int Q^2 next to the Rayleigh quotient <Q, L+ Q> / <Q, Q>."""
    rep = evaluate(q, with_weinstein=False)
    formula = (-2.0 * rep.p4 + 4.0 * rep.p6) / rep.mass
    op = build_operator(q, OperatorKind.LPLUS)
    v = q.grid.nodes * q.values
    return LambdaStar(formula, float(np.dot(v, op.apply(v)) / np.dot(v, v)))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    return abs(float(np.dot(a, b))) / (np.linalg.norm(a) * np.linalg.norm(b))


def spectrum_csv(rows, meta: dict | None = None) -> str:
    """rows of (omega, kind, index, eigenvalue)."""
    return write_csv(["omega", "kind", "index", "eigenvalue"],
                     ([w, str(kd), i, lam] for w, kd, i, lam in rows), meta)


def mode_csv(op: RadialOperator, pair: EigenPair, meta: dict | None = None) -> str:
    r = op.grid.nodes
    return write_csv(["r", "v"], zip(r, pair.vector), meta)
