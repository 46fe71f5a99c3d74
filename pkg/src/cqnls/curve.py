"""Continuation of omega -> Q_omega and everything read off the mass curve.

The curve is sampled on a fixed omega grid, each sample solved by shooting
with the amplitude bracket warm-started from its neighbour. Summaries that
need more than sample resolution (omega*, omega_{E=0}, normalized
solutions, branch inversions) use fresh solves rather than interpolation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import bisect, brentq

from .errors import ConvergenceFailure, CurveRangeTooNarrow, DomainError, InvalidField
from .functionals import evaluate, rescaled_functionals
from .ground_state import OMEGA_MAX, RadialProfile, ShootingConfig, as_frequency, solve_ground_state
from .output import write_csv, write_json

log = logging.getLogger(__name__)

OMEGA_LO = 0.002
OMEGA_HI = 0.18
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LOWER_RHO_FACTOR = 4.0 / (3.0 * math.sqrt(3.0))
CURVE_COLUMNS = ["omega", "mass", "energy", "kinetic", "p4", "p6", "beta", "lambda_star",
                 "weinstein"]


class Stability(Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


class Unbounded(Enum):
    """+infinity as a variational value; compares greater than any float."""

    POSITIVE = "Unbounded"

    def __str__(self):
        return "Unbounded"


UNBOUNDED = Unbounded.POSITIVE


@dataclass(frozen=True)
class CurvePoint:
    omega: float
    mass: float
    energy: float
    kinetic: float
    p4: float
    p6: float
    beta: float
    lambda_star: float
    weinstein: float
    pohozaev: float = 0.0
    delta: float = 0.0
    rescaled_mass: float = math.nan
    rescaled_energy: float = math.nan

    def __post_init__(self):
        as_frequency(self.omega)
        if abs(self.p4 - 4.0 * self.omega * self.mass) > 1e-5 * self.p4:
            raise ConvergenceFailure(f"int Q^4 != 4 omega M at omega={self.omega}")
        if abs(self.pohozaev) > 1e-6 * self.kinetic:
            raise ConvergenceFailure(f"Pohozaev residual too large at omega={self.omega}")

    def row(self):
        return [getattr(self, c) for c in CURVE_COLUMNS]


def point_from_profile(q: RadialProfile) -> CurvePoint:
    rep = evaluate(q)
    b = rep.p6 / rep.kinetic
    r_mass, r_energy, _ = rescaled_functionals(b, rep.kinetic, rep.p4, rep.p6, rep.mass)
    return CurvePoint(
        omega=q.omega.omega,
        mass=rep.mass,
        energy=rep.energy,
        kinetic=rep.kinetic,
        p4=rep.p4,
        p6=rep.p6,
        beta=b,
        lambda_star=(-2.0 * rep.p4 + 4.0 * rep.p6) / rep.mass,
        weinstein=rep.weinstein,
        pohozaev=rep.pohozaev,
        delta=q.delta,
        rescaled_mass=r_mass,
        rescaled_energy=r_energy,
    )


def default_samples(n: int = 128, lo: float = OMEGA_LO, hi: float = OMEGA_HI) -> np.ndarray:
    """n points uniform in s = log(omega / (3/16 - omega)), refined towards both ends."""
    if n < 2:
        raise InvalidField("need at least two samples")
    s = np.linspace(_logit(lo), _logit(hi), n)
    out = OMEGA_MAX / (1.0 + np.exp(-s))
    out[0], out[-1] = lo, hi
    return out


def _logit(omega: float) -> float:
    return math.log(omega / (OMEGA_MAX - omega))


def _solve_chunk(args):
    omegas, cfg = args
    pts = []
    guess = None
    for w in omegas:
        try:
            q = solve_ground_state(w, cfg, guess=guess)
            pts.append(point_from_profile(q))
        except Exception as exc:
            raise type(exc)(f"omega={w!r}: {exc}") from exc
        guess = q.delta
    return pts


def _solve_points(omegas, cfg: ShootingConfig, workers: int | None, chunk: int):
    chunks = [(tuple(float(w) for w in omegas[i:i + chunk]), cfg)
              for i in range(0, len(omegas), chunk)]
    if workers is not None and workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_solve_chunk, chunks))
    else:
        parts = [_solve_chunk(c) for c in chunks]
    return tuple(p for part in parts for p in part)


class MassProbe:
    """Fresh ground-state solves at arbitrary omega, warm-started from the sampled curve."""

    def __init__(self, points, cfg: ShootingConfig):
        self.cfg = cfg
        self._w = np.array([p.omega for p in points])
        self._logd = np.log([p.delta for p in points])
        self._cache: dict[float, CurvePoint] = {}

    def guess(self, omega: float) -> float:
        return float(np.exp(np.interp(omega, self._w, self._logd)))

    def profile(self, omega: float) -> RadialProfile:
        return solve_ground_state(omega, self.cfg, guess=self.guess(omega))

    def point(self, omega: float) -> CurvePoint:
        omega = float(omega)
        p = self._cache.get(omega)
        if p is None:
            p = point_from_profile(self.profile(omega))
            self._cache[omega] = p
        return p

    def mass(self, omega: float) -> float:
        return self.point(omega).mass


def golden_section(f, a: float, b: float, tol: float = 1e-6):
    """Minimise a unimodal f on [a, b] until the bracket is shorter than ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def downhill_bracket(f, a: float, b: float, lo: float, hi: float, max_steps: int = 60):
    """Grow [a, b] downhill (golden ratio steps) until f rises on both sides; stays in [lo, hi]."""
    fa, fb = f(a), f(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    grow = 1.0 / GOLDEN
    for _ in range(max_steps):
        c = b + grow * (b - a)
        if not lo <= c <= hi:
            c = min(max(c, lo), hi)
            fc = f(c)
            if fc <= fb:
                raise CurveRangeTooNarrow(f"mass keeps decreasing up to omega={c:.6g}")
        else:
            fc = f(c)
        if fc > fb:
            return (min(a, c), max(a, c))
        a, b, fa, fb = b, c, fb, fc
    raise CurveRangeTooNarrow("no interior mass minimum found")


def find_critical_frequency(points, cfg: ShootingConfig | None = None,
                            start: tuple[float, float] | None = None, tol: float = 1e-6,
                            probe: MassProbe | None = None):
    """(omega*, m0) by golden-section on fresh solves of omega -> M(Q_omega).

    Without ``start`` the bracket is the two samples around the sampled minimum;
    with it, the bracket is grown downhill from ``start`` first.
    """
    points = _points_of(points)
    cfg = cfg or ShootingConfig()
    probe = probe or MassProbe(points, cfg)
    w = np.array([p.omega for p in points])
    m = np.array([p.mass for p in points])
    if start is None:
        i = int(np.argmin(m))
        if i == 0 or i == len(points) - 1:
            raise CurveRangeTooNarrow(
                f"sampled mass minimum sits at the end of the range (omega={w[i]:.6g})")
        a, b = w[i - 1], w[i + 1]
    else:
        a, b = downhill_bracket(probe.mass, float(start[0]), float(start[1]), w[0], w[-1])
    x, fx = golden_section(probe.mass, float(a), float(b), tol)
    return float(x), float(fx)


def find_zero_energy(points, probe: MassProbe) -> float:
    """omega at which E(Q_omega) changes sign (unique on the traced range)."""
    w = [p.omega for p in points]
    e = [p.energy for p in points]
    idx = [i for i in range(len(e) - 1) if e[i] > 0.0 >= e[i + 1]]
    if not idx:
        raise CurveRangeTooNarrow("energy does not change sign on the traced range")
    i = idx[0]
    return brentq(lambda x: probe.point(x).energy, w[i], w[i + 1], xtol=1e-13, rtol=1e-13)


def _points_of(obj):
    return obj.points if isinstance(obj, SolitonCurve) else tuple(obj)


@dataclass(frozen=True)
class SolitonCurve:
    points: tuple[CurvePoint, ...]
    omega_star: float
    m0: float
    omega_zero_energy: float
    d0: float
    rho: float
    zero_energy_point: CurvePoint
    config: ShootingConfig = field(default_factory=ShootingConfig, repr=False)

    def __post_init__(self):
        z = self.zero_energy_point
        if abs(z.energy) >= 1e-5 * z.kinetic:
            raise ConvergenceFailure("energy at omega_{E=0} is not zero to 1e-5 kinetic")
        if not (LOWER_RHO_FACTOR * self.rho * (1 - 1e-3) <= self.m0 <= self.rho * (1 + 1e-3)):
            raise ConvergenceFailure("m0 outside [4 rho / (3 sqrt 3), rho]")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])

    def summary(self) -> dict:
        return {"omega_star": self.omega_star, "m0": self.m0,
                "omega_zero_energy": self.omega_zero_energy, "d0": self.d0, "rho": self.rho}

    def probe(self) -> MassProbe:
        return MassProbe(self.points, self.config)

    def to_csv(self, meta: dict | None = None) -> str:
        return write_csv(CURVE_COLUMNS, (p.row() for p in self.points), meta)

    def summary_json(self, **extra) -> str:
        return write_json({**self.summary(), **extra})

    def to_dict(self) -> dict:
        return {"points": [asdict(p) for p in self.points], **self.summary(),
                "zero_energy_point": asdict(self.zero_energy_point),
                "config": asdict(self.config)}

    @classmethod
    def from_dict(cls, d: dict) -> "SolitonCurve":
        return cls(
            points=tuple(CurvePoint(**p) for p in d["points"]),
            omega_star=d["omega_star"], m0=d["m0"], omega_zero_energy=d["omega_zero_energy"],
            d0=d["d0"], rho=d["rho"], zero_energy_point=CurvePoint(**d["zero_energy_point"]),
            config=ShootingConfig(**d["config"]),
        )


def assemble_curve(points, cfg: ShootingConfig) -> SolitonCurve:
    points = tuple(sorted(points, key=lambda p: p.omega))
    probe = MassProbe(points, cfg)
    w_star, m0 = find_critical_frequency(points, cfg, probe=probe)
    w_zero = find_zero_energy(points, probe)
    z = probe.point(w_zero)
    return SolitonCurve(points, w_star, m0, w_zero, z.weinstein, z.mass, z, cfg)


def trace_curve(omega_samples=None, cfg: ShootingConfig | None = None,
                workers: int | None = None, chunk: int = 16) -> SolitonCurve:
    """Solve Q_omega on every sample and extract (omega*, m0, omega_{E=0}, d0, rho).

    Samples are split into fixed chunks solved left to right with warm starts,
    so the result does not depend on ``workers``.
    """
    cfg = cfg or ShootingConfig()
    omegas = default_samples() if omega_samples is None else np.asarray(omega_samples, float)
    if omegas.size < 3:
        raise CurveRangeTooNarrow("need at least three samples")
    if np.any(np.diff(omegas) <= 0):
        raise InvalidField("omega samples must be strictly increasing")
    for w in omegas:
        as_frequency(w)
    points = _solve_points(omegas, cfg, workers, chunk)
    return assemble_curve(points, cfg)


def central_derivative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second-order derivative at interior nodes of a non-uniform grid."""
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    return (hm ** 2 * y[2:] - hp ** 2 * y[:-2] + (hp ** 2 - hm ** 2) * y[1:-1]) / (
        hm * hp * (hm + hp))


@dataclass(frozen=True)
class IdentityReport:
    omega: np.ndarray
    energy_residual: np.ndarray
    energy_gap: np.ndarray
    kinetic_residual: np.ndarray
    algebraic_residual: np.ndarray
    slope: np.ndarray
    violations: list = field(default_factory=list)
    sign_changes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def local_derivatives(omega: float, probe: MassProbe, rel_step: float = 1e-3):
    """(dE, dM, dK)/domega by central differences of fresh solves at omega +- step."""
    step = rel_step * min(omega, OMEGA_MAX - omega)
    lo, hi = probe.point(omega - step), probe.point(omega + step)
    return tuple((getattr(hi, k) - getattr(lo, k)) / (2.0 * step)
                 for k in ("energy", "mass", "kinetic"))


def check_identities(curve, rel_step: float = 1e-3, rel_tol: float = 1e-3,
                     abs_tol: float = 1e-6, probe: MassProbe | None = None) -> IdentityReport:
    """dE/dw = -(w/2) dM/dw and dK/dw = (3/2) M at every interior sample.

    Derivatives are second-order central differences of fresh solves with step
    ``rel_step * min(w, 3/16 - w)``; the per-point algebraic identities are
    checked on the stored integrals. Near omega* both sides of the first
    identity vanish and ``abs_tol`` applies instead of ``rel_tol``.
    """
    pts = _points_of(curve)
    cfg = curve.config if isinstance(curve, SolitonCurve) else ShootingConfig()
    probe = probe or MassProbe(pts, cfg)
    w = np.array([p.omega for p in pts])
    m = np.array([p.mass for p in pts])
    e = np.array([p.energy for p in pts])
    k = np.array([p.kinetic for p in pts])
    b = np.array([p.beta for p in pts])
    inner = pts[1:-1]
    d = np.array([local_derivatives(p.omega, probe, rel_step) for p in inner])
    de, dm, dk = d[:, 0], d[:, 1], d[:, 2]
    wi = w[1:-1]
    target = -0.5 * wi * dm
    gap_e = np.abs(de - target)
    e_res = gap_e / np.maximum(np.abs(de), np.abs(target))
    k_res = np.abs(dk - 1.5 * m[1:-1]) / (1.5 * m[1:-1])
    alg = np.maximum.reduce([
        np.abs(m - (1 + b) * k / (3 * w)) / m,
        np.abs(e - (1 - b) * k / 6) / (k / 6),
        np.abs(np.array([p.p4 for p in pts]) - 4 * w * m) / (4 * w * m),
    ])
    violations = []
    for j in range(wi.size):
        if e_res[j] > rel_tol and gap_e[j] > abs_tol:
            violations.append(("dE/dw", float(wi[j]), float(e_res[j])))
        if k_res[j] > rel_tol:
            violations.append(("dK/dw", float(wi[j]), float(k_res[j])))
    for j in np.nonzero(alg > 1e-5)[0]:
        violations.append(("algebraic", float(w[j]), float(alg[j])))
    s = np.sign(dm)
    changes = [(float(wi[j]), "-+" if s[j] < 0 else "+-")
               for j in range(s.size - 1) if s[j] != s[j + 1]]
    return IdentityReport(wi, e_res, gap_e, k_res, alg, dm, violations, changes)


def monotonicity_violations(curve, omega_star: float | None = None):
    """Adjacent sample pairs breaking M decreasing left of omega* / increasing right of it."""
    pts = _points_of(curve)
    if omega_star is None:
        omega_star = curve.omega_star
    out = []
    for p, q in zip(pts[:-1], pts[1:]):
        if q.omega <= omega_star and not q.mass < p.mass:
            out.append((p.omega, q.omega, (q.mass - p.mass) / p.mass))
        elif p.omega >= omega_star and not q.mass > p.mass:
            out.append((p.omega, q.omega, (q.mass - p.mass) / p.mass))
    return out


@dataclass(frozen=True)
class StabilityVerdict:
    classification: Stability
    slope: float
    omega_vs_star: float
    evidence: str
    growth_factor: float = math.nan

    def to_dict(self) -> dict:
        return {"classification": str(self.classification), "slope": self.slope,
                "omega_vs_star": self.omega_vs_star, "evidence": self.evidence,
                "growth_factor": self.growth_factor}


def mass_slope(omega: float, probe: MassProbe, step: float | None = None) -> float:
    if step is None:
        step = 1e-4 * min(omega, OMEGA_MAX - omega)
    return (probe.mass(omega + step) - probe.mass(omega - step)) / (2.0 * step)


def classify_stability(omega, curve: SolitonCurve, resolution: float = 1e-6) -> StabilityVerdict:
    """Stable for omega >= omega*, Marginal just below it, Unstable further left.

    The verdict follows the position relative to omega*; the slope dM/domega is
    attached as evidence, so a vanishing slope left of omega* still reads Unstable.
    """
    w = as_frequency(omega).omega
    slope = mass_slope(w, curve.probe())
    gap = w - curve.omega_star
    if gap >= 0.0:
        cls, why = Stability.STABLE, "omega >= omega*"
    elif gap >= -resolution:
        cls, why = Stability.MARGINAL, "omega within resolution below omega*"
    else:
        cls, why = Stability.UNSTABLE, "omega < omega*"
    sign = "positive" if slope > 0 else "negative" if slope < 0 else "zero"
    return StabilityVerdict(cls, slope, gap, f"{why}; dM/domega {sign}")


def _branch_root(probe: MassProbe, m: float, a: float, b: float) -> float:
    return bisect(lambda x: probe.mass(x) - m, a, b, xtol=1e-13, rtol=1e-13, maxiter=200)


def normalized_solutions(m: float, curve: SolitonCurve, resolution: float | None = None):
    """Frequencies omega with M(Q_omega) = m, one per monotone branch."""
    if not m > 0.0:
        raise DomainError("mass must be positive")
    if resolution is None:
        resolution = 1e-9 * curve.m0
    if m < curve.m0 - resolution:
        return []
    if abs(m - curve.m0) <= resolution:
        return [curve.omega_star]
    probe = curve.probe()
    left = [p for p in curve.points if p.omega < curve.omega_star]
    right = [p for p in curve.points if p.omega > curve.omega_star]
    star = (curve.omega_star, curve.m0)
    out = []
    for branch, ordered in ((left, left), (right, right[::-1])):
        if not branch or ordered[0].mass < m:
            raise CurveRangeTooNarrow(f"mass {m:.6g} exceeds the traced branch range")
        nodes = [(p.omega, p.mass) for p in ordered] + [star]
        for (w0, m0_), (w1, m1) in zip(nodes[:-1], nodes[1:]):
            if m0_ >= m > m1 or (m0_ > m >= m1):
                out.append(_branch_root(probe, m, min(w0, w1), max(w0, w1)))
                break
    return sorted(out)


@dataclass(frozen=True)
class VariationalValues:
    mass: float
    d_m: float
    d_m_I: float | Unbounded
    minimizer: str
    minimizer_omega: float
    degenerate: bool = False
    candidates: tuple = ()

    def to_dict(self) -> dict:
        val = self.d_m_I
        return {"mass": self.mass, "d_m": self.d_m,
                "d_m_I": str(val) if isinstance(val, Unbounded) else val,
                "minimizer": self.minimizer, "minimizer_omega": self.minimizer_omega,
                "degenerate_minimum": self.degenerate,
                "candidates": [list(c) for c in self.candidates]}


def rescaled_branch(m: float, curve: SolitonCurve):
    """(omega, E(R_omega)) for every omega with M(R_omega) = m and beta(omega) > 1/3."""
    probe = curve.probe()
    pts = [p for p in curve.points if p.beta > 1.0 / 3.0]
    out = []

    def g(x):
        return probe.point(x).rescaled_mass - m

    for p, q in zip(pts[:-1], pts[1:]):
        fp, fq = p.rescaled_mass - m, q.rescaled_mass - m
        if fp == 0.0:
            out.append(p.omega)
        elif fp * fq < 0.0:
            out.append(bisect(g, p.omega, q.omega, xtol=1e-13, rtol=1e-13, maxiter=200))
    return [(w, probe.point(w).rescaled_energy) for w in out]


def variational_values(m: float, curve: SolitonCurve, tie_tol: float = 1e-9) -> VariationalValues:
    """d_m and d_m^I by branch inversion along the computed curve."""
    if not m > 0.0:
        raise DomainError("mass must be positive")
    probe = curve.probe()
    q_branch = [(w, probe.point(w).energy) for w in normalized_solutions(m, curve)]
    d_m = 0.0 if m <= curve.rho else min(e for _, e in q_branch)
    if m < LOWER_RHO_FACTOR * curve.rho:
        return VariationalValues(m, d_m, UNBOUNDED, "none", math.nan)
    cands = [("Q", w, e) for w, e in q_branch] + [("R", w, e) for w, e in rescaled_branch(m, curve)]
    if not cands:
        raise CurveRangeTooNarrow(f"no Q or R branch point of mass {m:.6g} on the traced range")
    cands.sort(key=lambda c: c[2])
    best = cands[0]
    degenerate = any(c[0] != best[0] and abs(c[2] - best[2]) <= tie_tol * abs(best[2])
                     for c in cands[1:])
    return VariationalValues(m, d_m, best[2], best[0], best[1], degenerate, tuple(cands))
