"""Positive radial ground states of -Q'' - (2/r) Q' + omega Q - Q^3 + Q^5 = 0.

The central amplitude is found by shooting from a Taylor series start and
bisecting on the undershoot/overshoot classification. The unknown is
parametrised by ``delta = Q_eq - a``, the gap between the amplitude and the
nonzero equilibrium Q_eq (larger root of Q^4 - Q^2 + omega = 0). Near
omega = 3/16 the ground state is a flat-topped bubble and ``delta`` falls far
below the spacing of doubles around ``a``; the kernel integrates the
deviation ``Q - Q_eq`` with an exact polynomial expansion while it is small,
so these gaps stay resolvable.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import kernels
from .errors import (
    ConvergenceFailure,
    DecayFitFailure,
    InvalidField,
    NoGroundState,
    ShootingBracketFailure,
)
from .radial import RadialFunction, RadialGrid, derivative, second_derivative
from .output import header_lines

log = logging.getLogger(__name__)

OMEGA_MAX = 3.0 / 16.0
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Frequency:
    omega: float

    def __post_init__(self):
        w = float(self.omega)
        if not (0.0 < w < OMEGA_MAX):
            raise NoGroundState(
                f"omega = {w!r}: a positive ground state exists only for 0 < omega < 3/16")
        object.__setattr__(self, "omega", w)

    def __float__(self):
        return self.omega


def as_frequency(omega) -> Frequency:
    return omega if isinstance(omega, Frequency) else Frequency(omega)


@dataclass(frozen=True)
class ShootingConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    bisection_tolerance: float = 1e-14
    r0: float = 1e-4
    overshoot_threshold: float = 1e-3
    max_radius: float | None = None
    n_scan: int = 512
    grid_h: float = 0.02
    r_max: float | None = None
    splice_level: float = 1e-5
    divergence_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rtol", "atol", "r0", "overshoot_threshold", "grid_h",
                     "splice_level", "divergence_tol"):
            if not getattr(self, name) > 0:
                raise InvalidField(f"{name} must be positive")
        if self.bisection_tolerance < 8 * EPS:
            raise InvalidField("bisection_tolerance must be at least 8 machine epsilons")
        if self.n_scan < 2:
            raise InvalidField("n_scan must be at least 2")


class Shot(Enum):
    UNDERSHOOT = -1
    UNDECIDED = 0
    OVERSHOOT = 1
    NONFINITE = 2


@dataclass(frozen=True)
class ShotResult:
    kind: Shot
    radius: float


@dataclass(frozen=True)
class RadialProfile:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    amplitude_a: float
    omega: Frequency
    decay_c: float
    decay_rate: float
    delta: float = 0.0
    splice_radius: float = math.inf
    config: ShootingConfig = field(default_factory=ShootingConfig, repr=False)

    @property
    def function(self) -> RadialFunction:
        return RadialFunction(self.grid, self.values)

    @property
    def splice_index(self) -> int:
        return int(min(self.grid.n, round(self.splice_radius / self.grid.h) - 1))

    def to_csv(self, header: dict | None = None) -> str:
        meta = {"omega": repr(self.omega.omega), "a": repr(self.amplitude_a),
                "c": repr(self.decay_c), "rate": repr(self.decay_rate)}
        meta.update(header or {})
        buf = io.StringIO()
        buf.write(header_lines(meta))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "Q"])
        for r, q in zip(self.grid.nodes, self.values):
            w.writerow([repr(float(r)), repr(float(q))])
        return buf.getvalue()


def potential_well(a: float, omega: float) -> float:
    """F(a) = a^4/4 - a^6/6 - omega a^2/2; a ground-state amplitude needs F(a) > 0."""
    return a ** 4 / 4.0 - a ** 6 / 6.0 - omega * a * a / 2.0


def amplitude_window(omega: float) -> tuple[float, float]:
    """The two positive roots of F(a) = 0."""
    d = math.sqrt(max(1.0 / 16.0 - omega / 3.0, 0.0))
    return math.sqrt(0.75 - 3.0 * d), math.sqrt(0.75 + 3.0 * d)


def equilibrium(omega: float) -> float:
    """Nonzero constant solution: larger root of Q^4 - Q^2 + omega = 0."""
    return math.sqrt((1.0 + math.sqrt(1.0 - 4.0 * omega)) / 2.0)


def _max_radius(omega: float, cfg: ShootingConfig) -> float:
    if cfg.max_radius is not None:
        return cfg.max_radius
    return 400.0 / math.sqrt(omega)


def shoot_delta(omega: float, delta: float, cfg: ShootingConfig, r_end: float | None = None,
                h_grid: float = 0.0, n_record: int = 0):
    """One shot with amplitude ``equilibrium(omega) - delta``."""
    q_eq = equilibrium(omega)
    r_end = _max_radius(omega, cfg) if r_end is None else r_end
    if n_record:
        out_q = np.zeros(n_record)
        out_dq = np.zeros(n_record)
    else:
        out_q = out_dq = None
    code, radius, filled = kernels.shoot(
        omega, q_eq, delta, cfg.r0, r_end, cfg.rtol, cfg.atol, cfg.overshoot_threshold,
        h_grid, out_q, out_dq)
    res = ShotResult(Shot(code), radius)
    if n_record:
        return res, out_q[:filled], out_dq[:filled]
    return res


def classify_shot(omega, amplitude: float, cfg: ShootingConfig | None = None) -> ShotResult:
    """Undershoot if Q crosses zero going down, overshoot if Q' >= 0 while Q > threshold*a.

    Returns ``Shot.UNDECIDED`` when neither happens before the maximum radius.
    """
    cfg = cfg or ShootingConfig()
    omega = as_frequency(omega).omega
    return shoot_delta(omega, equilibrium(omega) - amplitude, cfg)


def _classify(omega, delta, cfg):
    r_end = _max_radius(omega, cfg)
    for _ in range(4):
        res = shoot_delta(omega, delta, cfg, r_end)
        if res.kind in (Shot.OVERSHOOT, Shot.UNDERSHOOT):
            return res
        if res.kind is Shot.NONFINITE:
            raise ConvergenceFailure(f"non-finite shooting trajectory at omega={omega}")
        r_end *= 2.0
    raise ConvergenceFailure(f"shot undecided up to r={r_end / 2} at omega={omega}")


def _scan_bracket(omega: float, cfg: ShootingConfig) -> tuple[float, float]:
    """Bracket (delta_over, delta_under) by scanning amplitudes upward from the well's lower root."""
    a_min, a_max = amplitude_window(omega)
    q_eq = equilibrium(omega)
    delta_prev = q_eq - a_min
    n = cfg.n_scan
    for j in range(n):
        a = a_min + (j + 1) * (a_max - a_min) / (n + 1)
        delta = q_eq - a
        if delta <= 0.0:
            break
        if _classify(omega, delta, cfg).kind is Shot.UNDERSHOOT:
            return delta_prev, delta
        delta_prev = delta
    # bubble regime: the ground state sits closer to Q_eq than any uniform candidate
    delta = delta_prev
    while delta > 1e-290:
        nxt = delta / 10.0
        if _classify(omega, nxt, cfg).kind is Shot.UNDERSHOOT:
            return delta, nxt
        delta = nxt
    raise ShootingBracketFailure(f"no undershoot/overshoot sign change at omega={omega}")


def _bracket_from_guess(omega: float, guess: float, cfg: ShootingConfig) -> tuple[float, float]:
    q_eq = equilibrium(omega)
    a_min, _ = amplitude_window(omega)
    d_top = q_eq - a_min
    step = 1e-3
    lo = hi = min(guess, d_top)
    for _ in range(60):
        lo = min(lo * (1.0 + step), d_top)
        hi = hi / (1.0 + step)
        k_lo = _classify(omega, lo, cfg).kind
        k_hi = _classify(omega, hi, cfg).kind
        if k_lo is Shot.OVERSHOOT and k_hi is Shot.UNDERSHOOT:
            return lo, hi
        if k_lo is Shot.UNDERSHOOT:
            hi = lo
        elif k_hi is Shot.OVERSHOOT:
            lo = hi
        step *= 4.0
    return _scan_bracket(omega, cfg)


def find_delta(omega, cfg: ShootingConfig | None = None, guess: float | None = None,
               bracket: tuple[float, float] | None = None) -> tuple[float, float]:
    """Bisect (in log scale) for the ground-state gap; returns (delta_over, delta_under)."""
    cfg = cfg or ShootingConfig()
    omega = as_frequency(omega).omega
    if bracket is not None:
        lo, hi = bracket
    elif guess is not None:
        lo, hi = _bracket_from_guess(omega, guess, cfg)
    else:
        lo, hi = _scan_bracket(omega, cfg)
    for _ in range(400):
        if lo - hi <= cfg.bisection_tolerance * hi:
            return lo, hi
        mid = math.sqrt(lo * hi)
        if not hi < mid < lo:
            mid = 0.5 * (lo + hi)
            if not hi < mid < lo:
                return lo, hi
        kind = _classify(omega, mid, cfg).kind
        if kind is Shot.OVERSHOOT:
            lo = mid
        else:
            hi = mid
    raise ConvergenceFailure(f"amplitude bisection stalled at omega={omega}")


def default_r_max(omega: float, r_half: float = 0.0) -> float:
    return max(40.0 / math.sqrt(omega), 60.0) + r_half


def fit_decay(profile, window: tuple[float, float] = (0.6, 0.85), absolute: bool = False):
    """Least-squares fit of log(r Q) = log c - rate r over a radial window.

    ``window`` is a fraction of r_max unless ``absolute`` is true.
    """
    if isinstance(profile, RadialProfile):
        grid, values = profile.grid, profile.values
    else:
        grid, values = profile.grid, np.asarray(profile.values)
    r = grid.nodes
    lo, hi = window if absolute else (window[0] * grid.r_max, window[1] * grid.r_max)
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 3:
        raise DecayFitFailure("fit window holds fewer than 3 nodes")
    q = values[sel]
    if np.any(q <= 0.0):
        raise DecayFitFailure("non-positive samples in the decay-fit window")
    slope, intercept = np.polyfit(r[sel], np.log(r[sel] * q), 1)
    return float(math.exp(intercept)), float(-slope)


def residual(profile: RadialProfile) -> float:
    """max |Q'' + (2/r)Q' - omega Q + Q^3 - Q^5| / max|Q| over the nodes with centred stencils."""
    q = np.asarray(profile.values, dtype=float)
    scale = np.max(np.abs(q))
    if scale == 0.0:
        return 0.0
    h = profile.grid.h
    r = profile.grid.nodes
    w = profile.omega.omega
    res = second_derivative(q, h) + 2.0 * derivative(q, h) / r - w * q + q ** 3 - q ** 5
    return float(np.max(np.abs(res[:-2])) / scale)


def _splice_tail(r: np.ndarray, values: np.ndarray, i_s: int, k: float) -> None:
    """Continue ``values`` past index ``i_s`` with the decaying Yukawa mode c e^{-k r}/r, in place.

    The shot carries a growing-mode error d e^{k r}/r that reaches ~1e-7
    relative by the splice point; matching the value alone leaves a kink
    there. Both modes are fitted on a window before r_s and the shot is
    blended into the decaying one with a smooth weight.
    """
    r_s = r[i_s]
    width = min(2.0 / k, r_s / 3.0)
    j0 = int(np.searchsorted(r, r_s - width))
    rw = r[j0:i_s + 1]
    basis = np.column_stack((np.exp(-k * (rw - r_s)), np.exp(k * (rw - r_s))))
    (c, _), *_ = np.linalg.lstsq(basis, rw * values[j0:i_s + 1], rcond=None)
    model = c * np.exp(-k * (r[j0:] - r_s)) / r[j0:]
    t = np.clip((r[j0:] - rw[0]) / (r_s - rw[0]), 0.0, 1.0)
    chi = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    shot = np.concatenate((values[j0:i_s + 1], model[i_s + 1 - j0:]))
    values[j0:] = (1.0 - chi) * shot + chi * model


def solve_ground_state(omega, cfg: ShootingConfig | None = None, guess: float | None = None,
                       bracket: tuple[float, float] | None = None) -> RadialProfile:
    """Ground state Q_omega on a uniform grid, tail spliced onto c e^{-sqrt(omega) r}/r."""
    cfg = cfg or ShootingConfig()
    freq = as_frequency(omega)
    w = freq.omega
    d_over, d_under = find_delta(w, cfg, guess=guess, bracket=bracket)
    h = cfg.grid_h
    k = math.sqrt(w)

    r_rec = 1.02 * max(_classify(w, d_over, cfg).radius, _classify(w, d_under, cfg).radius)
    if cfg.r_max is not None:
        r_rec = max(r_rec, cfg.r_max)
    n_rec = int(math.ceil(r_rec / h)) + 1
    _, q_lo, dq_lo = shoot_delta(w, d_over, cfg, r_end=r_rec + 2 * h, h_grid=h, n_record=n_rec)
    _, q_hi, dq_hi = shoot_delta(w, d_under, cfg, r_end=r_rec + 2 * h, h_grid=h, n_record=n_rec)
    m = min(q_lo.size, q_hi.size)
    q_mid = 0.5 * (q_lo[:m] + q_hi[:m])
    a = equilibrium(w) - 0.5 * (d_over + d_under)

    diverged = np.nonzero(np.abs(q_lo[:m] - q_hi[:m]) > cfg.divergence_tol * np.abs(q_mid))[0]
    low = np.nonzero(q_mid < cfg.splice_level * a)[0]
    s = m
    if diverged.size:
        s = min(s, int(diverged[0]))
    if low.size:
        s = min(s, int(low[0]))

    half = np.nonzero(q_mid < 0.5 * a)[0]
    r_half = (half[0] + 1) * h if half.size else 0.0
    r_max = cfg.r_max if cfg.r_max is not None else default_r_max(w, r_half)
    grid = RadialGrid.from_spacing(r_max, h)
    r = grid.nodes
    if s < grid.n and q_mid[s - 1] > 1e-2 * a:
        raise ConvergenceFailure(
            f"shooting trajectories diverged at r={s * h:.3g} before the tail at omega={w}")
    values = np.empty(grid.n)
    n_shoot = min(s, grid.n)
    if n_shoot < grid.n and s > m:
        raise ConvergenceFailure(f"shooting record too short at omega={w}")
    values[:n_shoot] = q_mid[:n_shoot]
    splice_radius = math.inf
    if n_shoot < grid.n:
        r_s = r[n_shoot - 1]
        splice_radius = float(r_s)
        _splice_tail(r, values, n_shoot - 1, k)

    profile = RadialProfile(grid, values, a, freq, 0.0, 0.0, 0.5 * (d_over + d_under),
                            splice_radius, cfg)
    try:
        c, rate = fit_decay(profile)
    except DecayFitFailure:
        c, rate = float("nan"), float("nan")
    log.debug("omega=%.6g a=%.15g delta=%.3e splice=%.3g", w, a, profile.delta, splice_radius)
    return replace(profile, decay_c=c, decay_rate=rate)
