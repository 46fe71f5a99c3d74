"""Radial time evolution of i phi_t + Delta phi + |phi|^2 phi - |phi|^4 phi = 0.

With v = r u the equation becomes i v_t + v_rr + (|u|^2 - |u|^4) v = 0 on
(0, L), v(0) = v(L) = 0, L = (n + 1) h. Strang splitting: half a nonlinear
phase rotation, an exact kinetic step in the type-I sine basis, half a
nonlinear rotation. Both sub-steps are unitary, so the discrete mass
4 pi h sum |v|^2 is conserved to rounding unless the absorber is on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.fft import dst, idst, next_fast_len

from .curve import SolitonCurve, Stability, StabilityVerdict, classify_stability
from .errors import InvalidField, NumericalBlowUp, PerturbationOutOfRange, StepTooLarge
from .ground_state import RadialProfile, ShootingConfig, as_frequency, solve_ground_state
from .output import write_csv
from .radial import FOUR_PI, RadialFunction, RadialGrid, h1_norm, optimal_phase, orbit_distance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComplexRadialField:
    """v(r_i) = r_i u(r_i) at the interior nodes, at time ``time``."""

    grid: RadialGrid
    v_values: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.v_values, dtype=np.complex128)
        if v.shape != (self.grid.n,):
            raise InvalidField(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidField("field has non-finite samples")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "v_values", v)

    @classmethod
    def from_u(cls, u: RadialFunction, time: float = 0.0) -> "ComplexRadialField":
        return cls(u.grid, u.grid.nodes * u.values, time)

    @property
    def u(self) -> RadialFunction:
        return RadialFunction(self.grid, self.v_values / self.grid.nodes)

    def conj(self) -> "ComplexRadialField":
        return replace(self, v_values=np.conj(self.v_values))

    def origin_value(self) -> complex:
        """u(0) from the even extension of u, i.e. the odd extension of v (v(0) = 0)."""
        v = self.v_values
        h = self.grid.h
        return (1.5 * v[0] - 0.3 * v[1] + v[2] / 30.0) / h


class Perturbation(Enum):
    AMPLITUDE = "Amplitude"
    MASS_PRESERVING = "MassPreserving"
    RANDOM = "Random"


@dataclass(frozen=True)
class DynamicsConfig:
    record_every: int = 100
    snapshot_every: int = 0
    absorber: bool = False
    absorber_fraction: float = 0.1
    absorber_strength: float = 1.0
    step_budget: float = 50.0


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    mass_series: list = field(default_factory=list)
    energy_series: list = field(default_factory=list)
    orbit_distance_series: list = field(default_factory=list)
    phase_series: list = field(default_factory=list)
    field_snapshots: list = field(default_factory=list)
    final: ComplexRadialField | None = None

    def to_csv(self, meta: dict | None = None) -> str:
        rows = zip(self.times, self.mass_series, self.energy_series, self.orbit_distance_series)
        return write_csv(["t", "mass", "energy", "orbit_distance"], rows, meta)


def snapshot_csv(state: ComplexRadialField, meta: dict | None = None) -> str:
    u = state.v_values / state.grid.nodes
    return write_csv(["r", "re_u", "im_u"], zip(state.grid.nodes, u.real, u.imag),
                     {"t": repr(state.time), **(meta or {})})


def wavenumbers(grid: RadialGrid) -> np.ndarray:
    """kappa_k = pi k / L for the type-I sine basis on (0, (n + 1) h)."""
    length = (grid.n + 1) * grid.h
    return math.pi * np.arange(1, grid.n + 1) / length


def discrete_mass(state: ComplexRadialField) -> float:
    v = state.v_values
    return FOUR_PI * state.grid.h * float(np.vdot(v, v).real)


def discrete_energy(state: ComplexRadialField) -> float:
    """Spectral kinetic energy plus trapezoid potential terms."""
    v = state.v_values
    h = state.grid.h
    r = state.grid.nodes
    vhat = dst(v, type=1, norm="ortho")
    kappa = wavenumbers(state.grid)
    kinetic = FOUR_PI * h * float(np.sum(kappa ** 2 * np.abs(vhat) ** 2))
    a2 = np.abs(v / r) ** 2
    r2 = r * r
    p4 = FOUR_PI * h * float(np.sum(a2 * a2 * r2))
    p6 = FOUR_PI * h * float(np.sum(a2 ** 3 * r2))
    return kinetic / 2.0 - p4 / 4.0 + p6 / 6.0


def _absorber(grid: RadialGrid, cfg: DynamicsConfig, dt: float) -> np.ndarray | None:
    if not cfg.absorber:
        return None
    r = grid.nodes
    length = (grid.n + 1) * grid.h
    start = (1.0 - cfg.absorber_fraction) * length
    x = np.clip((r - start) / (length - start), 0.0, None)
    return np.exp(-dt * cfg.absorber_strength * x * x)


def evolve(state: ComplexRadialField, dt: float, steps: int, cfg: DynamicsConfig | None = None,
           reference: RadialProfile | RadialFunction | None = None) -> TrajectoryRecord:
    """Strang-split evolution for ``steps`` steps of size ``dt``.

    Mass, energy and (when ``reference`` is given) the phase-optimal H^1
    distance to it are logged every ``cfg.record_every`` steps and at the end.
    """
    cfg = cfg or DynamicsConfig()
    grid = state.grid
    if not dt > 0.0 or steps < 0:
        raise InvalidField("dt must be positive and steps non-negative")
    if dt * (math.pi / grid.h) ** 2 > cfg.step_budget:
        raise StepTooLarge(
            f"dt (pi/h)^2 = {dt * (math.pi / grid.h) ** 2:.3g} exceeds the budget {cfg.step_budget}")
    ref = None
    if reference is not None:
        ref = reference.function if isinstance(reference, RadialProfile) else reference
        if not ref.grid.same_as(grid):
            raise InvalidField("reference lives on a different grid")
    r = grid.nodes
    kin = np.exp(-1j * dt * wavenumbers(grid) ** 2)
    damp = _absorber(grid, cfg, dt)
    half = 0.5 * dt
    rec = TrajectoryRecord()

    def log_state(v, t):
        s = ComplexRadialField(grid, v, t)
        rec.times.append(t)
        rec.mass_series.append(discrete_mass(s))
        rec.energy_series.append(discrete_energy(s))
        if ref is not None:
            u = s.u
            rec.orbit_distance_series.append(orbit_distance(u, ref))
            rec.phase_series.append(optimal_phase(u, ref))
        if cfg.snapshot_every and round(t / dt) % (cfg.snapshot_every * cfg.record_every) == 0:
            rec.field_snapshots.append(s)
        return s

    def rotate(v, tau):
        # |v| is invariant under the rotation, so consecutive half steps merge exactly
        a2 = (v.real ** 2 + v.imag ** 2) / r2
        phase = tau * (a2 - a2 * a2)
        return v * (np.cos(phase) + 1j * np.sin(phase))

    r2 = r * r
    v = np.array(state.v_values, dtype=np.complex128)
    t0 = state.time
    log_state(v, t0)
    pending = False
    for step in range(1, steps + 1):
        v = rotate(v, dt if pending else half)
        v = idst(kin * dst(v, type=1, norm="ortho"), type=1, norm="ortho")
        if damp is not None:
            v *= damp
        pending = True
        if step % cfg.record_every == 0 or step == steps:
            v = rotate(v, half)
            pending = False
            t = t0 + step * dt
            if not np.all(np.isfinite(v)):
                raise NumericalBlowUp(f"non-finite field at t={t:.6g}", time=t)
            rec.final = log_state(v, t)
    if rec.final is None:
        rec.final = ComplexRadialField(grid, v, t0)
    return rec


def unwrap_phase(rec: TrajectoryRecord) -> np.ndarray:
    return np.unwrap(np.asarray(rec.phase_series))


@dataclass(frozen=True)
class ConservationReport:
    mass_drift: float
    energy_drift: float

    def to_dict(self):
        return {"mass_drift": self.mass_drift, "energy_drift": self.energy_drift}


def conservation_report(rec: TrajectoryRecord) -> ConservationReport:
    """Maximum relative drift of mass and energy (absolute when the initial value is 0)."""
    if not rec.times:
        raise InvalidField("empty trajectory")

    def drift(series):
        s = np.asarray(series)
        d = float(np.max(np.abs(s - s[0])))
        return d / abs(s[0]) if s[0] != 0.0 else d

    return ConservationReport(drift(rec.mass_series), drift(rec.energy_series))


def fast_radius(r_max: float, h: float) -> float:
    """Radius n h >= r_max with n + 1 a fast FFT length (the sine transform pads to 2(n + 1))."""
    n = int(math.ceil(r_max / h - 1e-9))
    return (next_fast_len(n + 1, real=True) - 1) * h


def dynamics_profile(omega, h: float = 0.02, cfg: ShootingConfig | None = None,
                     factor: float = 2.0) -> RadialProfile:
    """Q_omega on ``factor`` times the ground-state default radius (room for shed radiation)."""
    cfg = cfg or ShootingConfig()
    w = as_frequency(omega).omega
    base = solve_ground_state(w, replace(cfg, grid_h=h, r_max=None))
    r_max = fast_radius(factor * base.grid.r_max, h)
    return solve_ground_state(w, replace(cfg, grid_h=h, r_max=r_max), guess=base.delta)


def random_bump(grid: RadialGrid, scale: float, seed: int = 0) -> np.ndarray:
    """Sum of a few Gaussian shells inside radius ``scale``, unit H^1 norm, fixed seed."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    f = np.zeros(grid.n)
    for _ in range(4):
        centre = rng.uniform(0.0, scale)
        width = rng.uniform(0.3, 1.0) * max(scale, 1.0) / 2.0
        f += rng.uniform(-1.0, 1.0) * np.exp(-((r - centre) / width) ** 2)
    return f / h1_norm(RadialFunction(grid, f))


def perturbed_soliton(q: RadialProfile, eps: float, kind: Perturbation | str,
                      seed: int = 0) -> ComplexRadialField:
    """Initial data near Q_omega: (1+eps) Q, the mass-preserving dilation, or Q + random bump."""
    from .functionals import scale

    kind = Perturbation(kind) if not isinstance(kind, Perturbation) else kind
    if abs(eps) > 0.1:
        raise PerturbationOutOfRange(f"|eps| = {abs(eps):g} > 0.1")
    f = q.function
    if eps == 0.0:
        u = f.values
    elif kind is Perturbation.AMPLITUDE:
        u = (1.0 + eps) * f.values
    elif kind is Perturbation.MASS_PRESERVING:
        u = scale(f, 1.0 + eps).values
    else:
        a = q.amplitude_a
        core = float(q.grid.nodes[np.argmax(q.values < 0.5 * a)])
        u = f.values + eps * h1_norm(f) * random_bump(q.grid, max(core, 2.0), seed)
    return ComplexRadialField(q.grid, q.grid.nodes * u.astype(np.complex128), 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    h: float | None = None
    dt: float | None = None
    unstable_factor: float = 10.0
    stable_factor: float = 3.0
    noise_floor: float = 1e-6
    record_every: int = 200
    seed: int = 0
    absorber: bool = True


def experiment_grid(omega: float, cfg: ExperimentConfig) -> tuple[float, float]:
    h = cfg.h if cfg.h is not None else min(0.2, 0.03 / math.sqrt(omega))
    dt = cfg.dt if cfg.dt is not None else min(0.1, 2.0 * h * h)
    return h, dt


@dataclass(frozen=True)
class ExperimentRun:
    kind: Perturbation
    initial_distance: float
    max_distance: float
    record: TrajectoryRecord = field(repr=False)
    blew_up: bool = False

    @property
    def growth(self) -> float:
        if self.initial_distance == 0.0:
            return math.inf if self.max_distance > 0.0 else 1.0
        return self.max_distance / self.initial_distance


def stability_experiment(omega, eps: float = 0.01, horizon: float | None = None,
                         cfg: ExperimentConfig | None = None,
                         curve: SolitonCurve | None = None):
    """Evolve three perturbations of Q_omega and classify by orbit-distance growth.

    Returns (verdict, runs). Unstable if any run grows past ``unstable_factor``
    times its initial distance, Stable if all stay below ``stable_factor``,
    Inconclusive otherwise. Evidence is within the radial class only.
    """
    cfg = cfg or ExperimentConfig()
    w = as_frequency(omega).omega
    if horizon is None:
        horizon = 50.0 / w
    h, dt = experiment_grid(w, cfg)
    q = dynamics_profile(w, h)
    norm_q = h1_norm(q.function)
    steps = int(math.ceil(horizon / dt))
    dyn = DynamicsConfig(record_every=cfg.record_every, absorber=cfg.absorber)
    runs = []
    for kind in Perturbation:
        state = perturbed_soliton(q, eps, kind, cfg.seed)
        d0 = orbit_distance(state.u, q.function)
        try:
            rec = evolve(state, dt, steps, dyn, reference=q)
            runs.append(ExperimentRun(kind, d0, max(rec.orbit_distance_series), rec))
        except NumericalBlowUp as exc:
            log.warning("blow-up in %s run at t=%s", kind.value, exc.time)
            runs.append(ExperimentRun(kind, d0, math.inf, TrajectoryRecord(), True))

    floor = cfg.noise_floor * norm_q
    if any(r.blew_up for r in runs):
        cls, why = Stability.UNSTABLE, "numerical blow-up (scheme, not PDE)"
    elif eps == 0.0 and all(r.max_distance < floor for r in runs):
        cls, why = Stability.STABLE, "unperturbed soliton stays at solver noise"
    elif any(r.max_distance > cfg.unstable_factor * max(r.initial_distance, floor) for r in runs):
        cls, why = Stability.UNSTABLE, f"orbit distance grew past {cfg.unstable_factor:g}x"
    elif all(r.max_distance < cfg.stable_factor * max(r.initial_distance, floor) for r in runs):
        cls, why = Stability.STABLE, f"orbit distance stayed below {cfg.stable_factor:g}x"
    else:
        cls, why = Stability.INCONCLUSIVE, "growth between the two thresholds"
    growth = max(r.max_distance / max(r.initial_distance, floor) for r in runs)
    evidence = f"{why}; radial perturbations only; horizon {horizon:g}"
    slope = math.nan
    gap = math.nan
    if curve is not None:
        ref = classify_stability(w, curve)
        slope, gap = ref.slope, ref.omega_vs_star
        agree = "agrees" if ref.classification is cls else "disagrees"
        evidence += f"; {agree} with slope rule ({ref.classification})"
    return StabilityVerdict(cls, slope, gap, evidence, growth), runs
