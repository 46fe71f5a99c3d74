"""Mass, energy, Pohozaev and Weinstein functionals on radial fields, the
mass-preserving dilation u_lambda = lambda^{3/2} u(lambda x), the rescaled
soliton and the Lagrange-multiplier change of variables.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from .errors import (
    DivisionByZeroField,
    InvalidField,
    MultiplierOutOfRange,
    NoPohozaevScale,
    ScaleOutOfRange,
)
from .ground_state import RadialProfile
from .radial import RadialFunction, gradient_norm_sq, integrate_radial, origin_value, radial_integral

# B^4 >= POHOZAEV_DISCRIMINANT * A^3 C is needed for I(u_lambda) = 0 to have a positive root
POHOZAEV_DISCRIMINANT = 4.0 ** 8 / 3.0 ** 7
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    energy: float
    pohozaev: float
    weinstein: float
    kinetic: float
    p4: float
    p6: float

    def to_json(self, omega: float | None = None, **extra) -> str:
        d = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        if omega is not None:
            d["omega"] = omega
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)

    @property
    def beta_like(self) -> float:
        return self.p6 / self.kinetic


def energy_from(kinetic, p4, p6):
    return kinetic / 2.0 - p4 / 4.0 + p6 / 6.0


def pohozaev_from(kinetic, p4, p6):
    return kinetic / 3.0 - p4 / 4.0 + p6 / 3.0


def weinstein_from(mass, kinetic, p4, p6):
    if p4 == 0.0:
        raise DivisionByZeroField("Weinstein functional undefined for the zero field")
    return math.sqrt(mass) * p6 ** 0.25 * kinetic ** 0.75 / p4


def _as_function(u) -> RadialFunction:
    if isinstance(u, RadialProfile):
        return u.function
    return u


def evaluate(u, with_weinstein: bool = True) -> FunctionalReport:
    """All functionals of a real radial field."""
    f = _as_function(u)
    if np.iscomplexobj(f.values):
        raise InvalidField("evaluate expects a real field")
    mass = integrate_radial(f, 2)
    p4 = integrate_radial(f, 4)
    p6 = integrate_radial(f, 6)
    kinetic = gradient_norm_sq(f)
    weinstein = weinstein_from(mass, kinetic, p4, p6) if with_weinstein else float("nan")
    return FunctionalReport(
        mass=mass,
        energy=energy_from(kinetic, p4, p6),
        pohozaev=pohozaev_from(kinetic, p4, p6),
        weinstein=weinstein,
        kinetic=kinetic,
        p4=p4,
        p6=p6,
    )


def momentum(u) -> np.ndarray:
    """P(u) = int 2 Im(conj(u) grad u) dx.

    For u = u(|x|) the integrand is 2 Im(conj(u) u_r) x/|x|, whose angular
    average vanishes, so every component is zero.
    """
    _as_function(u)
    return np.zeros(3)


def _tail_fraction(f: RadialFunction, radius: float) -> float:
    r = f.grid.nodes
    dens = np.abs(f.values) ** 2
    total = radial_integral(f.grid, dens)
    if total == 0.0:
        return 0.0
    outside = np.where(r > radius, dens, 0.0)
    return radial_integral(f.grid, outside) / total


def dilate(u, amplitude: float, lam: float) -> RadialFunction:
    """amplitude * u(lam * r) on the same grid (zero beyond the source r_max)."""
    f = _as_function(u)
    if lam <= 0.0:
        raise InvalidField("dilation factor must be positive")
    if lam < 1.0 and _tail_fraction(f, lam * f.grid.r_max) > 1e-13:
        raise ScaleOutOfRange(
            f"dilation by {lam:g} pushes the field's support past r_max={f.grid.r_max:g}")
    if lam == 1.0:
        return RadialFunction(f.grid, amplitude * f.values)
    r = f.grid.nodes
    vals = f.values
    x = np.concatenate((-r[:5][::-1], [0.0], r))
    y = np.concatenate((vals[:5][::-1], [origin_value(vals)], vals))
    spline = make_interp_spline(x, y, k=5)
    target = lam * r
    out = np.zeros_like(vals)
    inside = target <= f.grid.r_max
    out[inside] = spline(target[inside])
    return RadialFunction(f.grid, amplitude * out)


def scale(u, lam: float) -> RadialFunction:
    """Mass-preserving dilation lam^{3/2} u(lam r)."""
    if lam <= 0.0:
        raise InvalidField("lambda must be positive")
    return dilate(u, lam ** 1.5, lam)


def pohozaev_polynomial(kinetic, p4, p6):
    """Coefficients of I(u_lambda)/lambda^2 = (C/3) lambda^4 - (B/4) lambda + A/3."""
    return p6 / 3.0, -p4 / 4.0, kinetic / 3.0


def pohozaev_scale(kinetic: float, p4: float, p6: float) -> float:
    """Larger positive root of I(u_lambda) = 0: the minimiser of lambda -> E(u_lambda)."""
    a, b, c = kinetic, p4, p6
    if a <= 0.0 or c <= 0.0 or b ** 4 < POHOZAEV_DISCRIMINANT * a ** 3 * c:
        raise NoPohozaevScale("I(u_lambda) > 0 for every lambda > 0")

    def g(lam):
        return c * lam ** 4 / 3.0 - b * lam / 4.0 + a / 3.0

    lam_min = (3.0 * b / (16.0 * c)) ** (1.0 / 3.0)
    lam_top = (3.0 * b / (4.0 * c)) ** (1.0 / 3.0)
    if g(lam_min) >= 0.0:
        return lam_min
    return brentq(g, lam_min, lam_top, xtol=1e-15, rtol=1e-15)


def rescale_to_pohozaev_zero(u):
    rep = evaluate(u, with_weinstein=False)
    lam = pohozaev_scale(rep.kinetic, rep.p4, rep.p6)
    return lam, scale(u, lam)


def raw_ratio(u) -> float:
    """int u^6 / int |grad u|^2 for any field."""
    f = _as_function(u)
    k = gradient_norm_sq(f)
    if k == 0.0:
        raise InvalidField("kinetic energy is zero")
    return integrate_radial(f, 6) / k


def beta(q: RadialProfile) -> float:
    """beta(omega) = int Q^6 / int |grad Q|^2 for a converged ground state."""
    if not isinstance(q, RadialProfile):
        raise InvalidField("beta is defined for converged ground states; use raw_ratio")
    return raw_ratio(q)


def rescaled_soliton_factors(b: float) -> tuple[float, float]:
    """(amplitude, dilation) of R_omega(x) = amplitude * Q_omega(dilation * x)."""
    return math.sqrt((1.0 + b) / (4.0 * b)), 3.0 * (1.0 + b) / (4.0 * math.sqrt(3.0 * b))


def rescaled_mass_factor(b: float) -> float:
    """M(R_omega) / M(Q_omega)."""
    return 16.0 * math.sqrt(3.0 * b) / (9.0 * (1.0 + b) ** 2)


def rescaled_functionals(b: float, kinetic: float, p4: float, p6: float, mass: float):
    """(mass, energy, pohozaev) of R_omega from the integrals of Q_omega."""
    amp, lam = rescaled_soliton_factors(b)
    a2 = amp * amp
    k = a2 * kinetic / lam
    q4 = a2 * a2 * p4 / lam ** 3
    q6 = a2 ** 3 * p6 / lam ** 3
    return a2 * mass / lam ** 3, energy_from(k, q4, q6), pohozaev_from(k, q4, q6)


def rescaled_soliton(q: RadialProfile) -> RadialFunction:
    amp, lam = rescaled_soliton_factors(beta(q))
    return dilate(q, amp, lam)


@dataclass(frozen=True)
class Multipliers:
    mu: float
    nu: float
    scale_a: float
    scale_lambda: float

    def frequency(self) -> float:
        """omega = 2 nu (1 + 6 mu) / (1 + 3 mu)^2."""
        return 2.0 * self.nu * (1.0 + 6.0 * self.mu) / (1.0 + 3.0 * self.mu) ** 2


def multipliers_from_beta(b: float, omega: float) -> Multipliers:
    if not (1.0 / 3.0 <= b < 1.0):
        raise MultiplierOutOfRange(f"beta = {b:.6g} outside [1/3, 1): no multiplier mu >= 0")
    mu = (3.0 * b - 1.0) / (6.0 * (1.0 - b))
    nu = omega * (1.0 + 3.0 * mu) ** 2 / (2.0 * (1.0 + 6.0 * mu))
    a = math.sqrt((1.0 + 3.0 * mu) / (1.0 + 6.0 * mu))
    lam = (1.0 + 3.0 * mu) / math.sqrt((1.0 + 2.0 * mu) * (1.0 + 6.0 * mu))
    return Multipliers(mu, nu, a, lam)


def recover_multipliers(q: RadialProfile) -> Multipliers:
    return multipliers_from_beta(beta(q), q.omega.omega)


def gnh_ratio(u, rho: float) -> float:
    """||u||_4^4 divided by the Gagliardo-Nirenberg-Hoelder bound (<= 1 for every u)."""
    rep = evaluate(u)
    return 3.0 * math.sqrt(rho) / (8.0 * rep.weinstein)
