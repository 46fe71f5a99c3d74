import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqnls.errors import (DivisionByZeroField, InvalidField, MultiplierOutOfRange,
                          NoPohozaevScale, ScaleOutOfRange)
from cqnls.functionals import (beta, evaluate, gnh_ratio, momentum, multipliers_from_beta,
                               raw_ratio, recover_multipliers, rescale_to_pohozaev_zero,
                               rescaled_mass_factor, rescaled_soliton, rescaled_soliton_factors,
                               scale)
from cqnls.radial import RadialFunction, RadialGrid
from conftest import FROZEN, SPOT_OMEGAS, ground_state


def bump(r_max=40.0, n=2000, width=2.0, amp=1.0):
    g = RadialGrid(r_max, n)
    return RadialFunction(g, amp * np.exp(-(g.nodes / width) ** 2))


def test_zero_field():
    g = RadialGrid(10.0, 100)
    z = RadialFunction(g, np.zeros(100))
    rep = evaluate(z, with_weinstein=False)
    assert rep.mass == rep.energy == rep.pohozaev == 0.0
    with pytest.raises(DivisionByZeroField):
        evaluate(z)


def test_report_identities():
    rep = evaluate(bump())
    assert rep.energy == pytest.approx(rep.kinetic / 2 - rep.p4 / 4 + rep.p6 / 6, rel=1e-12)
    assert rep.pohozaev == pytest.approx(rep.kinetic / 3 - rep.p4 / 4 + rep.p6 / 3, rel=1e-12)
    w = (math.sqrt(rep.mass) * rep.p6 ** 0.25 * rep.kinetic ** 0.75) / rep.p4
    assert rep.weinstein == pytest.approx(w, rel=1e-12)


def test_report_json():
    d = json.loads(evaluate(bump()).to_json(omega=0.1))
    assert {"mass", "energy", "pohozaev", "weinstein", "kinetic", "p4", "p6", "omega"} <= set(d)


@pytest.mark.parametrize("w", SPOT_OMEGAS)
def test_ground_state_identities(w):
    q = ground_state(w)
    rep = evaluate(q)
    b = beta(q)
    assert b > 0
    assert rep.p4 == pytest.approx(4 * w * rep.mass, rel=1e-5)
    assert abs(rep.pohozaev) < 1e-6 * rep.kinetic
    assert rep.mass == pytest.approx((b + 1) / (3 * w) * rep.kinetic, rel=1e-5)
    assert rep.energy == pytest.approx((1 - b) / 6 * rep.kinetic, rel=1e-5)


def test_beta_requires_profile():
    with pytest.raises(InvalidField):
        beta(bump())
    assert raw_ratio(bump()) > 0


def test_scale_identity():
    f = bump()
    assert np.array_equal(scale(f, 1.0).values, f.values)


@pytest.mark.parametrize("lam", [0.5, 0.8, 1.3, 2.0])
def test_scale_preserves_mass(lam):
    f = bump(60.0, 6000)
    assert evaluate(scale(f, lam)).mass == pytest.approx(evaluate(f).mass, rel=1e-8)


def test_scale_energy_derivative():
    f = bump(60.0, 6000, amp=0.9)
    lam, d = 1.1, 1e-4
    e = [evaluate(scale(f, x), with_weinstein=False).energy for x in (lam - d, lam + d)]
    i = evaluate(scale(f, lam), with_weinstein=False).pohozaev
    assert (e[1] - e[0]) / (2 * d) == pytest.approx(3 / lam * i, rel=1e-4)


def test_scale_out_of_range():
    with pytest.raises(ScaleOutOfRange):
        scale(bump(20.0, 1000, width=6.0), 0.3)
    with pytest.raises(InvalidField):
        scale(bump(), -1.0)


def test_pohozaev_rescale_fixed_point():
    lam, _ = rescale_to_pohozaev_zero(ground_state(3 / 32).function)
    assert lam == pytest.approx(1.0, abs=1e-4)


def test_pohozaev_rescale_minimises_energy():
    u = 1.2 * ground_state(0.05).function
    lam0, scaled = rescale_to_pohozaev_zero(u)
    assert abs(lam0 - 1) > 1e-3
    rep = evaluate(scaled, with_weinstein=False)
    assert abs(rep.pohozaev) < 1e-8 * rep.kinetic
    sweep = [evaluate(scale(u, x), with_weinstein=False).energy
             for x in np.linspace(0.7, 1.6, 100)]
    assert rep.energy <= min(sweep) + 1e-9 * abs(rep.energy)


def test_pohozaev_rescale_no_root():
    # a weak field has B^4 below the discriminant bound: I(u_lambda) > 0 for all lambda
    with pytest.raises(NoPohozaevScale):
        rescale_to_pohozaev_zero(bump(amp=0.05))


def test_rescaled_factors_at_one_third():
    amp, lam = rescaled_soliton_factors(1 / 3)
    assert amp == pytest.approx(1.0, abs=1e-15) and lam == pytest.approx(1.0, abs=1e-15)
    assert rescaled_mass_factor(1 / 3) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("w", [0.02, 0.05, 0.13])
def test_rescaled_soliton(w):
    q = ground_state(w)
    r = rescaled_soliton(q)
    rq, rr = evaluate(q), evaluate(r)
    assert rr.mass <= rq.mass * (1 + 1e-9)
    assert abs(rr.pohozaev) < 1e-6 * rr.kinetic
    assert rr.mass == pytest.approx(rescaled_mass_factor(beta(q)) * rq.mass, rel=1e-7)


def test_multipliers_examples():
    m = multipliers_from_beta(1 / 3, 0.1)
    assert m.mu == pytest.approx(0, abs=1e-15) and m.nu == pytest.approx(0.05, rel=1e-14)
    assert multipliers_from_beta(0.5, 0.1).mu == pytest.approx(1 / 6, rel=1e-14)
    for b in (0.3, 1.0, 1.5):
        with pytest.raises(MultiplierOutOfRange):
            multipliers_from_beta(b, 0.1)


@given(st.floats(1 / 3, 0.99), st.floats(1e-3, 0.18))
@settings(max_examples=50, deadline=None)
def test_multiplier_round_trip(b, w):
    m = multipliers_from_beta(b, w)
    assert m.frequency() == pytest.approx(w, rel=1e-10)
    assert m.scale_a ** 2 == pytest.approx((1 + 3 * m.mu) / (1 + 6 * m.mu), rel=1e-10)
    assert m.scale_lambda ** 2 == pytest.approx(
        (1 + 3 * m.mu) ** 2 / ((1 + 2 * m.mu) * (1 + 6 * m.mu)), rel=1e-10)


def test_recover_multipliers_on_ground_state():
    q = ground_state(0.05)
    m = recover_multipliers(q)
    assert m.mu > 0 and m.frequency() == pytest.approx(0.05, rel=1e-10)
    with pytest.raises(MultiplierOutOfRange):
        recover_multipliers(ground_state(0.17))


@given(st.floats(0.2, 3.0), st.floats(0.5, 4.0), st.floats(-0.5, 0.5))
@settings(max_examples=40, deadline=None)
def test_gnh_bound(amp, width, tilt):
    g = RadialGrid(60.0, 3000)
    r = g.nodes
    u = RadialFunction(g, amp * np.exp(-(r / width) ** 2) * (1 + tilt * np.cos(r)))
    assert gnh_ratio(u, FROZEN["rho"]) <= 1 + 1e-9


def test_gnh_equality_at_zero_energy_soliton():
    q = ground_state(FROZEN["omega_zero_energy"])
    assert gnh_ratio(q, FROZEN["rho"]) == pytest.approx(1.0, abs=1e-3)


@given(st.floats(0.01, 100.0))
@settings(max_examples=30, deadline=None)
def test_weinstein_amplitude_invariant(alpha):
    f = bump()
    assert evaluate(alpha * f).weinstein == pytest.approx(evaluate(f).weinstein, rel=1e-10)


@pytest.mark.parametrize("lam", [0.7, 1.4])
def test_weinstein_dilation_invariant(lam):
    f = bump(60.0, 6000)
    assert evaluate(scale(f, lam)).weinstein == pytest.approx(evaluate(f).weinstein, rel=1e-8)


def test_momentum_of_real_field():
    assert np.array_equal(momentum(bump()), np.zeros(3))
