import functools
import math

import numpy as np
import pytest

from cqnls.curve import Stability
from cqnls.dynamics import (ComplexRadialField, DynamicsConfig, ExperimentConfig, Perturbation,
                            conservation_report, discrete_energy, discrete_mass,
                            dynamics_profile, evolve, experiment_grid, perturbed_soliton,
                            snapshot_csv, stability_experiment, unwrap_phase)
from cqnls.errors import InvalidField, PerturbationOutOfRange, StepTooLarge
from cqnls.functionals import evaluate
from cqnls.radial import RadialGrid, h1_norm, orbit_distance
from oracles import strang_reference

W = 3 / 32


@functools.lru_cache(maxsize=None)
def profile(h=0.1, w=W):
    return dynamics_profile(w, h=h)


def discrete_norm(v, h):
    return math.sqrt(4 * math.pi * h * float(np.sum(np.abs(v) ** 2)))


def test_field_round_trip():
    q = profile()
    s = ComplexRadialField.from_u(q.function)
    assert np.allclose(s.u.values, q.values, rtol=0, atol=1e-15)
    assert s.origin_value() == pytest.approx(q.amplitude_a, rel=1e-6)


def test_perturbation_examples():
    q = profile()
    for kind in Perturbation:
        s = perturbed_soliton(q, 0.0, kind)
        assert np.array_equal(s.v_values, q.grid.nodes * q.values)
    s = perturbed_soliton(q, 0.01, Perturbation.MASS_PRESERVING)
    assert discrete_mass(s) == pytest.approx(evaluate(q).mass, rel=1e-8)
    s = perturbed_soliton(q, 0.01, Perturbation.AMPLITUDE)
    assert orbit_distance(s.u, q.function) == pytest.approx(0.01 * h1_norm(q.function), rel=1e-10)
    with pytest.raises(PerturbationOutOfRange):
        perturbed_soliton(q, 0.2, Perturbation.RANDOM)


def test_random_perturbation_is_seeded():
    q = profile()
    a = perturbed_soliton(q, 0.01, Perturbation.RANDOM, seed=4)
    b = perturbed_soliton(q, 0.01, Perturbation.RANDOM, seed=4)
    c = perturbed_soliton(q, 0.01, Perturbation.RANDOM, seed=5)
    assert np.array_equal(a.v_values, b.v_values)
    assert not np.array_equal(a.v_values, c.v_values)
    d = orbit_distance(a.u, q.function) / h1_norm(q.function)
    assert 0 < d <= 0.01 * (1 + 1e-9)


def test_matches_reference_splitting():
    g = RadialGrid(12.7, 127)
    r = g.nodes
    v0 = (r * 0.8 * np.exp(-(r / 3) ** 2)).astype(complex)
    rec = evolve(ComplexRadialField(g, v0, 0.0), 0.01, 40, DynamicsConfig(record_every=40))
    ref = strang_reference(v0, r, g.h, 0.01, 40)
    assert np.max(np.abs(rec.final.v_values - ref)) < 1e-12


def test_exact_soliton_short():
    q = profile()
    rec = evolve(ComplexRadialField.from_u(q.function), 0.01, 500,
                 DynamicsConfig(record_every=50), reference=q)
    assert max(rec.orbit_distance_series) < 1e-5 * h1_norm(q.function)
    assert conservation_report(rec).mass_drift < 1e-10


def test_phase_over_one_period():
    q = profile()
    period = 2 * math.pi / W
    n = int(round(period / 0.01))
    rec = evolve(ComplexRadialField.from_u(q.function), period / n, n,
                 DynamicsConfig(record_every=50), reference=q)
    assert unwrap_phase(rec)[-1] == pytest.approx(2 * math.pi, abs=1e-3)
    assert rec.orbit_distance_series[-1] < 1e-5 * h1_norm(q.function)


def test_energy_drift_second_order():
    s0 = perturbed_soliton(profile(), 0.05, Perturbation.AMPLITUDE)
    drift = [conservation_report(evolve(s0, dt, int(round(5 / dt)),
                                        DynamicsConfig(record_every=10))).energy_drift
             for dt in (0.02, 0.01)]
    assert drift[0] / drift[1] == pytest.approx(4.0, rel=0.1)


def test_mass_drift_any_evolution():
    s0 = perturbed_soliton(profile(), 0.05, Perturbation.RANDOM, seed=1)
    rec = evolve(s0, 0.02, 250, DynamicsConfig(record_every=25))
    assert conservation_report(rec).mass_drift < 1e-10


def test_time_reversibility():
    q = profile()
    s0 = perturbed_soliton(q, 0.05, Perturbation.RANDOM, seed=2)
    fwd = evolve(s0, 0.01, 500).final
    back = evolve(fwd.conj(), 0.01, 500).final.conj()
    assert discrete_norm(back.v_values - s0.v_values, q.grid.h) < 1e-8


def test_zero_field_conserves_exactly():
    g = RadialGrid(20.0, 200)
    rec = evolve(ComplexRadialField(g, np.zeros(200, complex), 0.0), 0.01, 20,
                 DynamicsConfig(record_every=5))
    rep = conservation_report(rec)
    assert rep.mass_drift == 0.0 and rep.energy_drift == 0.0


def test_discrete_energy_matches_functional():
    q = profile(0.05)
    s = ComplexRadialField.from_u(q.function)
    assert discrete_energy(s) == pytest.approx(evaluate(q).energy, rel=1e-6)
    assert discrete_mass(s) == pytest.approx(evaluate(q).mass, rel=1e-10)


def test_step_budget():
    g = RadialGrid(20.0, 200)
    with pytest.raises(StepTooLarge):
        evolve(ComplexRadialField(g, np.zeros(200, complex), 0.0), 1.0, 1)
    with pytest.raises(InvalidField):
        evolve(ComplexRadialField(g, np.zeros(200, complex), 0.0), -0.1, 1)


def test_record_invariants_and_csv():
    q = profile()
    rec = evolve(ComplexRadialField.from_u(q.function), 0.02, 60,
                 DynamicsConfig(record_every=7, snapshot_every=2), reference=q)
    n = len(rec.times)
    assert n == len(rec.mass_series) == len(rec.energy_series) == len(rec.orbit_distance_series)
    assert np.all(np.diff(rec.times) > 0)
    assert rec.times[-1] == pytest.approx(1.2)
    assert rec.to_csv().splitlines()[1] == "t,mass,energy,orbit_distance"
    assert rec.field_snapshots
    assert "r,re_u,im_u" in snapshot_csv(rec.field_snapshots[-1])


def test_trajectory_deterministic():
    s0 = perturbed_soliton(profile(), 0.05, Perturbation.RANDOM, seed=3)
    a = evolve(s0, 0.02, 100, DynamicsConfig(record_every=10), reference=profile())
    b = evolve(s0, 0.02, 100, DynamicsConfig(record_every=10), reference=profile())
    assert a.to_csv({"seed": 3}) == b.to_csv({"seed": 3})


@pytest.mark.slow
def test_zero_perturbation_is_stable():
    verdict, runs = stability_experiment(0.15, 0.0)
    h, _ = experiment_grid(0.15, ExperimentConfig())
    norm_q = h1_norm(dynamics_profile(0.15, h).function)
    assert verdict.classification is Stability.STABLE
    assert all(r.max_distance < 1e-5 * norm_q for r in runs)
