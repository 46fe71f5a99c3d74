import numpy as np
import pytest

from cqnls.errors import DomainError
from cqnls.ground_state import ShootingConfig, solve_ground_state
from cqnls.radial import RadialGrid
from cqnls.spectral import (OperatorKind, build_operator, cosine_similarity, free_operator,
                            lowest_eigenpairs, rayleigh_lambda_star, spectrum_csv)
from conftest import SPOT_OMEGAS, ground_state
from oracles import dense_tridiagonal_eigs

LP, LM = OperatorKind.LPLUS, OperatorKind.LMINUS


def test_free_operator_bounded_below_by_omega():
    op = free_operator(RadialGrid(50.0, 1000), 0.1)
    assert lowest_eigenpairs(op, 2)[0].value >= 0.1


def test_operator_symmetric():
    a = build_operator(ground_state(0.05), LP)
    n = 300
    dense = a.to_dense()[:n, :n]
    assert np.array_equal(dense, dense.T)


def test_potential_reaches_omega_at_the_edge():
    q = ground_state(0.05)
    for kind in (LP, LM):
        op = build_operator(q, kind)
        assert op.diagonal[-1] - 2 / op.h ** 2 == pytest.approx(0.05, abs=1e-12)


@pytest.mark.parametrize("w", [0.02, 3 / 32, 0.17])
def test_lminus_annihilates_rq(w):
    q = ground_state(w, 0.005)
    v = q.grid.nodes * q.values
    res = build_operator(q, LM).apply(v)
    assert np.linalg.norm(res[:-1]) < 1e-6 * np.linalg.norm(v)


@pytest.mark.parametrize("w", [0.02, 3 / 32, 0.17])
def test_lplus_of_rq(w):
    q = ground_state(w, 0.005)
    r = q.grid.nodes
    target = r * (-2 * q.values ** 3 + 4 * q.values ** 5)
    got = build_operator(q, LP).apply(r * q.values)
    assert np.linalg.norm((got - target)[:-1]) < 1e-6 * np.linalg.norm(target)


@pytest.mark.parametrize("w", SPOT_OMEGAS)
def test_spectral_structure(w):
    q = ground_state(w)
    plus = lowest_eigenpairs(build_operator(q, LP), 2)
    minus = lowest_eigenpairs(build_operator(q, LM), 2)
    assert plus[0].value < 0 < plus[1].value
    assert abs(minus[0].value) < 1e-4 * w
    assert minus[1].value > 0
    assert cosine_similarity(minus[0].vector, q.grid.nodes * q.values) > 0.999


@pytest.mark.parametrize("w", SPOT_OMEGAS)
def test_lplus_ground_mode_not_parallel_to_q(w):
    q = ground_state(w)
    v = lowest_eigenpairs(build_operator(q, LP), 1)[0].vector
    assert cosine_similarity(v, q.grid.nodes * q.values) < 0.999


def test_eigenpairs_match_dense_solver():
    q = ground_state(0.05, 0.1)
    op = build_operator(q, LP)
    vals, vecs = dense_tridiagonal_eigs(op.diagonal, op.off_diagonal)
    pairs = lowest_eigenpairs(op, 4)
    assert [p.value for p in pairs] == pytest.approx(vals[:4], abs=1e-10)
    for p, ref in zip(pairs, vecs.T):
        assert cosine_similarity(p.vector, ref) == pytest.approx(1.0, abs=1e-9)


def test_eigenpair_residual_and_normalisation():
    op = build_operator(ground_state(3 / 32), LP)
    pairs = lowest_eigenpairs(op, 3)
    vals = [p.value for p in pairs]
    assert vals == sorted(vals)
    for p in pairs:
        assert op.h * np.dot(p.vector, p.vector) == pytest.approx(1.0, rel=1e-12)
        res = np.sqrt(op.h) * np.linalg.norm(op.apply(p.vector) - p.value * p.vector)
        assert res == pytest.approx(p.residual, rel=1e-6, abs=1e-14)


def test_mode_count_limit():
    op = build_operator(ground_state(0.05), LP)
    with pytest.raises(DomainError):
        lowest_eigenpairs(op, 9)


def test_lambda_star_two_routes():
    ls = rayleigh_lambda_star(ground_state(3 / 32))
    assert ls.agreement < 1e-5


@pytest.mark.parametrize("w", SPOT_OMEGAS)
def test_lambda_star_dominates_ground_eigenvalue(w):
    q = ground_state(w)
    assert rayleigh_lambda_star(q).rayleigh >= lowest_eigenpairs(build_operator(q, LP))[0].value


def test_lambda_star_sign_follows_p6_over_p4(curve):
    # lambda* = (4 p6 - 2 p4)/M changes sign where 2 p6 = p4
    for p in curve.points:
        assert (p.lambda_star < 0) == (2 * p.p6 < p.p4)


def test_eigenvalue_second_order_in_h():
    e = [lowest_eigenpairs(build_operator(ground_state(3 / 32, h), LP))[0].value
         for h in (0.04, 0.02, 0.01)]
    ratio = (e[0] - e[1]) / (e[1] - e[2])
    assert 3.5 < ratio < 4.5


def test_domain_size_stability():
    q = ground_state(0.05)
    big = solve_ground_state(0.05, ShootingConfig(r_max=1.25 * q.grid.r_max))
    a = lowest_eigenpairs(build_operator(q, LP))[0].value
    b = lowest_eigenpairs(build_operator(big, LP))[0].value
    assert abs(a - b) < 1e-8


def test_lminus_positive_off_kernel():
    q = ground_state(0.05)
    op = build_operator(q, LM)
    r = q.grid.nodes
    rq = r * q.values
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = rng.uniform(1, 15, 3)
        v = sum(rng.standard_normal() * np.exp(-((r - ci) / 3) ** 2) for ci in c) * r
        v -= np.dot(v, rq) / np.dot(rq, rq) * rq
        assert np.dot(v, op.apply(v)) / np.dot(v, v) >= -1e-6


def test_spectrum_csv():
    text = spectrum_csv([(0.05, LP, 0, -0.1)], {"seed": 0})
    assert "omega,kind,index,eigenvalue" in text.splitlines()
    assert "0.05,LPlus,0,-0.1" in text
