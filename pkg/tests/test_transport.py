import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otseg.errors import DomainError
from otseg.featio import read_tensor
from otseg.synth import brute_force_ot
from otseg.transport import (TransportProblem, decode_labels, discrete_objective, objective, save_plan,
                             solve, structure_gradient, transition_mass)


def test_single_cell():
    r = solve(TransportProblem(np.array([[0.3]])))
    assert r.plan.tolist() == [[1.0]]


def test_constant_cost_gives_uniform_plan():
    r = solve(TransportProblem(np.full((6, 3), 0.7), alpha=0.0, lambda_ub=0.0))
    assert np.allclose(r.plan, 1 / 18, atol=1e-12)


def _birkhoff_2x2_oracle(C):
    vertices = [0.5 * np.eye(2), 0.5 * np.eye(2)[::-1]]
    return min(vertices, key=lambda V: float(np.sum(C * V)))


def test_small_eps_approaches_lp_vertex():
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    r = solve(TransportProblem(C, alpha=0.0, lambda_ub=0.0, eps=0.01))
    assert np.allclose(r.plan, _birkhoff_2x2_oracle(C), atol=1e-3)


def test_structure_gradient_examples():
    P = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert np.array_equal(structure_gradient(P, 0.0), np.zeros((2, 2)))
    assert np.allclose(structure_gradient(P, 1.0), [[0.5, 0.0], [0.0, 0.5]])
    U = np.full((5, 4), 1 / 20)
    G = structure_gradient(U, 0.3)
    # interior rows see two neighbours, boundary rows one
    assert np.allclose(G[1:-1], G[1, 0]) and np.allclose(G[[0, -1]], G[0, 0])


def test_structure_gradient_matches_finite_differences(rng):
    P = rng.random((7, 3)) / 21
    G = structure_gradient(P, 0.8)
    h = 1e-6
    num = np.zeros_like(P)
    for idx in np.ndindex(P.shape):
        Pp, Pm = P.copy(), P.copy()
        Pp[idx] += h
        Pm[idx] -= h
        num[idx] = 0.8 * (transition_mass(Pp) - transition_mass(Pm)) / (2 * h)
    assert np.allclose(G, num, atol=1e-8)


def test_decode_labels():
    assert decode_labels(np.array([[0.4, 0.1], [0.0, 0.5]])).tolist() == [0, 1]
    assert decode_labels(np.array([[0.25, 0.25]])).tolist() == [0]
    P = np.zeros((3, 3))
    P[:, 2] = 1 / 3
    assert decode_labels(P).tolist() == [2, 2, 2]


def test_objective_closed_forms():
    T, K, eps = 4, 3, 0.07
    p = 1 / (T * K)
    prob = TransportProblem(np.zeros((T, K)), alpha=0.0, eps=eps, lambda_ub=0.0)
    assert objective(np.full((T, K), p), prob) == pytest.approx(eps * T * K * p * (np.log(p) - 1))
    D = np.zeros((T, K))
    D[:, 1] = 1 / T
    assert objective(D, prob) == pytest.approx(eps * T * (1 / T) * (np.log(1 / T) - 1))


@pytest.mark.parametrize("seed", range(10))
def test_objective_weakly_decreases(seed):
    rng = np.random.default_rng(seed)
    prob = TransportProblem(2 * rng.random((10, 4)), alpha=0.3 * (1 + seed), eps=0.05, lambda_ub=0.5)
    r = solve(prob)
    h = np.array(r.history)
    assert np.all(np.diff(h) <= 1e-12)
    assert r.objective <= h[0] + prob.tol


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(1, 12), st.floats(0, 2), st.floats(0.005, 1.0),
       st.sampled_from([0.0, 0.05, 1.0, 100.0]), st.integers(0, 2**31))
def test_row_marginals_and_mass(T, K, alpha, eps, lam, seed):
    C = 2 * np.random.default_rng(seed).random((T, K))
    r = solve(TransportProblem(C, alpha=alpha, eps=eps, lambda_ub=lam))
    assert np.all(r.plan >= 0) and np.isfinite(r.plan).all()
    assert np.allclose(r.plan.sum(axis=1), 1 / T, atol=1e-6)
    assert r.plan.sum() == pytest.approx(1.0, abs=1e-6)


def test_column_balance_tightens_with_lambda():
    for seed in range(5):
        C = 2 * np.random.default_rng(seed).random((40, 5))
        devs = []
        for lam in (0.1, 1.0, 10.0, 100.0):
            cols = solve(TransportProblem(C, alpha=0.0, eps=0.07, lambda_ub=lam)).plan.sum(axis=0)
            devs.append(np.abs(cols - 0.2).max())
        assert all(a >= b for a, b in zip(devs, devs[1:]))


@pytest.mark.parametrize("shift", [-3.0, 0.5, 10.0])
def test_constant_shift_invariance(shift):
    C = 2 * np.random.default_rng(7).random((30, 4))
    a = solve(TransportProblem(C)).plan
    b = solve(TransportProblem(C + shift)).plan
    assert np.max(np.abs(a - b)) < 1e-9


def test_non_finite_cost():
    with pytest.raises(DomainError):
        solve(TransportProblem(np.array([[0.0, np.nan]])))


def test_extreme_costs_stay_finite():
    C = np.array([[0.0, 1e4], [1e4, 0.0], [5e3, 0.0]])
    r = solve(TransportProblem(C, eps=1e-3, lambda_ub=0.0))
    assert np.isfinite(r.plan).all()


def test_iteration_cap_reports_not_converged():
    C = 2 * np.random.default_rng(0).random((20, 3))
    r = solve(TransportProblem(C, alpha=0.5, max_outer=1))
    assert not r.converged and r.outer_iters == 1
    assert np.allclose(r.plan.sum(axis=1), 1 / 20, atol=1e-12)


def test_matches_oracle_on_small_instances():
    rng = np.random.default_rng(2024)
    hits = 0
    for i in range(60):
        T, K = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        alpha = (0.0, 0.3)[i % 2]
        C = 2 * rng.random((T, K))
        labels = decode_labels(solve(TransportProblem(C, alpha=alpha, eps=0.01, lambda_ub=0.001)))
        best, _ = brute_force_ot(C, alpha, 0.001)
        hits += np.array_equal(labels, best)
    assert hits >= 57


def test_default_lambda_oracle_match_rate():
    # at the default penalty the relaxation is not tight, but argmax still
    # agrees with the discrete optimum on the vast majority of instances
    rng = np.random.default_rng(5)
    hits, n = 0, 100
    for i in range(n):
        T, K = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        C = 2 * rng.random((T, K))
        labels = decode_labels(solve(TransportProblem(C, alpha=0.3 * (i % 2), eps=0.01, lambda_ub=0.05)))
        best, _ = brute_force_ot(C, 0.3 * (i % 2), 0.05)
        hits += np.array_equal(labels, best)
    assert hits >= 0.95 * n


def test_discrete_objective_of_deterministic_plan():
    C = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
    P = np.zeros((3, 2))
    P[[0, 1, 2], [0, 1, 1]] = 1 / 3
    expected = (0 + 0 + 0.5) / 3 + 0.3 * 1 / 9
    assert discrete_objective(P, C, 0.3, 0.0) == pytest.approx(expected)


def test_save_plan(tmp_path):
    r = solve(TransportProblem(np.random.default_rng(0).random((5, 2))))
    save_plan(r, tmp_path / "plan.tsr")
    assert read_tensor(tmp_path / "plan.tsr").shape == (5, 2)
    meta = json.loads((tmp_path / "plan.tsr.json").read_text())
    assert set(meta) == {"converged", "outer_iters", "objective"}
