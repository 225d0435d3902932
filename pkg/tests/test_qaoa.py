from functools import reduce

import numpy as np
import pytest
from scipy.linalg import expm

from loanqaoa.model import ProblemInstance, all_configs, partial_objective
from loanqaoa.oracle import dense_qaoa_reference, one_hot_basis_indices
from loanqaoa.partition import Group
from loanqaoa.qaoa import (
    build_hamiltonians,
    energy,
    evolve,
    initial_state,
    optimize,
    ring_mixer_block,
)

from conftest import random_instance

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
I2 = np.eye(2)


def on(ops, n):
    return reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def xy_ring(m):
    h = sum(on({j: X, (j + 1) % m: X}, m) + on({j: Y, (j + 1) % m: Y}, m) for j in range(m))
    return -0.5 * h


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_mixer_block_is_single_excitation_restriction(m):
    full = xy_ring(m)
    idx = [1 << (m - 1 - j) for j in range(m)]
    np.testing.assert_allclose(full[np.ix_(idx, idx)].real, ring_mixer_block(m), atol=1e-14)


def test_mixer_block_m2_double_bond():
    np.testing.assert_array_equal(ring_mixer_block(2), [[0, -2], [-2, 0]])


def test_mixer_block_m3_all_neighbours():
    np.testing.assert_array_equal(ring_mixer_block(3), -(np.ones((3, 3)) - np.eye(3)))


def test_initial_state_energy(rng):
    inst = random_instance(rng, 3, 3)
    hams = build_hamiltonians(inst, (1, 2, 3))
    state = initial_state((1, 2, 3), 3)
    # all-DPO start: no association term, only the DPO profits
    assert energy(state, hams) == pytest.approx(-(1 - inst.epsilon) * inst.h[:, 0].sum(), abs=1e-12)


def test_zero_angles_is_identity(rng):
    inst = random_instance(rng, 3, 3)
    hams = build_hamiltonians(inst, (1, 2, 3))
    state = initial_state((1, 2, 3), 3)
    out = evolve(state, hams, np.zeros(4))
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)


@pytest.mark.parametrize("beta", np.linspace(0, np.pi, 7))
@pytest.mark.parametrize("order", ["mixer_first", "cost_first"])
def test_single_loanee_rabi(beta, order):
    inst = ProblemInstance(1, 2, [[0.3, 0.9]], [[0.1, 0.2]], {}, 0.0)
    hams = build_hamiltonians(inst, (1,))
    out = evolve(initial_state((1,), 2), hams, [0.77, beta], order)
    assert out.probabilities[1] == pytest.approx(np.sin(2 * beta) ** 2, abs=1e-12)


def test_cost_diag_is_negated_group_objective(rng):
    inst = random_instance(rng, 5, 3, p_edge=0.7)
    members = (1, 3, 4)
    hams = build_hamiltonians(inst, Group({1, 3}, {4}))
    assert hams.members == members
    for idx, digits in enumerate(all_configs(3, 3)):
        actions = np.zeros(5, dtype=int)
        actions[np.array(members) - 1] = digits + 1
        assert hams.cost_diag[idx] == pytest.approx(-partial_objective(inst, actions), abs=1e-12)


def test_matches_explicit_matrix_exponentials(rng):
    inst = random_instance(rng, 2, 3, p_edge=1.0)
    hams = build_hamiltonians(inst, (1, 2))
    mixer = np.kron(ring_mixer_block(3), np.eye(3)) + np.kron(np.eye(3), ring_mixer_block(3))
    theta = rng.random(6) * 2
    psi = initial_state((1, 2), 3).amplitudes
    for gamma, beta in theta.reshape(-1, 2):
        psi = expm(-1j * beta * mixer) @ psi
        psi = np.exp(-1j * gamma * hams.cost_diag) * psi
    np.testing.assert_allclose(evolve(initial_state((1, 2), 3), hams, theta).amplitudes, psi, atol=1e-12)


@pytest.mark.parametrize("n, m, t", [(1, 2, 1), (1, 3, 2), (2, 2, 2), (2, 3, 3), (2, 3, 1)])
@pytest.mark.parametrize("order", ["mixer_first", "cost_first"])
def test_equivalence_with_dense_register(rng, n, m, t, order):
    inst = random_instance(rng, n + 1, m, p_edge=1.0)
    group = tuple(range(2, n + 2))
    theta = rng.uniform(-2, 2, size=2 * t)
    sub = evolve(initial_state(group, m), build_hamiltonians(inst, group), theta, order).amplitudes
    dense = dense_qaoa_reference(inst, group, None, theta, order)
    idx = one_hot_basis_indices(n, m)
    np.testing.assert_allclose(dense[idx], sub, atol=1e-9)
    leak = np.delete(dense, idx)
    assert np.abs(leak).max(initial=0.0) <= 1e-12


def test_norm_preserved(rng):
    inst = random_instance(rng, 4, 4, p_edge=0.8)
    hams = build_hamiltonians(inst, (1, 2, 3, 4))
    out = evolve(initial_state((1, 2, 3, 4), 4), hams, rng.random(8) * 5)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_cost_step_alone_keeps_probabilities(rng):
    inst = random_instance(rng, 3, 3, p_edge=1.0)
    hams = build_hamiltonians(inst, (1, 2, 3))
    mixed = evolve(initial_state((1, 2, 3), 3), hams, [0.0, 0.4])
    phased = evolve(mixed, hams, [1.3, 0.0])
    np.testing.assert_allclose(phased.probabilities, mixed.probabilities, atol=1e-14)


def test_bad_theta_and_order(rng):
    inst = random_instance(rng, 2, 2)
    hams = build_hamiltonians(inst, (1, 2))
    with pytest.raises(ValueError):
        evolve(initial_state((1, 2), 2), hams, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        evolve(initial_state((1, 2), 2), hams, [0.1, 0.2], order="sideways")


def test_optimize_finds_single_loanee_optimum():
    inst = ProblemInstance(1, 2, [[0.0, 1.0]], [[0.1, 0.2]], {}, 0.0)
    res = optimize(inst, (1,), cycles=2, seed=3)
    assert res.probabilities[1] >= 0.99
    assert res.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


def test_optimize_best_seen_never_worse_than_start(rng):
    inst = random_instance(rng, 3, 3, p_edge=0.9)
    res = optimize(inst, (1, 2, 3), cycles=2, max_iter=30, restarts=3, seed=1)
    assert len(res.restarts) == 3
    for r in res.restarts:
        assert r["energy"] <= r["initial_energy"]
    assert res.energy == min(r["energy"] for r in res.restarts)
    hams = build_hamiltonians(inst, (1, 2, 3))
    assert energy(evolve(initial_state((1, 2, 3), 3), hams, res.theta), hams) == pytest.approx(res.energy, abs=1e-12)


def test_optimize_deterministic(rng):
    inst = random_instance(rng, 3, 3)
    a = optimize(inst, (1, 2, 3), max_iter=20, restarts=2, seed=5)
    b = optimize(inst, (1, 2, 3), max_iter=20, restarts=2, seed=5)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.probabilities, b.probabilities)


def test_optimize_rejects_bad_budget(rng):
    inst = random_instance(rng, 2, 2)
    with pytest.raises(ValueError):
        optimize(inst, (1, 2), restarts=0)
