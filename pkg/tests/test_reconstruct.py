import itertools

import numpy as np
import pytest

from loanqaoa.model import ActionAssignment, all_configs, partial_objective
from loanqaoa.partition import Group
from loanqaoa.reconstruct import Candidate, combine, merge_order, reconstruct, top_candidates

from conftest import schematic_instance, random_instance


def partial(n, mapping):
    actions = np.zeros(n, dtype=np.int64)
    for i, j in mapping.items():
        actions[i - 1] = j
    return Candidate(actions, 1.0)


def test_top_candidates_point_mass():
    assert top_candidates(np.array([0, 0, 1.0, 0]), 3) == [(2, 1.0)]


def test_top_candidates_uniform_tie_break():
    assert [k for k, _ in top_candidates(np.full(4, 0.25), 2)] == [0, 1]


def test_top_candidates_sorted():
    assert [k for k, _ in top_candidates(np.array([0.5, 0.3, 0.2]), 2)] == [0, 1]


def test_top_candidates_rejects_zero_lambda():
    with pytest.raises(ValueError):
        top_candidates(np.ones(2) / 2, 0)


def test_combine_schematic_example():
    left = partial(11, dict(zip([1, 2, 3, 4, 5, 6, 7, 9], [2, 4, 3, 1, 5, 1, 1, 2])))
    right = partial(11, dict(zip([7, 8, 9, 10, 11], [1, 3, 2, 3, 4])))
    merged = combine(left, right, shared={7, 9}, instance=schematic_instance())
    assert merged.actions.tolist() == [2, 4, 3, 1, 5, 1, 1, 3, 2, 3, 4]
    assert merged.y == pytest.approx(partial_objective(schematic_instance(), merged.actions), abs=1e-12)


def test_combine_disjoint_concatenates():
    left, right = partial(4, {1: 2, 2: 1}), partial(4, {3: 3, 4: 1})
    left.prob, right.prob = 0.5, 0.4
    merged = combine(left, right)
    assert merged.actions.tolist() == [2, 1, 3, 1]
    assert merged.prob == pytest.approx(0.2)


def test_combine_incompatible():
    assert combine(partial(3, {1: 1, 2: 1}), partial(3, {2: 2, 3: 1})) is None


def test_merge_order():
    groups = [Group({5}), Group({1, 2}), Group({3, 4}, {5})]
    assert merge_order(groups) == [2, 1, 0]
    assert sorted(merge_order(groups, seed=1)) == [0, 1, 2]


def test_single_group_takes_most_probable(rng):
    inst = random_instance(rng, 3, 2, epsilon=0.0)
    probs = rng.random(8)
    probs /= probs.sum()
    res = reconstruct([Group({1, 2, 3})], [probs], inst, lam=1)
    assert res.assignment == ActionAssignment(all_configs(3, 2)[np.argmax(probs)] + 1)


def test_disjoint_groups_concatenate_top_configs(rng):
    inst = random_instance(rng, 4, 3, epsilon=0.0, p_edge=0.0)
    pa, pb = rng.dirichlet(np.ones(9)), rng.dirichlet(np.ones(9))
    res = reconstruct([Group({1, 2}), Group({3, 4})], [pa, pb], inst, lam=1)
    expected = np.concatenate([all_configs(2, 3)[pa.argmax()], all_configs(2, 3)[pb.argmax()]]) + 1
    assert res.assignment == ActionAssignment(expected)
    assert res.forced_merges == 0


def brute_force_pairs(groups, dists, inst, lam):
    m = inst.n_actions
    best = -np.inf
    tops = [top_candidates(p, lam) for p in dists]
    for (ka, _), (kb, _) in itertools.product(*tops):
        actions = np.zeros(inst.n_loanees, dtype=int)
        ok = True
        for g, k in zip(groups, (ka, kb)):
            digits = all_configs(len(g.members), m)[k] + 1
            for i, j in zip(g.members, digits):
                if actions[i - 1] and actions[i - 1] != j:
                    ok = False
                actions[i - 1] = j
        if ok:
            best = max(best, partial_objective(inst, actions))
    return best


@pytest.mark.parametrize("seed", range(8))
def test_shared_node_matches_compatible_pair_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 5, 2, p_edge=0.6)
    groups = [Group({1, 2, 3}), Group({4, 5}, {3})]
    dists = [rng.dirichlet(np.full(8, 0.3)), rng.dirichlet(np.full(8, 0.3))]
    lam = 4
    expected = brute_force_pairs(groups, dists, inst, lam)
    res = reconstruct(groups, dists, inst, lam=lam)
    assert np.isfinite(expected)
    assert res.forced_merges == 0
    assert res.y == pytest.approx(expected, abs=1e-12)


def test_fallback_scans_support_beyond_lambda():
    inst = random_instance(np.random.default_rng(0), 3, 2)
    left = np.array([0.0, 0.0, 1.0, 0.0])        # member 2 takes action 1
    right = np.array([0.0, 0.6, 0.4, 0.0])       # index 1 puts member 2 on action 2
    res = reconstruct([Group({1, 2}), Group({3}, {2})], [left, right], inst, lam=1)
    assert res.forced_merges == 0
    assert res.assignment == ActionAssignment([2, 1, 2])


def test_forced_merge_when_support_disagrees():
    inst = random_instance(np.random.default_rng(0), 3, 2)
    left = np.array([0.0, 0.0, 1.0, 0.0])
    right = np.array([0.0, 0.0, 1.0, 0.0])       # member 2 on action 2 only
    res = reconstruct([Group({1, 2}), Group({3}, {2})], [left, right], inst, lam=3)
    assert res.forced_merges == 1
    assert res.assignment == ActionAssignment([2, 1, 1])


def test_candidate_lists_bounded_by_lambda(rng):
    inst = random_instance(rng, 6, 2)
    groups = [Group({1, 2, 3}), Group({4, 5}, {3}), Group({6}, {1})]
    dists = [rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(4))]
    res = reconstruct(groups, dists, inst, lam=3)
    assert all(c <= 3 for c in res.candidate_counts)
    assert res.y == pytest.approx(partial_objective(inst, res.assignment.actions), abs=1e-12)


def test_uncovered_loanee_is_an_error(rng):
    inst = random_instance(rng, 3, 2)
    with pytest.raises(ValueError):
        reconstruct([Group({1, 2})], [np.ones(4) / 4], inst)
