"""Stitch per-group QAOA distributions into one full assignment.

Groups are folded one at a time.  The running candidate list holds at
most ``lam`` partial assignments; each merge pairs them with the right
group's most probable configurations, keeps the pairs that agree on every
shared loanee, and prunes back to the ``lam`` best by the partial
objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ActionAssignment, ProblemInstance, all_configs, partial_objective
from .partition import Group


@dataclass
class Candidate:
    """Partial assignment over the whole instance; 0 marks an uncovered loanee."""

    actions: np.ndarray
    prob: float
    y: float = float("nan")

    @property
    def covered(self) -> np.ndarray:
        return np.flatnonzero(self.actions) + 1


@dataclass
class Reconstruction:
    assignment: ActionAssignment
    y: float
    forced_merges: int = 0
    candidate_counts: list[int] = field(default_factory=list)


def top_candidates(probs: np.ndarray, lam: int) -> list[tuple[int, float]]:
    """(index, probability) of the ``lam`` most probable configurations.

    Zero-probability configurations are never returned; ties go to the
    smaller index.
    """
    if lam < 1:
        raise ValueError("lam must be at least 1")
    probs = np.asarray(probs, dtype=float)
    order = np.lexsort((np.arange(probs.size), -probs))
    order = order[probs[order] > 0][:lam]
    return [(int(k), float(probs[k])) for k in order]


def _candidate(instance: ProblemInstance, members: tuple[int, ...], digits: np.ndarray, prob: float) -> Candidate:
    actions = np.zeros(instance.n_loanees, dtype=np.int64)
    actions[np.array(members) - 1] = np.asarray(digits) + 1
    return Candidate(actions, prob, partial_objective(instance, actions))


def combine(left: Candidate, right: Candidate, shared=None, instance: ProblemInstance | None = None) -> Candidate | None:
    """Union of two partial assignments, or None if they disagree on a shared loanee.

    ``shared`` defaults to every loanee both candidates cover.
    """
    if shared is None:
        idx = np.flatnonzero((left.actions > 0) & (right.actions > 0))
    else:
        idx = np.asarray(sorted(shared), dtype=np.int64) - 1
    if idx.size and np.any(left.actions[idx] != right.actions[idx]):
        return None
    actions = np.where(left.actions > 0, left.actions, right.actions)
    y = partial_objective(instance, actions) if instance is not None else float("nan")
    return Candidate(actions, left.prob * right.prob, y)


def _prune(cands: list[Candidate], lam: int) -> list[Candidate]:
    # stable: equal objectives keep the more probable, then earlier, candidate
    order = sorted(range(len(cands)), key=lambda k: (-cands[k].y, -cands[k].prob, k))
    return [cands[k] for k in order[:lam]]


def merge_order(groups: list[Group], seed: int | None = None) -> list[int]:
    """Largest groups first, then by smallest member; a seed shuffles instead."""
    if seed is not None:
        return [int(k) for k in np.random.default_rng(seed).permutation(len(groups))]
    return sorted(range(len(groups)), key=lambda k: (-len(groups[k]), min(groups[k].members)))


def reconstruct(groups: list[Group], distributions: list[np.ndarray], instance: ProblemInstance,
                lam: int = 10, seed: int | None = None) -> Reconstruction:
    """Fold the groups into the best full assignment found.

    When no pair of kept candidates agrees, the right group's configurations
    are scanned in descending probability until one agrees with some left
    candidate.  If its whole support is exhausted, the top right
    configuration is forced to adopt the best left candidate's actions on
    the shared loanees and the merge is counted in ``forced_merges``.
    """
    if len(groups) != len(distributions):
        raise ValueError("need one distribution per group")
    if not groups:
        raise ValueError("no groups to reconstruct")
    m = instance.n_actions
    order = merge_order(groups, seed)

    first = groups[order[0]]
    table = all_configs(len(first.members), m)
    left = [_candidate(instance, first.members, table[k], p)
            for k, p in top_candidates(distributions[order[0]], lam)]
    left = _prune(left, lam)
    forced = 0
    counts = [len(left)]

    for gi in order[1:]:
        group, probs = groups[gi], np.asarray(distributions[gi])
        members = group.members
        table = all_configs(len(members), m)
        right = [_candidate(instance, members, table[k], p) for k, p in top_candidates(probs, lam)]
        merged = [c for l in left for r in right if (c := combine(l, r, instance=instance)) is not None]

        if not merged:
            shared = [k for k, i in enumerate(members) if left[0].actions[i - 1] > 0]
            pos = np.array([members[k] - 1 for k in shared], dtype=np.int64)
            sub = table[:, shared].astype(np.int64) + 1
            ok = np.zeros(len(table), dtype=bool)
            for l in left:
                ok |= np.all(sub == l.actions[pos], axis=1)
            ranked = np.lexsort((np.arange(probs.size), -probs))
            ranked = ranked[probs[ranked] > 0]
            hits = ranked[ok[ranked]]
            if hits.size:
                k = int(hits[0])
                r = _candidate(instance, members, table[k], float(probs[k]))
                merged = [c for l in left if (c := combine(l, r, instance=instance)) is not None]
            else:
                forced += 1
                best = _prune(left, 1)[0]
                k = int(ranked[0]) if ranked.size else 0
                digits = table[k].astype(np.int64).copy()
                digits[shared] = best.actions[pos] - 1
                r = _candidate(instance, members, digits, float(probs[k]))
                merged = [combine(best, r, instance=instance)]

        left = _prune(merged, lam)
        counts.append(len(left))

    best = _prune(left, 1)[0]
    if np.any(best.actions == 0):
        raise ValueError("groups do not cover every loanee")
    return Reconstruction(ActionAssignment(best.actions), best.y, forced, counts)
