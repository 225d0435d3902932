"""Problem data for loan-collection action selection.

A problem instance holds per-loanee profit and provision tables over M
collection actions plus a sparse, weighted association graph between
loanees.  Action 1 is the discounted-payoff (DPO) action; taking it on a
loanee switches off every association term touching that loanee.

Loanee ids and action indices are 1-based at every public boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DPO_ACTION = 1


class DimensionError(ValueError):
    """An assignment does not fit the instance it is evaluated against."""


class OneHotError(ValueError):
    """A bit-string block does not hold exactly one set bit."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Immutable QCBO instance.

    ``assoc`` maps an unordered loanee pair ``(i, i')`` with ``i < i'`` to a
    positive weight.  Use :meth:`weight` to read an edge from either end.
    """

    n_loanees: int
    n_actions: int
    h: np.ndarray
    l: np.ndarray
    assoc: Mapping[tuple[int, int], float]
    epsilon: float
    provision_cap: float | None = None
    provenance: Mapping | None = None
    _edges: tuple[np.ndarray, np.ndarray, np.ndarray] = field(init=False, repr=False)
    _neighbors: tuple[dict[int, float], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n, m = int(self.n_loanees), int(self.n_actions)
        if n < 1:
            raise ValueError("n_loanees must be positive")
        if m < 2:
            raise ValueError("n_actions must be at least 2")
        h = _frozen(np.array(self.h, dtype=float, copy=True).reshape(n, m))
        l = _frozen(np.array(self.l, dtype=float, copy=True).reshape(n, m))
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(l)):
            raise ValueError("h and l must be finite")
        if np.any(l < 0):
            raise ValueError("provisions l must be non-negative")
        if not 0.0 <= float(self.epsilon) < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.provision_cap is not None and self.provision_cap < 0:
            raise ValueError("provision_cap must be non-negative")

        assoc: dict[tuple[int, int], float] = {}
        for (a, b), w in dict(self.assoc).items():
            a, b, w = int(a), int(b), float(w)
            if a == b:
                raise ValueError(f"self-loop on loanee {a}")
            if not (1 <= a <= n and 1 <= b <= n):
                raise ValueError(f"edge ({a}, {b}) references an unknown loanee")
            if not w > 0:
                raise ValueError(f"edge ({a}, {b}) must have positive weight")
            key = (min(a, b), max(a, b))
            if key in assoc:
                raise ValueError(f"edge {key} given twice")
            assoc[key] = w

        keys = sorted(assoc)
        u = _frozen(np.array([k[0] - 1 for k in keys], dtype=np.intp))
        v = _frozen(np.array([k[1] - 1 for k in keys], dtype=np.intp))
        w = _frozen(np.array([assoc[k] for k in keys], dtype=float))
        neighbors: list[dict[int, float]] = [{} for _ in range(n)]
        for (a, b), wt in assoc.items():
            neighbors[a - 1][b] = wt
            neighbors[b - 1][a] = wt

        set_ = object.__setattr__
        set_(self, "n_loanees", n)
        set_(self, "n_actions", m)
        set_(self, "h", h)
        set_(self, "l", l)
        set_(self, "assoc", {k: assoc[k] for k in keys})
        set_(self, "epsilon", float(self.epsilon))
        set_(self, "_edges", (u, v, w))
        set_(self, "_neighbors", tuple(neighbors))

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """0-based endpoint arrays and weights, one entry per undirected edge."""
        return self._edges

    def weight(self, i: int, j: int) -> float:
        return self.assoc.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, i: int) -> dict[int, float]:
        """Neighbour id -> weight for loanee ``i`` (1-based)."""
        return self._neighbors[i - 1]

    def degree_mean(self) -> float:
        return 2.0 * len(self.assoc) / self.n_loanees

    def with_epsilon(self, epsilon: float) -> "ProblemInstance":
        return replace(self, epsilon=epsilon)

    def with_cap(self, provision_cap: float | None) -> "ProblemInstance":
        return replace(self, provision_cap=provision_cap)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "n_loanees": self.n_loanees,
            "n_actions": self.n_actions,
            "epsilon": self.epsilon,
            "provision_cap": self.provision_cap,
            "h": self.h.tolist(),
            "l": self.l.tolist(),
            "assoc": [[a, b, w] for (a, b), w in self.assoc.items()],
        }
        if self.provenance is not None:
            doc["provenance"] = dict(self.provenance)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ProblemInstance":
        try:
            assoc = {}
            for a, b, w in doc["assoc"]:
                key = (min(int(a), int(b)), max(int(a), int(b)))
                if key in assoc:
                    raise ValueError(f"edge {key} given twice")
                assoc[key] = w
            return cls(
                n_loanees=doc["n_loanees"],
                n_actions=doc["n_actions"],
                h=np.asarray(doc["h"], dtype=float),
                l=np.asarray(doc["l"], dtype=float),
                assoc=assoc,
                epsilon=doc["epsilon"],
                provision_cap=doc.get("provision_cap"),
                provenance=doc.get("provenance"),
            )
        except (KeyError, TypeError) as err:
            raise ValueError(f"malformed instance document: {err}") from err

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "ProblemInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class ActionAssignment:
    """One 1-based action per loanee; exactly one action each by construction."""

    actions: np.ndarray

    def __post_init__(self):
        actions = np.array(self.actions, dtype=np.int64, copy=True).reshape(-1)
        if actions.size and actions.min() < 1:
            raise ValueError("action indices are 1-based")
        object.__setattr__(self, "actions", _frozen(actions))

    def __len__(self) -> int:
        return int(self.actions.size)

    def __getitem__(self, loanee: int) -> int:
        """Action of ``loanee`` (1-based id)."""
        return int(self.actions[loanee - 1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActionAssignment):
            return NotImplemented
        return np.array_equal(self.actions, other.actions)

    def __hash__(self) -> int:
        return hash(self.actions.tobytes())

    def __repr__(self) -> str:
        return f"ActionAssignment({tuple(self.tolist())})"

    def tolist(self) -> list[int]:
        return [int(a) for a in self.actions]

    def switch(self, loanee: int, action: int) -> "ActionAssignment":
        actions = self.actions.copy()
        actions[loanee - 1] = action
        return ActionAssignment(actions)


def _checked(instance: ProblemInstance, assignment: ActionAssignment | Sequence[int]) -> np.ndarray:
    actions = assignment.actions if isinstance(assignment, ActionAssignment) else np.asarray(assignment)
    if actions.shape != (instance.n_loanees,):
        raise DimensionError(
            f"assignment has {actions.size} entries, instance has {instance.n_loanees} loanees"
        )
    if actions.min() < 1 or actions.max() > instance.n_actions:
        raise DimensionError(f"action indices must lie in 1..{instance.n_actions}")
    return actions


def objective(instance: ProblemInstance, assignment: ActionAssignment | Sequence[int]) -> float:
    """Yield: weighted profit plus association kept alive by non-DPO actions.

    Each undirected edge contributes once.
    """
    actions = _checked(instance, assignment)
    rows = np.arange(instance.n_loanees)
    profit = instance.h[rows, actions - 1].sum()
    u, v, w = instance.edges
    active = actions != DPO_ACTION
    network = (w * (active[u] & active[v])).sum()
    eps = instance.epsilon
    return float((1.0 - eps) * profit + eps * network)


def provision(instance: ProblemInstance, assignment: ActionAssignment | Sequence[int]) -> float:
    actions = _checked(instance, assignment)
    return float(instance.l[np.arange(instance.n_loanees), actions - 1].sum())


def bank_profit(instance: ProblemInstance, assignment: ActionAssignment | Sequence[int]) -> float:
    """Raw expected net profit, without the epsilon weighting."""
    actions = _checked(instance, assignment)
    return float(instance.h[np.arange(instance.n_loanees), actions - 1].sum())


def dpo_count(assignment: ActionAssignment | Sequence[int]) -> int:
    actions = assignment.actions if isinstance(assignment, ActionAssignment) else np.asarray(assignment)
    return int(np.count_nonzero(actions == DPO_ACTION))


def partial_objective(instance: ProblemInstance, actions: np.ndarray) -> float:
    """Objective of the sub-model induced by the covered loanees.

    ``actions`` has one entry per loanee of the full instance; 0 marks an
    uncovered loanee.  Only edges with both endpoints covered count.
    """
    covered = actions > 0
    rows = np.flatnonzero(covered)
    profit = instance.h[rows, actions[rows] - 1].sum()
    u, v, w = instance.edges
    live = covered & (actions != DPO_ACTION)
    network = (w * (live[u] & live[v])).sum()
    eps = instance.epsilon
    return float((1.0 - eps) * profit + eps * network)


def encode_bits(assignment: ActionAssignment | Sequence[int], n_actions: int) -> str:
    """Loanee-major, action-minor one-hot bit-string."""
    actions = assignment.actions if isinstance(assignment, ActionAssignment) else np.asarray(assignment)
    if actions.size and (actions.min() < 1 or actions.max() > n_actions):
        raise DimensionError(f"action indices must lie in 1..{n_actions}")
    bits = np.zeros((actions.size, n_actions), dtype=np.int8)
    bits[np.arange(actions.size), actions - 1] = 1
    return "".join(map(str, bits.reshape(-1)))


def decode_bits(bits: str | Iterable[int], n_loanees: int, n_actions: int) -> ActionAssignment:
    if isinstance(bits, str):
        values = [int(c) for c in bits]
    else:
        values = [int(b) for b in bits]
    if len(values) != n_loanees * n_actions or any(b not in (0, 1) for b in values):
        raise DimensionError(f"expected {n_loanees * n_actions} binary digits")
    blocks = np.array(values, dtype=np.int8).reshape(n_loanees, n_actions)
    counts = blocks.sum(axis=1)
    bad = np.flatnonzero(counts != 1)
    if bad.size:
        raise OneHotError(f"loanee {bad[0] + 1} has {counts[bad[0]]} actions set")
    return ActionAssignment(blocks.argmax(axis=1) + 1)


def config_to_actions(index: int, n_digits: int, n_actions: int) -> np.ndarray:
    """Mixed-radix index -> 1-based actions, first digit most significant."""
    digits = np.empty(n_digits, dtype=np.int64)
    for k in range(n_digits - 1, -1, -1):
        index, digits[k] = divmod(index, n_actions)
    if index:
        raise ValueError("configuration index out of range")
    return digits + 1


def actions_to_config(actions: Sequence[int], n_actions: int) -> int:
    index = 0
    for a in actions:
        index = index * n_actions + (int(a) - 1)
    return index


def all_configs(n_digits: int, n_actions: int) -> np.ndarray:
    """(M**n, n) table of 0-based digits in ascending mixed-radix order."""
    grids = np.indices((n_actions,) * n_digits, dtype=np.int8 if n_actions < 128 else np.int64)
    return grids.reshape(n_digits, -1).T
