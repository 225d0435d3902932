"""Constraint-preserving QAOA simulated inside the one-hot subspace.

Each loanee of a group is a register of M qubits holding exactly one
excitation, so the reachable states span M**N' configurations instead of
2**(N'*M) bit-strings.  A configuration index is mixed-radix base M with
the first (smallest-id) member as the most significant digit; digit
value ``j - 1`` means action ``j``.

The XY ring mixer restricted to one excitation is an M x M hopping
matrix, so the mixer unitary factorises into one small matrix per loanee.
The cost Hamiltonian is diagonal; its per-loanee profit part is folded
into those small matrices and only the association part is applied as a
full-length phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize

from .datagen import substream
from .model import DPO_ACTION, ProblemInstance, all_configs
from .partition import Group

Order = Literal["mixer_first", "cost_first"]

COUPLING = 1.0


def ring_mixer_block(n_actions: int, coupling: float = COUPLING) -> np.ndarray:
    """Single-excitation block of the periodic XY ring on M qubits.

    Every ring bond (j, j+1 mod M) adds a hopping amplitude ``-coupling``.
    For M = 2 the periodic sum visits the one bond twice, giving -2J.
    """
    block = np.zeros((n_actions, n_actions))
    for j in range(n_actions):
        k = (j + 1) % n_actions
        block[j, k] -= coupling
        block[k, j] -= coupling
    return block


@dataclass(frozen=True, eq=False)
class GroupHamiltonians:
    """Cost and mixer of one group in the one-hot subspace.

    ``cost_diag`` is the full diagonal.  For evolution it is also kept in
    factored form: ``site_cost[k]`` is member k's profit term per action,
    and ``pair_cost[pattern]`` the association term, which depends only on
    which members avoid the DPO action (``pattern`` bit k set when member
    k is live, member 0 most significant).
    """

    members: tuple[int, ...]
    n_actions: int
    cost_diag: np.ndarray
    mixer_block: np.ndarray
    site_cost: np.ndarray
    pair_cost: np.ndarray | None
    pattern: np.ndarray | None
    _eigvals: np.ndarray = field(init=False, repr=False)
    _eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals, vecs = np.linalg.eigh(self.mixer_block)
        object.__setattr__(self, "_eigvals", vals)
        object.__setattr__(self, "_eigvecs", vecs)

    @property
    def dim(self) -> int:
        return self.cost_diag.size

    def mixer_unitary(self, beta: float) -> np.ndarray:
        """exp(-i beta B) for one loanee's M x M block."""
        vecs = self._eigvecs
        return (vecs * np.exp(-1j * beta * self._eigvals)) @ vecs.T


def build_hamiltonians(instance: ProblemInstance, group: Group | tuple[int, ...],
                       epsilon: float | None = None) -> GroupHamiltonians:
    """Cost diagonal (negated group objective) and mixer block for a group.

    Edge nodes count in full: their profits and every association edge
    with both ends inside the group.
    """
    members = group.members if isinstance(group, Group) else tuple(sorted(group))
    if not members:
        raise ValueError("group has no members")
    if members[0] < 1 or members[-1] > instance.n_loanees:
        raise ValueError("group references loanees outside the instance")
    eps = instance.epsilon if epsilon is None else float(epsilon)
    m = instance.n_actions
    n = len(members)

    site = -(1.0 - eps) * instance.h[np.array(members) - 1]
    diag = np.zeros((m,) * n)
    for k in range(n):
        shape = [1] * n
        shape[k] = m
        diag += site[k].reshape(shape)
    diag = diag.reshape(-1)

    position = {i: k for k, i in enumerate(members)}
    edges = [(position[i], position[j], w) for i in members
             for j, w in instance.neighbors(i).items() if j > i and j in position]
    pair_cost = pattern = None
    if edges and eps:
        live_bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))) & 1
        pair_cost = np.zeros(2**n)
        for a, b, w in edges:
            pair_cost -= eps * w * live_bits[:, a] * live_bits[:, b]
        live = all_configs(n, m) != DPO_ACTION - 1
        pattern = (live.astype(np.int64) << (n - 1 - np.arange(n))).sum(axis=1)
        diag = diag + pair_cost[pattern]
    return GroupHamiltonians(members, m, diag, ring_mixer_block(m), site, pair_cost, pattern)


@dataclass(frozen=True, eq=False)
class SubspaceState:
    members: tuple[int, ...]
    n_actions: int
    amplitudes: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def initial_state(group: Group | tuple[int, ...], n_actions: int) -> SubspaceState:
    """Every member takes the DPO action: configuration index 0."""
    members = group.members if isinstance(group, Group) else tuple(sorted(group))
    amps = np.zeros(n_actions ** len(members), dtype=complex)
    amps[0] = 1.0
    return SubspaceState(members, n_actions, amps)


def _apply_axes(psi: np.ndarray, mats: list[np.ndarray], m: int) -> np.ndarray:
    # mats[k] acts on member k.  Apply along the last axis, then rotate that
    # axis to the front; after all rounds every axis was hit once and the
    # original order is back.  Neighbouring members are fused into one
    # M^2 x M^2 block, which halves the number of passes over psi.
    blocks = [np.kron(mats[k], mats[k + 1]) if k + 1 < len(mats) else mats[k]
              for k in range(0, len(mats), 2)]
    for mat in reversed(blocks):
        psi = np.ascontiguousarray((psi.reshape(-1, mat.shape[0]) @ mat.T).T).reshape(-1)
    return psi


def _evolve(psi: np.ndarray, hams: GroupHamiltonians, theta: np.ndarray, order: Order) -> np.ndarray:
    m = hams.n_actions
    for gamma, beta in np.asarray(theta, dtype=float).reshape(-1, 2):
        mixer = hams.mixer_unitary(beta)
        site = np.exp(-1j * gamma * hams.site_cost)
        if order == "cost_first":
            if hams.pair_cost is not None:
                psi = psi * np.exp(-1j * gamma * hams.pair_cost)[hams.pattern]
            psi = _apply_axes(psi, [mixer * s for s in site], m)
        else:
            psi = _apply_axes(psi, [s[:, None] * mixer for s in site], m)
            if hams.pair_cost is not None:
                psi = psi * np.exp(-1j * gamma * hams.pair_cost)[hams.pattern]
    return psi


def evolve(state: SubspaceState, hams: GroupHamiltonians, theta, order: Order = "mixer_first") -> SubspaceState:
    """Run T driving cycles; ``theta`` is (gamma_1, beta_1, ..., gamma_T, beta_T)."""
    theta = np.asarray(theta, dtype=float)
    if theta.size % 2:
        raise ValueError("theta must hold 2T angles")
    if order not in ("mixer_first", "cost_first"):
        raise ValueError(f"unknown operator order {order!r}")
    return SubspaceState(state.members, state.n_actions, _evolve(state.amplitudes, hams, theta, order))


def energy(state: SubspaceState, hams: GroupHamiltonians) -> float:
    return float(np.dot(state.probabilities, hams.cost_diag))


@dataclass
class QaoaResult:
    members: tuple[int, ...]
    theta: np.ndarray
    energy: float
    probabilities: np.ndarray
    restarts: list[dict]

    def to_dict(self) -> dict:
        return {
            "members": list(self.members),
            "theta": self.theta.tolist(),
            "energy": self.energy,
            "restarts": self.restarts,
        }


def optimize(instance: ProblemInstance, group: Group | tuple[int, ...], epsilon: float | None = None,
             cycles: int = 2, max_iter: int = 200, restarts: int = 4, seed: int = 0,
             order: Order = "mixer_first", rng: np.random.Generator | None = None) -> QaoaResult:
    """Minimise the cost expectation over the 2T angles with COBYLA.

    Each restart draws its angles uniformly from [0, 1).  The best angles
    seen in any objective evaluation are kept, so a restart never reports
    a worse energy than its starting point.
    """
    if cycles < 1 or max_iter < 1 or restarts < 1:
        raise ValueError("cycles, max_iter and restarts must be positive")
    hams = build_hamiltonians(instance, group, epsilon)
    psi0 = initial_state(hams.members, hams.n_actions).amplitudes
    rng = substream(seed, "qaoa") if rng is None else rng

    def cost(theta: np.ndarray) -> float:
        psi = _evolve(psi0, hams, theta, order)
        return float(np.dot(np.abs(psi) ** 2, hams.cost_diag))

    best_theta, best_energy = None, np.inf
    history = []
    for r in range(restarts):
        start = rng.random(2 * cycles)
        seen = {"theta": start, "energy": cost(start), "evals": 0}
        init_energy = seen["energy"]

        def tracked(theta, seen=seen):
            value = cost(theta)
            seen["evals"] += 1
            if value < seen["energy"]:
                seen["theta"], seen["energy"] = np.array(theta, dtype=float), value
            return value

        minimize(tracked, start, method="COBYLA", options={"maxiter": max_iter, "rhobeg": 0.5})
        history.append({"restart": r, "initial_energy": init_energy,
                        "energy": seen["energy"], "evaluations": seen["evals"]})
        if seen["energy"] < best_energy:
            best_theta, best_energy = seen["theta"], seen["energy"]

    psi = _evolve(psi0, hams, best_theta, order)
    probs = np.abs(psi) ** 2
    return QaoaResult(hams.members, np.asarray(best_theta, dtype=float), best_energy, probs / probs.sum(), history)
