"""Exhaustive references for testing; not used by the solver pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .model import DPO_ACTION, ActionAssignment, ProblemInstance, all_configs
from .partition import Group

MAX_CONFIGS = 10**7
MAX_DENSE_QUBITS = 12
_CHUNK = 2**18


class OracleGuardError(ValueError):
    """The instance is too large for exhaustive treatment."""


class InfeasibleCapError(ValueError):
    """No assignment meets the provision cap."""


@dataclass
class OracleResult:
    assignment: ActionAssignment
    y: float
    constrained_assignment: ActionAssignment | None = None
    constrained_y: float | None = None
    cap: float | None = None

    def to_dict(self) -> dict:
        doc = {"assignment": self.assignment.tolist(), "y": self.y, "cap": self.cap}
        if self.constrained_assignment is not None:
            doc["constrained_assignment"] = self.constrained_assignment.tolist()
            doc["constrained_y"] = self.constrained_y
        return doc


def _scan(instance: ProblemInstance):
    """Yield (first index, digit table, Y, provision) over ascending chunks."""
    n, m = instance.n_loanees, instance.n_actions
    total = m**n
    powers = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    u, v, w = instance.edges
    eps = instance.epsilon
    rows = np.arange(n)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // powers) % m
        y = (1 - eps) * instance.h[rows, digits].sum(axis=1)
        if w.size:
            live = digits != DPO_ACTION - 1
            y = y + eps * ((live[:, u] & live[:, v]) * w).sum(axis=1)
        prov = instance.l[rows, digits].sum(axis=1)
        yield start, digits, y, prov


def brute_force_best(instance: ProblemInstance, cap: float | None = None) -> OracleResult:
    """Maximise the objective over all M**N assignments.

    Ties go to the smallest mixed-radix index (loanee 1 most significant).
    """
    if instance.n_actions ** instance.n_loanees > MAX_CONFIGS:
        raise OracleGuardError(f"{instance.n_actions}**{instance.n_loanees} assignments exceed {MAX_CONFIGS}")
    best = (-np.inf, None)
    best_cap = (-np.inf, None)
    for _, digits, y, prov in _scan(instance):
        k = int(np.argmax(y))
        if y[k] > best[0]:
            best = (float(y[k]), digits[k] + 1)
        if cap is not None:
            ok = prov <= cap
            if ok.any():
                yc = np.where(ok, y, -np.inf)
                k = int(np.argmax(yc))
                if yc[k] > best_cap[0]:
                    best_cap = (float(yc[k]), digits[k] + 1)
    result = OracleResult(ActionAssignment(best[1]), best[0], cap=cap)
    if cap is not None:
        if best_cap[1] is None:
            raise InfeasibleCapError(f"no assignment has provision <= {cap}")
        result.constrained_assignment = ActionAssignment(best_cap[1])
        result.constrained_y = best_cap[0]
    return result


def all_provisions(instance: ProblemInstance) -> np.ndarray:
    if instance.n_actions ** instance.n_loanees > MAX_CONFIGS:
        raise OracleGuardError("instance too large")
    return np.concatenate([prov for _, _, _, prov in _scan(instance)])


# dense full-register reference ----------------------------------------------

_I = sp.identity(2, format="csr", dtype=complex)
_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))


def _on(ops: dict[int, sp.spmatrix], n_qubits: int) -> sp.csr_matrix:
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), [ops.get(q, _I) for q in range(n_qubits)])


def dense_hamiltonians(instance: ProblemInstance, members: tuple[int, ...], epsilon: float,
                       coupling: float = 1.0) -> tuple[np.ndarray, sp.csr_matrix]:
    """Cost diagonal over every bit-string and the sparse XY ring mixer.

    Qubit ``k*M + (j-1)`` carries action ``j`` of member ``k``; qubit 0 is
    the most significant bit of a basis index.
    """
    m, n = instance.n_actions, len(members)
    nq = n * m
    basis = np.arange(2**nq, dtype=np.int64)
    bits = (basis[:, None] >> (nq - 1 - np.arange(nq))) & 1
    occ = bits.reshape(-1, n, m).astype(float)
    cost = -(1 - epsilon) * np.einsum("bkj,kj->b", occ, instance.h[np.array(members) - 1])
    for a in range(n):
        for b in range(a + 1, n):
            w = instance.weight(members[a], members[b])
            if w:
                cost -= epsilon * w * (1 - occ[:, a, 0]) * (1 - occ[:, b, 0])

    mixer = sp.csr_matrix((2**nq, 2**nq), dtype=complex)
    for k in range(n):
        for j in range(m):
            q1, q2 = k * m + j, k * m + (j + 1) % m
            mixer = mixer + _on({q1: _X, q2: _X}, nq) + _on({q1: _Y, q2: _Y}, nq)
    return cost, (-coupling / 2) * mixer


def one_hot_basis_indices(n_members: int, n_actions: int) -> np.ndarray:
    """Full-register basis index of each one-hot configuration, in subspace order."""
    digits = all_configs(n_members, n_actions).astype(np.int64)
    nq = n_members * n_actions
    qubits = np.arange(n_members) * n_actions + digits
    return (1 << (nq - 1 - qubits)).sum(axis=1)


def dense_qaoa_reference(instance: ProblemInstance, group: Group | tuple[int, ...], epsilon: float | None,
                         theta, order: str = "mixer_first") -> np.ndarray:
    """Evolve the full 2**(N'M) register with exact exponentials."""
    members = group.members if isinstance(group, Group) else tuple(sorted(group))
    nq = len(members) * instance.n_actions
    if nq > MAX_DENSE_QUBITS:
        raise OracleGuardError(f"{nq} qubits exceed the dense limit of {MAX_DENSE_QUBITS}")
    eps = instance.epsilon if epsilon is None else epsilon
    cost, mixer = dense_hamiltonians(instance, members, eps)
    psi = np.zeros(2**nq, dtype=complex)
    psi[one_hot_basis_indices(len(members), instance.n_actions)[0]] = 1.0
    for gamma, beta in np.asarray(theta, dtype=float).reshape(-1, 2):
        steps = [("mixer", beta), ("cost", gamma)]
        if order == "cost_first":
            steps.reverse()
        for kind, angle in steps:
            if kind == "mixer":
                psi = expm_multiply(-1j * angle * mixer, psi)
            else:
                psi = np.exp(-1j * angle * cost) * psi
    return psi
