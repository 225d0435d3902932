"""Greedy provision reduction.

Starting from an assignment, repeatedly apply the single-loanee action
switch with the best finesse score: pure provision savings rank by the
amount saved, switches that save provision but cost yield rank by
(negated) yield lost per unit of provision saved.  Switches that raise
the provision, or keep it flat while losing yield, are blocked.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import DPO_ACTION, ActionAssignment, ProblemInstance, objective, provision

BLOCKED = -math.inf


def finesse(a: float, b: float) -> float:
    """Score of a switch with provision reduction ``a`` and yield reduction ``b``."""
    if a < 0 or (a == 0 and b > 0):
        return BLOCKED
    if b <= 0:
        return a
    return -b / a


@dataclass
class GprStep:
    loanee: int
    from_action: int
    to_action: int
    y: float
    provision: float


@dataclass
class GprTrace:
    initial_y: float
    initial_provision: float
    steps: list[GprStep] = field(default_factory=list)
    reason: str = ""

    @property
    def provisions(self) -> list[float]:
        return [self.initial_provision] + [s.provision for s in self.steps]

    @property
    def yields(self) -> list[float]:
        return [self.initial_y] + [s.y for s in self.steps]

    def rows(self) -> list[dict]:
        out = [{"step": 0, "i": "", "j": "", "j_prime": "", "Y": self.initial_y, "provision": self.initial_provision}]
        for k, s in enumerate(self.steps, 1):
            out.append({"step": k, "i": s.loanee, "j": s.from_action, "j_prime": s.to_action,
                        "Y": s.y, "provision": s.provision})
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["step", "i", "j", "j_prime", "Y", "provision"])
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _live_weight(instance: ProblemInstance, actions: np.ndarray) -> np.ndarray:
    """Per loanee, total association weight to neighbours not on DPO."""
    live = actions != DPO_ACTION
    u, v, w = instance.edges
    n = instance.n_loanees
    return np.bincount(u, w * live[v], minlength=n) + np.bincount(v, w * live[u], minlength=n)


def switch_scores(instance: ProblemInstance, actions: np.ndarray):
    """Provision reduction ``a``, yield reduction ``b`` and finesse for every switch.

    All arrays are N x M; column ``j'-1`` is the switch of that loanee to
    action ``j'``.  Yield changes come from the loanee's profit row and its
    live neighbours only.
    """
    n, m = instance.n_loanees, instance.n_actions
    eps = instance.epsilon
    rows = np.arange(n)
    cur = actions - 1
    live_weight = _live_weight(instance, actions)
    a = instance.l[rows, cur][:, None] - instance.l
    dy = (1 - eps) * (instance.h - instance.h[rows, cur][:, None])
    was_live = (actions != DPO_ACTION)[:, None]
    now_live = np.ones((1, m), dtype=bool)
    now_live[0, DPO_ACTION - 1] = False
    dy = dy + eps * live_weight[:, None] * (now_live.astype(float) - was_live)
    b = -dy
    f = np.where(b <= 0, a, -b / np.where(a > 0, a, 1.0))
    blocked = (a < 0) | ((a == 0) & (b >= 0))
    blocked[rows, cur] = True
    f = np.where(blocked, BLOCKED, f)
    return a, b, f


def _best_switch(instance: ProblemInstance, actions: np.ndarray) -> tuple[int, int] | None:
    _, _, f = switch_scores(instance, actions)
    k = int(np.argmax(f))  # first maximum: smallest loanee, then smallest action
    if f.flat[k] == BLOCKED:
        return None
    i, j = divmod(k, instance.n_actions)
    return i + 1, j + 1


def gpr_step(instance: ProblemInstance, assignment: ActionAssignment):
    """Apply the best-scoring switch, or return None when nothing improves.

    Flat-provision switches must raise the yield strictly; a switch with no
    effect at all never counts.  Ties go to the smallest loanee id, then the
    smallest target action.
    """
    best = _best_switch(instance, assignment.actions)
    if best is None:
        return None
    i, j = best
    new = assignment.switch(i, j)
    return new, GprStep(i, assignment[i], j, objective(instance, new), provision(instance, new))


def run_gpr(instance: ProblemInstance, assignment: ActionAssignment, cap: float | None = None,
            max_steps: float | None = None) -> tuple[ActionAssignment, GprTrace]:
    """Switch greedily until the provision is within ``cap``, nothing improves,
    or ``max_steps`` switches were made (default N*M; ``math.inf`` for no limit)."""
    if max_steps is None:
        max_steps = instance.n_loanees * instance.n_actions
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    actions = np.array(assignment.actions)
    y, prov = objective(instance, actions), provision(instance, actions)
    trace = GprTrace(y, prov)
    while True:
        if cap is not None and prov <= cap:
            trace.reason = "cap_reached"
            break
        if len(trace.steps) >= max_steps:
            trace.reason = "iteration_cap"
            break
        best = _best_switch(instance, actions)
        if best is None:
            trace.reason = "all_blocked"
            break
        i, j = best
        old = int(actions[i - 1])
        actions[i - 1] = j
        y, prov = objective(instance, actions), provision(instance, actions)
        trace.steps.append(GprStep(i, old, j, y, prov))
    return ActionAssignment(actions), trace
