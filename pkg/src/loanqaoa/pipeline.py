"""End-to-end runs: hybrid (divide, QAOA, reconstruct, GPR) and the random-start GPR baseline."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import GenConfig, generate, substream
from .gpr import GprTrace, run_gpr
from .model import ActionAssignment, ProblemInstance, bank_profit, dpo_count, objective, provision
from .partition import Group, divide, partition_report
from .qaoa import QaoaResult, optimize
from .reconstruct import Reconstruction, reconstruct

log = logging.getLogger(__name__)

MODES = ("hybrid", "standalone-gpr")
TRACE_FILE = "gpr_trace.csv"
MANIFEST_FILE = "manifest.json"


@dataclass
class RunConfig:
    instance: str | None = None
    gen: GenConfig | None = None
    nu: int = 7
    cycles: int = 2
    qaoa_iters: int = 200
    gpr_iters: int | None = None
    lam: int = 10
    restarts: int = 4
    epsilon: float | None = None
    epsilon_grid: list[float] | None = None
    provision_cap: float | None = None
    mode: str = "hybrid"
    seed: int = 0
    out: str | None = None
    order: str = "mixer_first"

    def __post_init__(self):
        if self.nu < 2:
            raise ValueError("nu must be at least 2")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.epsilon_grid is not None and not self.epsilon_grid:
            raise ValueError("epsilon grid is empty")
        if (self.instance is None) == (self.gen is None):
            raise ValueError("give exactly one of an instance path or a generator config")
        if self.instance is not None and not Path(self.instance).exists():
            raise FileNotFoundError(self.instance)

    def echo(self) -> dict:
        doc = asdict(self)
        doc.pop("out")
        if self.gen is not None:
            doc["gen"]["assoc_weight_range"] = list(self.gen.assoc_weight_range)
            doc["gen"]["provision_range"] = list(self.gen.provision_range)
        return doc


def load_instance(config: RunConfig) -> ProblemInstance:
    if config.instance is not None:
        instance = ProblemInstance.load(config.instance)
    else:
        instance = generate(config.gen, epsilon=0.5 if config.epsilon is None else config.epsilon)
    if config.epsilon is not None:
        instance = instance.with_epsilon(config.epsilon)
    if config.provision_cap is not None:
        instance = instance.with_cap(config.provision_cap)
    return instance


def random_assignment(instance: ProblemInstance, seed: int) -> ActionAssignment:
    rng = substream(seed, "baseline")
    return ActionAssignment(rng.integers(1, instance.n_actions + 1, size=instance.n_loanees))


@dataclass
class HybridStart:
    groups: list[Group]
    qaoa: list[QaoaResult]
    reconstruction: Reconstruction
    timings: dict[str, float] = field(default_factory=dict)


def hybrid_start(instance: ProblemInstance, config: RunConfig, groups: list[Group] | None = None) -> HybridStart:
    """Divide, optimise every group, and stitch the results together."""
    timings = {}
    t0 = time.perf_counter()
    if groups is None:
        groups = divide(instance, config.nu, seed=config.seed)
    timings["partition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    results = []
    for k, group in enumerate(groups):
        results.append(optimize(instance, group, cycles=config.cycles, max_iter=config.qaoa_iters,
                                restarts=config.restarts, order=config.order,
                                rng=substream(config.seed, "qaoa", k)))
    timings["qaoa"] = time.perf_counter() - t0
    log.info("optimised %d groups in %.1fs", len(groups), timings["qaoa"])

    t0 = time.perf_counter()
    rec = reconstruct(groups, [r.probabilities for r in results], instance, lam=config.lam)
    timings["reconstruct"] = time.perf_counter() - t0
    return HybridStart(groups, results, rec, timings)


@dataclass
class RunResult:
    mode: str
    instance: ProblemInstance
    start: ActionAssignment
    assignment: ActionAssignment
    trace: GprTrace
    hybrid: HybridStart | None
    timings: dict[str, float]

    @property
    def y(self) -> float:
        return objective(self.instance, self.assignment)

    @property
    def provision(self) -> float:
        return provision(self.instance, self.assignment)

    def manifest(self, config: RunConfig) -> dict:
        inst = self.instance
        cap = inst.provision_cap
        flags = {
            "forced_merges": self.hybrid.reconstruction.forced_merges if self.hybrid else 0,
            "cap_infeasible": cap is not None and self.provision > cap,
        }
        return {
            "version": __version__,
            "config": config.echo(),
            "instance": {"n_loanees": inst.n_loanees, "n_actions": inst.n_actions,
                         "epsilon": inst.epsilon, "provision_cap": cap, "n_edges": len(inst.assoc)},
            "mode": self.mode,
            "n_groups": len(self.hybrid.groups) if self.hybrid else None,
            "start": {"assignment": self.start.tolist(), "Y": objective(inst, self.start),
                      "provision": provision(inst, self.start)},
            "assignment": self.assignment.tolist(),
            "Y": self.y,
            "provision": self.provision,
            "dpo_count": dpo_count(self.assignment),
            "bank_profit": bank_profit(inst, self.assignment),
            "gpr": {"steps": len(self.trace.steps), "reason": self.trace.reason},
            "trace_file": TRACE_FILE,
            "flags": flags,
            "timings": self.timings,
        }


def run(instance: ProblemInstance, config: RunConfig, mode: str | None = None,
        hybrid: HybridStart | None = None) -> RunResult:
    mode = mode or config.mode
    t_total = time.perf_counter()
    timings: dict[str, float] = {}
    if mode == "hybrid":
        if hybrid is None:
            hybrid = hybrid_start(instance, config)
        timings.update(hybrid.timings)
        start = hybrid.reconstruction.assignment
    elif mode == "standalone-gpr":
        hybrid = None
        start = random_assignment(instance, config.seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    final, trace = run_gpr(instance, start, cap=instance.provision_cap, max_steps=config.gpr_iters)
    timings["gpr"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_total
    return RunResult(mode, instance, start, final, trace, hybrid, timings)


def dump_json(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def solve(config: RunConfig) -> dict:
    """Run one configured solve and write manifest, trace and diagnostics."""
    instance = load_instance(config)
    result = run(instance, config)
    manifest = result.manifest(config)
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        result.trace.write_csv(out / TRACE_FILE)
        if result.hybrid is not None:
            dump_json(partition_report(result.hybrid.groups), out / "partition.json")
            dump_json([r.to_dict() for r in result.hybrid.qaoa], out / "qaoa_groups.json")
        dump_json(manifest, out / MANIFEST_FILE)
    return manifest


SWEEP_COLUMNS = ["epsilon", "mode", "Y", "provision", "dpo_count", "bank_profit",
                 "start_Y", "start_provision", "gpr_steps"]


def sweep(config: RunConfig, modes=MODES) -> list[dict]:
    """One row per (epsilon, mode), epsilon ascending, modes in ``modes`` order.

    The partition and the random baseline start are shared across the grid.
    """
    grid = sorted(config.epsilon_grid if config.epsilon_grid is not None
                  else [0.5 if config.epsilon is None else config.epsilon])
    base = load_instance(config)
    groups = divide(base, config.nu, seed=config.seed) if "hybrid" in modes else None
    rows = []
    for eps in grid:
        instance = base.with_epsilon(eps)
        for mode in modes:
            hybrid = hybrid_start(instance, config, groups) if mode == "hybrid" else None
            res = run(instance, config, mode=mode, hybrid=hybrid)
            rows.append({
                "epsilon": eps, "mode": mode, "Y": res.y, "provision": res.provision,
                "dpo_count": dpo_count(res.assignment),
                "bank_profit": bank_profit(instance, res.assignment),
                "start_Y": res.trace.initial_y, "start_provision": res.trace.initial_provision,
                "gpr_steps": len(res.trace.steps),
            })
    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        write_table(rows, out / "sweep.csv")
    return rows


def write_table(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
