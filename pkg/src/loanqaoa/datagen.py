"""Synthetic instances: Benford-like profit profiles on an Erdos-Renyi network."""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass

import numpy as np

from .model import ProblemInstance


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Independent generator for a named stage, stable across platforms."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode()), *map(int, keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class GenConfig:
    n_loanees: int
    n_actions: int = 5
    poisson_mean: float = 0.7
    mean_degree: float = 2.0
    seed: int = 0
    assoc_weight_range: tuple[float, float] = (0.0, 0.7)
    provision_range: tuple[float, float] = (1e-5, 1.0)

    def __post_init__(self):
        if self.n_loanees < 2:
            raise ValueError("n_loanees must be at least 2")
        if self.n_actions < 2:
            raise ValueError("n_actions must be at least 2")
        if not self.poisson_mean > 0:
            raise ValueError("poisson_mean must be positive")
        if self.mean_degree < 0:
            raise ValueError("mean_degree must be non-negative")
        lo, hi = self.assoc_weight_range
        if lo < 0 or hi <= lo:
            raise ValueError("assoc_weight_range must satisfy 0 <= low < high")
        lo, hi = self.provision_range
        if lo <= 0 or hi < lo:
            raise ValueError("provision_range must satisfy 0 < low <= high")
        object.__setattr__(self, "assoc_weight_range", tuple(map(float, self.assoc_weight_range)))
        object.__setattr__(self, "provision_range", tuple(map(float, self.provision_range)))

    @property
    def edge_probability(self) -> float:
        return min(1.0, self.mean_degree / (self.n_loanees - 1))


def poisson_inversion(mean: float, u: float) -> int:
    """Smallest k with CDF(k) >= u, by sequential search."""
    k = 0
    p = math.exp(-mean)
    cdf = p
    while u > cdf:
        k += 1
        p *= mean / k
        cdf += p
        if p == 0.0:  # tail underflow; cdf has saturated
            break
    return k


def benford_profile(r: int, n_actions: int) -> np.ndarray:
    """Normalised profit profile over actions 1..M for Poisson draw ``r``."""
    j = np.arange(1, n_actions + 1, dtype=float)
    raw = np.log10(j + 2) - (1 - r) * np.log10(j + 1)
    return raw / raw.sum()


def draw_r(config: GenConfig) -> np.ndarray:
    rng = substream(config.seed, "profile")
    u = rng.random(config.n_loanees)
    return np.array([poisson_inversion(config.poisson_mean, x) for x in u], dtype=np.int64)


def gen_h(config: GenConfig) -> np.ndarray:
    return np.vstack([benford_profile(r, config.n_actions) for r in draw_r(config)])


def gen_assoc(config: GenConfig) -> dict[tuple[int, int], float]:
    """G(N, p) with p = mean_degree / (N - 1) and uniform (low, high] weights."""
    n = config.n_loanees
    p = config.edge_probability
    rng = substream(config.seed, "assoc")
    iu, ju = np.triu_indices(n, k=1)
    hit = rng.random(iu.size) < p
    lo, hi = config.assoc_weight_range
    # 1 - U lies in (0, 1], so weights land in (lo, hi]
    weights = lo + (hi - lo) * (1.0 - rng.random(int(hit.sum())))
    return {(int(a) + 1, int(b) + 1): float(w) for a, b, w in zip(iu[hit], ju[hit], weights)}


def gen_provisions(config: GenConfig) -> np.ndarray:
    lo, hi = config.provision_range
    rng = substream(config.seed, "provision")
    exponents = rng.uniform(math.log10(lo), math.log10(hi), size=(config.n_loanees, config.n_actions))
    return np.clip(10.0**exponents, lo, hi)


def generate(config: GenConfig, epsilon: float = 0.5, provision_cap: float | None = None) -> ProblemInstance:
    assoc = gen_assoc(config)
    provenance = asdict(config)
    provenance["assoc_weight_range"] = list(config.assoc_weight_range)
    provenance["provision_range"] = list(config.provision_range)
    provenance["edge_probability"] = config.edge_probability
    provenance["n_edges"] = len(assoc)
    provenance["empirical_mean_degree"] = 2.0 * len(assoc) / config.n_loanees
    return ProblemInstance(
        n_loanees=config.n_loanees,
        n_actions=config.n_actions,
        h=gen_h(config),
        l=gen_provisions(config),
        assoc=assoc,
        epsilon=epsilon,
        provision_cap=provision_cap,
        provenance=provenance,
    )
