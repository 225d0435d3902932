"""Recursive division of the association graph into small loanee groups.

The top level runs Clauset-Newman-Moore agglomeration on the whole graph.
Each community is then split again with the Louvain method and grown by
its one-hop "edge nodes"; any group that ends up larger than ``nu`` is
split again from its core.  Cores partition the loanees, so every
loanee's action is owned by exactly one group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np

from .datagen import substream
from .model import ProblemInstance

# Modularity gains at or below this are treated as zero.
GAIN_TOL = 1e-12


@dataclass(frozen=True)
class Group:
    core: frozenset[int]
    edge_nodes: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "core", frozenset(self.core))
        object.__setattr__(self, "edge_nodes", frozenset(self.edge_nodes))
        if self.core & self.edge_nodes:
            raise ValueError("edge nodes must lie outside the core")

    @property
    def members(self) -> tuple[int, ...]:
        """Sorted member ids; this is the digit order of the group's subspace."""
        return tuple(sorted(self.core | self.edge_nodes))

    def __len__(self) -> int:
        return len(self.core) + len(self.edge_nodes)

    def to_dict(self) -> dict:
        return {"core": sorted(self.core), "edge_nodes": sorted(self.edge_nodes)}


def instance_graph(instance: ProblemInstance) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(1, instance.n_loanees + 1))
    graph.add_weighted_edges_from((a, b, w) for (a, b), w in instance.assoc.items())
    return graph


def _weight(data: dict) -> float:
    return float(data.get("weight", 1.0))


def modularity(graph: nx.Graph, communities: Iterable[Iterable[int]]) -> float:
    """Weighted Newman modularity; 0 for a graph without edges."""
    m = graph.size(weight="weight")
    if m == 0:
        return 0.0
    label = {node: k for k, comm in enumerate(communities) for node in comm}
    inside: dict[int, float] = {}
    degree: dict[int, float] = {}
    for u, v, data in graph.edges(data=True):
        w = _weight(data)
        cu, cv = label[u], label[v]
        degree[cu] = degree.get(cu, 0.0) + w
        degree[cv] = degree.get(cv, 0.0) + w
        if cu == cv:
            inside[cu] = inside.get(cu, 0.0) + w
    return sum(inside.get(c, 0.0) / m - (d / (2 * m)) ** 2 for c, d in degree.items())


def greedy_modularity(graph: nx.Graph) -> list[set[int]]:
    """Clauset-Newman-Moore agglomeration.

    Merges the adjacent pair of communities with the largest modularity
    gain until no merge gains.  A community is labelled by its smallest
    node id; ties go to the lexicographically smallest label pair.
    """
    nodes = sorted(graph.nodes)
    members = {n: {n} for n in nodes}
    two_m = 2.0 * graph.size(weight="weight")
    if two_m == 0:
        return [members[n] for n in nodes]

    a = {n: 0.0 for n in nodes}
    e: dict[int, dict[int, float]] = {n: {} for n in nodes}
    for u, v, data in graph.edges(data=True):
        if u == v:
            continue
        w = _weight(data) / two_m
        a[u] += w
        a[v] += w
        e[u][v] = e[u].get(v, 0.0) + w
        e[v][u] = e[v].get(u, 0.0) + w

    while True:
        # pairs are scanned in ascending label order, so on a tie the first stays
        best = None
        best_dq = -np.inf
        for c1 in sorted(e):
            for c2 in sorted(e[c1]):
                if c2 <= c1:
                    continue
                dq = 2.0 * (e[c1][c2] - a[c1] * a[c2])
                if dq > best_dq + GAIN_TOL:
                    best, best_dq = (c1, c2), dq
        if best is None or best_dq <= GAIN_TOL:
            break
        keep, gone = best
        members[keep] |= members.pop(gone)
        a[keep] += a.pop(gone)
        for k, w in e.pop(gone).items():
            del e[k][gone]
            if k == keep:
                continue
            e[keep][k] = e[keep].get(k, 0.0) + w
            e[k][keep] = e[keep][k]

    return sorted(members.values(), key=min)


def louvain(graph: nx.Graph, seed: int = 0) -> list[set[int]]:
    """Louvain method: local moves then aggregation, repeated while modularity rises.

    Node sweep order in each level is a seeded permutation.  A node moves
    only on a strict gain; among equal gains the community whose label is
    smallest wins, labels being ordered by smallest contained node id.
    """
    nodes = sorted(graph.nodes)
    if not nodes:
        return []
    m = graph.size(weight="weight")
    if m == 0:
        return [{n} for n in nodes]
    rng = np.random.default_rng(seed)

    # level graph: adjacency without self loops, separate self-loop weights
    index = {n: k for k, n in enumerate(nodes)}
    adj: list[dict[int, float]] = [{} for _ in nodes]
    loops = [0.0] * len(nodes)
    for u, v, data in graph.edges(data=True):
        w = _weight(data)
        if u == v:
            loops[index[u]] += w
        else:
            iu, iv = index[u], index[v]
            adj[iu][iv] = adj[iu].get(iv, 0.0) + w
            adj[iv][iu] = adj[iv].get(iu, 0.0) + w
    contents: list[set[int]] = [{n} for n in nodes]
    current_q = modularity(graph, contents)

    while True:
        n = len(adj)
        k = [sum(adj[u].values()) + 2.0 * loops[u] for u in range(n)]
        com = list(range(n))
        tot = list(k)
        moved_any = False
        while True:
            moved = False
            for u in rng.permutation(n):
                u = int(u)
                c_old = com[u]
                links: dict[int, float] = {}
                for v, w in adj[u].items():
                    links[com[v]] = links.get(com[v], 0.0) + w
                tot[c_old] -= k[u]
                best = c_old
                best_gain = (links.get(c_old, 0.0) - tot[c_old] * k[u] / (2 * m)) / m
                for c in sorted(links):
                    gain = (links[c] - tot[c] * k[u] / (2 * m)) / m
                    if gain > best_gain + GAIN_TOL:
                        best, best_gain = c, gain
                tot[best] += k[u]
                com[u] = best
                if best != c_old:
                    moved = True
                    moved_any = True
            if not moved:
                break
        if not moved_any:
            break

        # aggregate; new labels ordered by smallest original node
        groups: dict[int, list[int]] = {}
        for u in range(n):
            groups.setdefault(com[u], []).append(u)
        merged = [set().union(*(contents[u] for u in us)) for us in groups.values()]
        order = sorted(range(len(merged)), key=lambda g: min(merged[g]))
        relabel = {c: order.index(g) for g, c in enumerate(groups)}
        new_adj: list[dict[int, float]] = [{} for _ in order]
        new_loops = [0.0] * len(order)
        for u in range(n):
            cu = relabel[com[u]]
            new_loops[cu] += loops[u]
            for v, w in adj[u].items():
                if v <= u:
                    continue
                cv = relabel[com[v]]
                if cu == cv:
                    new_loops[cu] += w
                else:
                    new_adj[cu][cv] = new_adj[cu].get(cv, 0.0) + w
                    new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        new_contents = [merged[g] for g in order]
        new_q = modularity(graph, new_contents)
        adj, loops, contents = new_adj, new_loops, new_contents
        if new_q - current_q < GAIN_TOL:
            break
        current_q = new_q

    return sorted(contents, key=min)


def add_edge_nodes(group: Group, graph: nx.Graph, limit: int | None = None) -> Group:
    """Pull in every outside neighbour of the group's members.

    Neighbours are visited member by member in id order.  With ``limit``,
    only the ``limit`` edge nodes with the largest total weight into the
    group are kept (ties to the smaller id).
    """
    members = set(group.members)
    found: dict[int, float] = {}
    for i in sorted(members):
        for j in sorted(graph.adj[i]):
            if j not in members:
                found[j] = found.get(j, 0.0) + _weight(graph.adj[i][j])
    new = list(found)
    if limit is not None and len(new) > limit:
        new = sorted(new, key=lambda j: (-found[j], j))[: max(limit, 0)]
    return Group(group.core, group.edge_nodes | set(new))


def _branch_seed(seed: int, path: tuple[int, ...]) -> int:
    return int(substream(seed, "partition", *path).integers(2**63))


def divide(instance: ProblemInstance | nx.Graph, nu: int, seed: int = 0) -> list[Group]:
    """Split loanees into groups of at most ``nu`` members.

    Louvain runs on the core of a group only, so edge nodes never change
    owner.  When Louvain cannot split a core whose augmented group is too
    large, the core is cut by sorted id into pieces of ``nu - 1`` and each
    piece keeps only its heaviest edge nodes.
    """
    if nu < 2:
        raise ValueError("nu must be at least 2")
    graph = instance if isinstance(instance, nx.Graph) else instance_graph(instance)

    def chunk(core: set[int]) -> list[Group]:
        ids = sorted(core)
        out = []
        for start in range(0, len(ids), nu - 1):
            piece = Group(ids[start:start + nu - 1])
            out.append(add_edge_nodes(piece, graph, limit=nu - len(piece.core)))
        return out

    def split(core: set[int], path: tuple[int, ...]) -> list[Group]:
        parts = louvain(graph.subgraph(core), seed=_branch_seed(seed, path))
        out = []
        for k, part in enumerate(parts):
            grown = add_edge_nodes(Group(part), graph)
            if len(grown) <= nu:
                out.append(grown)
            elif len(parts) == 1:
                out.extend(chunk(part))
            else:
                out.extend(split(part, path + (k,)))
        return out

    groups: list[Group] = []
    for k, community in enumerate(greedy_modularity(graph)):
        groups.extend(split(community, (k,)))
    return groups


def partition_report(groups: list[Group]) -> dict:
    return {"groups": [g.to_dict() for g in groups]}
