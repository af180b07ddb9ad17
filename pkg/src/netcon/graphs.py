"""Graph value type, shape predicates and isomorphism for small graphs."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on explicit node labels."""

    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> "Graph":
        nodes = tuple(sorted(set(nodes)))
        norm = set()
        present = set(nodes)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if u not in present or v not in present:
                raise ValueError(f"edge ({u}, {v}) leaves the node set")
            norm.add((u, v) if u < v else (v, u))
        return cls(nodes, frozenset(norm))

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {u: set() for u in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self) -> dict[int, int]:
        return {u: len(nb) for u, nb in self.adjacency().items()}

    def components(self) -> list[list[int]]:
        adj = self.adjacency()
        seen: set[int] = set()
        comps = []
        for s in self.nodes:
            if s in seen:
                continue
            seen.add(s)
            stack, comp = [s], []
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def relabeled(self) -> "Graph":
        """Same graph with nodes renamed 0..k-1 in sorted order."""
        pos = {u: i for i, u in enumerate(self.nodes)}
        return Graph(tuple(range(len(self.nodes))), frozenset(
            tuple(sorted((pos[u], pos[v]))) for u, v in self.edges))


def _spans(g: Graph, n: int) -> bool:
    return g.nodes == tuple(range(n))


def is_connected(g: Graph) -> bool:
    return len(g.nodes) <= 1 or len(g.components()) == 1


def is_spanning_line(g: Graph, n: int) -> bool:
    if n < 2 or not _spans(g, n) or len(g.edges) != n - 1:
        return False
    return max(g.degrees().values()) <= 2 and is_connected(g)


def is_spanning_ring(g: Graph, n: int) -> bool:
    if n < 3 or not _spans(g, n) or len(g.edges) != n:
        return False
    return all(d == 2 for d in g.degrees().values()) and is_connected(g)


def is_spanning_star(g: Graph, n: int) -> bool:
    if n < 2 or not _spans(g, n) or len(g.edges) != n - 1:
        return False
    return max(g.degrees().values()) == n - 1


def is_cycle_cover(g: Graph, n: int, waste: int = 2) -> bool:
    """Every component is a cycle, except at most ``waste`` leftover nodes
    that are isolated or form one pair joined by a single edge."""
    if waste not in (0, 2):
        raise ValueError("waste must be 0 or 2")
    if not _spans(g, n):
        return False
    deg = g.degrees()
    leftover = 0
    for comp in g.components():
        if all(deg[u] == 2 for u in comp):
            continue
        if len(comp) == 1 or (len(comp) == 2 and all(deg[u] == 1 for u in comp)):
            leftover += len(comp)
        else:
            return False
    return leftover <= waste


def is_k_regular_relaxed(g: Graph, n: int, k: int) -> bool:
    """Connected, at least n-k+1 nodes of degree k, and each of the remaining
    l <= k-1 nodes has degree between l-1 and k-1."""
    if k < 1 or not _spans(g, n) or not is_connected(g):
        return False
    deg = g.degrees()
    rest = [d for d in deg.values() if d != k]
    if len(rest) > k - 1:
        return False
    l = len(rest)
    return all(l - 1 <= d <= k - 1 for d in rest)


def _is_complete(g_adj: dict[int, set[int]], comp: list[int]) -> bool:
    return all(len(g_adj[u]) == len(comp) - 1 for u in comp)


def is_clique_partition(g: Graph, n: int, c: int, strict: bool = False) -> bool:
    """Exactly floor(n/c) components are complete graphs on c nodes.

    The n mod c leftover nodes never touch a clique (they lie in other
    components); with ``strict`` they must also be isolated.
    """
    if c < 2 or not _spans(g, n):
        return False
    adj = g.adjacency()
    cliques = 0
    leftover_edges = False
    for comp in g.components():
        if len(comp) == c and _is_complete(adj, comp):
            cliques += 1
        elif len(comp) > 1:
            leftover_edges = True
    if cliques != n // c:
        return False
    return not (strict and leftover_edges)


def is_maximum_matching(g: Graph, n: int) -> bool:
    if not _spans(g, n):
        return False
    return len(g.edges) == n // 2 and all(d <= 1 for d in g.degrees().values())


def is_star_of_size(g: Graph, center: int, leaves: int) -> bool:
    """The edges form exactly a star around ``center`` with ``leaves`` leaves."""
    return len(g.edges) == leaves and all(center in e for e in g.edges)


def _refine(adj: list[set[int]]) -> list[int]:
    """Colour refinement (1-dimensional Weisfeiler-Leman) starting from degrees."""
    colours = [len(nb) for nb in adj]
    for _ in range(len(adj)):
        sig = [(colours[u], tuple(sorted(colours[w] for w in adj[u]))) for u in range(len(adj))]
        table = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [table[s] for s in sig]
        if len(set(new)) == len(set(colours)):
            return new
        colours = new
    return colours


def graphs_isomorphic(g1: Graph, g2: Graph, size_limit: int = 64) -> bool:
    """Exact isomorphism test by backtracking over refined colour classes."""
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return False
    if len(g1.nodes) > size_limit:
        raise ValueError(f"graphs larger than {size_limit} nodes are not supported")
    a, b = g1.relabeled(), g2.relabeled()
    k = len(a.nodes)
    adj1 = [set() for _ in range(k)]
    adj2 = [set() for _ in range(k)]
    for u, v in a.edges:
        adj1[u].add(v)
        adj1[v].add(u)
    for u, v in b.edges:
        adj2[u].add(v)
        adj2[v].add(u)
    # refine both graphs jointly so colour ids are comparable
    joint = adj1 + [{w + k for w in nb} for nb in adj2]
    colours = _refine(joint)
    c1, c2 = colours[:k], colours[k:]
    if sorted(c1) != sorted(c2):
        return False
    by_colour: dict[int, list[int]] = defaultdict(list)
    for v, c in enumerate(c2):
        by_colour[c].append(v)
    order = sorted(range(k), key=lambda u: (len(by_colour[c1[u]]), -len(adj1[u])))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def extend(i: int) -> bool:
        if i == k:
            return True
        u = order[i]
        for v in by_colour[c1[u]]:
            if v in used:
                continue
            if all((mapping[w] in adj2[v]) == (w in adj1[u]) for w in mapping):
                mapping[u] = v
                used.add(v)
                if extend(i + 1):
                    return True
                del mapping[u]
                used.discard(v)
        return False

    return extend(0)


def random_connected_graph(size: int, rng: np.random.Generator, p: float = 0.5) -> Graph:
    """G(size, p) conditioned on connectivity, by rejection."""
    if size < 1:
        raise ValueError("size must be positive")
    pairs = [(u, v) for u in range(size) for v in range(u + 1, size)]
    while True:
        keep = rng.random(len(pairs)) < p
        g = Graph.from_edges(range(size), [e for e, k in zip(pairs, keep) if k])
        if is_connected(g):
            return g


def read_graph(path: str | Path) -> Graph:
    """Read the plain text format: node count on the first line, then ``u v`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        u, v = (int(x) for x in ln.split())
        edges.append((u, v))
    return Graph.from_edges(range(n), edges)


def write_graph(g: Graph, path: str | Path) -> None:
    rel = g.relabeled()
    body = [str(len(rel.nodes))] + [f"{u} {v}" for u, v in sorted(rel.edges)]
    Path(path).write_text("\n".join(body) + "\n")
