"""Exact analysis for small populations.

Enumerates every configuration reachable from the start configuration,
builds the transition matrix of the induced Markov chain, and answers two
questions exactly: does every closed class carry a fixed observed graph
that satisfies the target, and what is the expected number of steps to
reach a given set of configurations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse import linalg as splinalg

from .engine import Overrides, initial_configuration, output_graph
from .graphs import Graph
from .model import Configuration, Protocol

Key = tuple[tuple[int, ...], int]


class ChainError(RuntimeError):
    pass


@dataclass
class ReachableChain:
    """Reachable configurations of a population of size ``n``.

    ``keys[i]`` is (node states, bitmask of active edges) with bit
    ``pair_index[u][v]`` standing for the edge {u, v}. Index 0 is the start
    configuration. ``matrix`` is row-stochastic and includes self-loops.
    """

    protocol: Protocol
    n: int
    keys: list[Key]
    matrix: sparse.csr_matrix
    pairs: list[tuple[int, int]]
    index: dict[Key, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.keys)

    def configuration(self, i: int) -> Configuration:
        states, mask = self.keys[i]
        edges = {p for b, p in enumerate(self.pairs) if mask >> b & 1}
        return Configuration(self.n, list(states), edges)

    def successors(self, i: int) -> list[tuple[int, float]]:
        row = self.matrix.getrow(i)
        return sorted(zip(row.indices.tolist(), row.data.tolist()))

    def dump(self) -> str:
        """One line per configuration: ``index : states : edges : successors``."""
        lines = []
        names = self.protocol.states
        for i, (states, mask) in enumerate(self.keys):
            edges = " ".join(f"{u}-{v}" for b, (u, v) in enumerate(self.pairs) if mask >> b & 1)
            succ = " ".join(f"{j}@{p:.17g}" for j, p in self.successors(i))
            lines.append(f"{i} : {' '.join(names[s] for s in states)} : {edges or '-'} : {succ}")
        return "\n".join(lines) + "\n"


def enumerate_reachable(
    protocol: Protocol,
    n: int,
    overrides: Overrides | None = None,
    max_n: int = 4,
    max_states: int = 2_000_000,
) -> ReachableChain:
    """Breadth-first enumeration with exact rational transition weights."""
    if n > max_n:
        raise ChainError(f"n = {n} exceeds the enumeration bound {max_n}")
    start = initial_configuration(n, protocol, overrides)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    bit = {p: b for b, p in enumerate(pairs)}
    mask0 = 0
    for e in start.active_edges:
        mask0 |= 1 << bit[e]
    per_pair = Fraction(1, len(pairs))
    key0: Key = (tuple(start.node_states), mask0)
    index = {key0: 0}
    keys = [key0]
    rows, cols, vals = [], [], []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        states, mask = keys[i]
        out: dict[Key, Fraction] = {}
        for b, (u, v) in enumerate(pairs):
            a, bb = states[u], states[v]
            c = mask >> b & 1
            match = protocol.lookup(a, bb, c)
            if match is None:
                out[keys[i]] = out.get(keys[i], 0) + per_pair
                continue
            prev = Fraction(0)
            for (x, y, z), cum in zip(match.outcomes, _exact_cumulative(match)):
                w = (cum - prev) * per_pair
                prev = cum
                splits = [(x, y)]
                if a == bb and x != y:
                    splits = [(x, y), (y, x)]
                    w /= 2
                for xx, yy in splits:
                    s2 = list(states)
                    s2[u], s2[v] = xx, yy
                    m2 = mask | (1 << b) if z else mask & ~(1 << b)
                    k2 = (tuple(s2), m2)
                    out[k2] = out.get(k2, 0) + w
        for k2, w in out.items():
            j = index.get(k2)
            if j is None:
                j = len(keys)
                if j >= max_states:
                    raise ChainError(f"more than {max_states} reachable configurations")
                index[k2] = j
                keys.append(k2)
                queue.append(j)
            rows.append(i)
            cols.append(j)
            vals.append(float(w))
    size = len(keys)
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    sums = np.asarray(matrix.sum(axis=1)).ravel()
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        raise ChainError("transition rows do not sum to one")
    return ReachableChain(protocol, n, keys, matrix, pairs, index)


def _exact_cumulative(match) -> list[Fraction]:
    acc, out = Fraction(0), []
    for br in match.rule.branches:
        acc += br.weight
        out.append(acc)
    return out


def closed_classes(chain: ReachableChain) -> list[np.ndarray]:
    """Strongly connected components with no transition leaving them."""
    _, labels = csgraph.connected_components(chain.matrix, directed=True, connection="strong")
    coo = chain.matrix.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_labels = set(labels[coo.row[leaving]].tolist())
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        if lab not in open_labels:
            groups.setdefault(lab, []).append(i)
    return [np.array(sorted(g)) for _, g in sorted(groups.items(), key=lambda kv: min(kv[1]))]


@dataclass
class StabilityVerdict:
    passed: bool
    closed_classes: int
    failing_class: list[int] | None = None
    reason: str = ""
    counterexample: list[Configuration] | None = None

    def describe(self, protocol: Protocol) -> str:
        if self.passed:
            return f"PASS: {self.closed_classes} closed class(es), all stable on the target"
        lines = [f"FAIL: {self.reason}"]
        for step, cfg in enumerate(self.counterexample or []):
            states = " ".join(protocol.states[s] for s in cfg.node_states)
            edges = " ".join(f"{u}-{v}" for u, v in sorted(cfg.active_edges)) or "-"
            lines.append(f"  {step}: {states} | {edges}")
        return "\n".join(lines)


def _path_to(chain: ReachableChain, goal: int) -> list[int]:
    parent = {0: None}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if i == goal:
            break
        for j in chain.matrix.getrow(i).indices.tolist():
            if j not in parent:
                parent[j] = i
                queue.append(j)
    path = []
    node = goal
    while node is not None:
        path.append(node)
        node = parent[node]
    return path[::-1]


def verify_stabilization(
    chain: ReachableChain,
    target: Callable[[Configuration], bool],
    observe: Callable[[Configuration, Protocol], Graph] = output_graph,
) -> StabilityVerdict:
    """Pass iff in every closed class the observed graph is constant and the
    configurations satisfy ``target``. On failure, give a shortest path from
    the start to a witness configuration."""
    classes = closed_classes(chain)
    for cls in classes:
        members = cls.tolist()
        seen = None
        for i in members:
            cfg = chain.configuration(i)
            graph = observe(cfg, chain.protocol)
            if seen is None:
                seen = graph
            elif graph != seen:
                return StabilityVerdict(False, len(classes), members,
                                        "observed graph keeps changing inside a closed class",
                                        [chain.configuration(j) for j in _path_to(chain, i)])
            if not target(cfg):
                return StabilityVerdict(False, len(classes), members,
                                        "closed class violates the target predicate",
                                        [chain.configuration(j) for j in _path_to(chain, i)])
    return StabilityVerdict(True, len(classes))


def absorbing_indices(chain: ReachableChain, pred: Callable[[Configuration], bool]) -> np.ndarray:
    return np.array([i for i in range(len(chain)) if pred(chain.configuration(i))], dtype=np.int64)


def expected_hitting_time(
    chain: ReachableChain, absorbing: Iterable[int] | Callable[[Configuration], bool]
) -> float:
    """Expected steps from the start configuration until the absorbing set is hit."""
    if callable(absorbing):
        target = absorbing_indices(chain, absorbing)
    else:
        target = np.asarray(sorted(set(absorbing)), dtype=np.int64)
    size = len(chain)
    if target.size == 0:
        raise ChainError("absorbing set is empty")
    is_target = np.zeros(size, dtype=bool)
    is_target[target] = True
    if is_target[0]:
        return 0.0
    # states that can reach the target, by search on the reversed graph
    rev = chain.matrix.T.tocsr()
    can = is_target.copy()
    queue = deque(target.tolist())
    while queue:
        j = queue.popleft()
        for i in rev.getrow(j).indices.tolist():
            if not can[i]:
                can[i] = True
                queue.append(i)
    transient = np.flatnonzero(~is_target)
    if not can[transient].all():
        raise ChainError("absorbing set is not reachable from every reachable configuration")
    q = chain.matrix[transient][:, transient]
    system = sparse.identity(len(transient), format="csc") - q.tocsc()
    ones = np.ones(len(transient))
    if len(transient) <= 20_000:
        times = splinalg.spsolve(system, ones)
    else:
        times, info = splinalg.bicgstab(system, ones, rtol=1e-13, maxiter=100_000)
        if info != 0:
            raise ChainError("iterative solver did not converge")
    residual = np.max(np.abs(system @ times - ones))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(times)))):
        raise ChainError(f"linear solve residual {residual:.3g} too large")
    pos = int(np.searchsorted(transient, 0))
    return float(np.atleast_1d(times)[pos])


def output_stable_set(
    chain: ReachableChain,
    observe: Callable[[Configuration, Protocol], Graph] = output_graph,
) -> np.ndarray:
    """Boolean mask: configurations from which every reachable configuration
    has the same observed graph."""
    size = len(chain)
    graphs = [observe(chain.configuration(i), chain.protocol) for i in range(size)]
    ids: dict[Graph, int] = {}
    label = np.array([ids.setdefault(g, len(ids)) for g in graphs])
    # unstable if some successor differs or is itself unstable; fixpoint backwards
    coo = chain.matrix.tocoo()
    unstable = np.zeros(size, dtype=bool)
    unstable[coo.row[label[coo.row] != label[coo.col]]] = True
    rev = chain.matrix.T.tocsr()
    queue = deque(np.flatnonzero(unstable).tolist())
    while queue:
        j = queue.popleft()
        for i in rev.getrow(j).indices.tolist():
            if not unstable[i]:
                unstable[i] = True
                queue.append(i)
    return ~unstable
