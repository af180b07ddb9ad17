"""Built-in protocols and the run scenarios that go with them.

A scenario bundles a protocol with what an experiment needs besides the
rules: the stop predicate, the target shape checked by the correctness
suite, how the start configuration deviates from the uniform one, the
smallest admissible population and the default step cap.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

import numpy as np

from .engine import Overrides, output_graph
from .graphs import (
    Graph,
    graphs_isomorphic,
    is_clique_partition,
    is_cycle_cover,
    is_k_regular_relaxed,
    is_maximum_matching,
    is_spanning_line,
    is_spanning_ring,
    is_spanning_star,
    is_star_of_size,
    random_connected_graph,
)
from .kernel import StopCondition
from .model import Branch, Configuration, Protocol, ProtocolError, Rule
from .stability import original_graph, replica_graph, stop_condition


class _Builder:
    """Collects rules by state name.

    Adding the mirror image of an existing rule is a no-op when it describes
    the same transition. When it describes a different one, ``keep_first``
    keeps the rule already present; otherwise it is an error.
    """

    def __init__(self, name: str, states, initial: str, output=None) -> None:
        self.name = name
        self.states = tuple(states)
        self.idx = {s: i for i, s in enumerate(self.states)}
        self.initial = initial
        self.output = output
        self.rules: dict[tuple[int, int, int], Rule] = {}

    def add(self, a, b, c, x, y, z, keep_first: bool = False) -> None:
        self.add_random(a, b, c, [(Fraction(1), (x, y, z))], keep_first)

    def add_random(self, a, b, c, branches, keep_first: bool = False) -> None:
        i = self.idx
        pat = (i[a], i[b], c)
        rule = Rule(pat, tuple(Branch(Fraction(w), (i[x], i[y], z)) for w, (x, y, z) in branches))
        mirror = (pat[1], pat[0], c)
        if pat in self.rules:
            old = self.rules[pat]
        elif pat[0] != pat[1] and mirror in self.rules:
            m = self.rules[mirror]
            old = Rule(pat, tuple(Branch(br.weight, (br.outcome[1], br.outcome[0], br.outcome[2]))
                                  for br in m.branches))
        else:
            self.rules[pat] = rule
            return
        if old == rule or keep_first:
            return
        raise ProtocolError(f"{self.name}: conflicting rules for ({a},{b},{c})")

    def build(self, params=None, checker: str = "quiescence-heuristic") -> Protocol:
        outs = (frozenset(range(len(self.states))) if self.output is None
                else frozenset(self.idx[s] for s in self.output))
        return Protocol(self.name, self.states, self.idx[self.initial], outs, self.rules,
                        params or {}, checker)


def _both(b: _Builder, a, x, y, **kw) -> None:
    """Add a rule for both edge states, leaving the edge unchanged."""
    for c in (0, 1):
        b.add(a[0], a[1], c, x, y, c, **kw)


# -- simple processes ---------------------------------------------------------------

def one_way_epidemic() -> Protocol:
    b = _Builder("one-way-epidemic", ["a", "b"], "b")
    _both(b, ("a", "b"), "a", "a")
    return b.build(checker="all-informed")


def one_to_one_elimination() -> Protocol:
    b = _Builder("one-to-one-elimination", ["a", "b"], "a")
    _both(b, ("a", "a"), "a", "b")
    return b.build(checker="one-left")


def max_matching() -> Protocol:
    b = _Builder("max-matching", ["a", "b"], "a")
    b.add("a", "a", 0, "b", "b", 1)
    return b.build(checker="one-left")


def one_to_all_elimination() -> Protocol:
    b = _Builder("one-to-all-elimination", ["a", "b"], "a")
    _both(b, ("a", "a"), "b", "a")
    _both(b, ("a", "b"), "b", "b")
    return b.build(checker="none-left")


def meet_everybody() -> Protocol:
    b = _Builder("meet-everybody", ["a", "b", "c"], "b")
    _both(b, ("a", "b"), "a", "c")
    return b.build(checker="all-met")


def node_cover() -> Protocol:
    b = _Builder("node-cover", ["a", "b"], "a")
    _both(b, ("a", "a"), "b", "b")
    _both(b, ("a", "b"), "b", "b")
    return b.build(checker="none-left")


def edge_cover() -> Protocol:
    b = _Builder("edge-cover", ["a"], "a")
    b.add("a", "a", 0, "a", "a", 1)
    return b.build(checker="complete-graph")


# -- spanning lines -----------------------------------------------------------------

def simple_global_line() -> Protocol:
    b = _Builder("simple-global-line", ["q0", "q1", "q2", "l", "w"], "q0")
    b.add("q0", "q0", 0, "q1", "l", 1)
    b.add("l", "q0", 0, "q2", "l", 1)
    b.add("l", "l", 0, "q2", "w", 1)
    b.add("w", "q2", 1, "q2", "w", 1)
    b.add("w", "q1", 1, "q2", "l", 1)
    return b.build(checker="simple-line")


def intermediate_global_line() -> Protocol:
    b = _Builder("intermediate-global-line",
                 ["q0", "q1", "q2", "l", "wbar", "w1", "w2", "w3"], "q0")
    b.add("q0", "q0", 0, "q1", "l", 1)
    b.add("l", "q0", 0, "q2", "l", 1)
    b.add("l", "l", 0, "wbar", "w1", 1)
    b.add("w1", "q2", 1, "w1", "w1", 1)
    b.add("w1", "q1", 1, "w2", "q1", 1)
    b.add("w2", "w1", 1, "w2", "w2", 1)
    b.add("w2", "wbar", 1, "w3", "q2", 1)
    b.add("w3", "w2", 1, "q2", "w3", 1)
    b.add("w3", "q1", 1, "q2", "l", 1)
    return b.build(checker="line")


def fast_global_line() -> Protocol:
    b = _Builder("fast-global-line",
                 ["q0", "q1", "q2", "q2'", "l", "l'", "l''", "f0", "f1"], "q0")
    b.add("q0", "q0", 0, "q1", "l", 1)
    b.add("l", "q0", 0, "q2", "l", 1)
    b.add("l", "l", 0, "q2'", "l'", 1)
    b.add("l'", "q2", 1, "l''", "f1", 0)
    b.add("l'", "q1", 1, "l''", "f0", 0)
    b.add("l''", "q2'", 1, "l", "q2", 1)
    b.add("l", "f0", 0, "q2", "l", 1)
    b.add("l", "f1", 0, "q2'", "l'", 1)
    return b.build(checker="fast-line")


# -- cycles, stars, rings ------------------------------------------------------------

def cycle_cover() -> Protocol:
    b = _Builder("cycle-cover", ["q0", "q1", "q2"], "q0")
    b.add("q0", "q0", 0, "q1", "q1", 1)
    b.add("q1", "q0", 0, "q2", "q1", 1)
    b.add("q1", "q1", 0, "q2", "q2", 1)
    return b.build(checker="cycle-cover")


def global_star() -> Protocol:
    b = _Builder("global-star", ["c", "p"], "c")
    b.add("c", "c", 0, "c", "p", 1)
    b.add("p", "p", 1, "p", "p", 0)
    b.add("c", "p", 0, "c", "p", 1)
    return b.build(checker="star")


def global_ring(repaired: bool = True) -> Protocol:
    """Spanning ring: build a line, then let its endpoints close it.

    A closed pair stays blocked (l', q1') and backtracks once an end meets a
    node that shows another component may exist. The literal rule set lets
    both ends of a two-node line block with different partners, after which
    a backtrack can cut the wrong edge. With ``repaired`` the end of a
    two-node line waits in q1* until its neighbour is interior, and only the
    l' end detects, which frees q1'' so the state count stays at nine.
    """
    if not repaired:
        b = _Builder("global-ring",
                     ["q0", "q1", "q2", "l", "w", "l'", "l''", "q1'", "q1''"], "q0")
        b.add("q0", "q0", 0, "q1", "l", 1)
    else:
        b = _Builder("global-ring", ["q0", "q1", "q2", "l", "w", "l'", "l''", "q1'", "q1*"], "q0")
        b.add("q0", "q0", 0, "q1*", "l", 1)
    b.add("l", "q0", 0, "q2", "l", 1)
    b.add("l", "l", 0, "q2", "w", 1)
    b.add("w", "q2", 1, "q2", "w", 1)
    b.add("w", "q1", 1, "q2", "l", 1)
    if repaired:
        b.add("w", "q1*", 1, "q2", "l", 1)
        b.add("q1*", "q2", 1, "q1", "q2", 1)
    b.add("l", "q1", 0, "l'", "q1'", 1)
    detectors = ("l",) if repaired else ("l", "q1")
    for x in detectors:
        for y in ("l", "w", "q1", "q0"):
            b.add(x + "'", y, 0, x + "''", y, 0)
    for x in detectors:
        for y in ("l", "q1"):
            marked_y = y + "''" if y in detectors else y + "'"
            b.add(x + "'", y + "'", 0, x + "''", marked_y, 0)
    b.add("l''", "q1'", 1, "l", "q1", 0)
    if not repaired:
        b.add("l'", "q1''", 1, "l", "q1", 0)
        b.add("l''", "q1''", 1, "l", "q1", 0)
    return b.build(checker="ring")


# -- regular networks ----------------------------------------------------------------

def two_regular_connected() -> Protocol:
    b = _Builder("2rc", ["q0", "q1", "q2", "l1", "l2", "l3"], "q0")
    b.add("q0", "q0", 0, "q1", "l1", 1)
    b.add("q1", "q0", 0, "q2", "q1", 1)
    b.add("q1", "q1", 0, "q2", "q2", 1)
    b.add("l1", "l1", 0, "l2", "q2", 1)
    for i in (0, 1):
        b.add("l1", f"q{i}", 0, "q2", f"l{i + 1}", 1)
    for i in (1, 2):
        for j in (1, 2):
            b.add(f"l{i}", f"q{j}", 1, f"q{i}", f"l{j}", 1)
    for i in (1, 2):
        for j in (1, 2):
            b.add(f"l{i}", f"l{j}", 1, f"q{i}", f"l{j}", 1, keep_first=True)
    b.add("l2", "q0", 0, "l3", "q1", 1)
    b.add("l2", "l1", 0, "l3", "q2", 1)
    b.add("l2", "l2", 0, "l3", "l3", 1)
    b.add("l3", "q1", 1, "l2", "q0", 0)
    b.add("l3", "q2", 1, "l2", "l1", 0)
    b.add("l3", "l1", 1, "l2", "q0", 0)
    b.add("l3", "l2", 1, "l2", "l1", 0)
    b.add("l3", "l3", 1, "l2", "l2", 0)
    return b.build(checker="regular")


def k_regular_connected(k: int) -> Protocol:
    if k < 2:
        raise ValueError("k must be at least 2")
    q = [f"q{i}" for i in range(k + 1)]
    l = [None] + [f"l{i}" for i in range(1, k + 2)]

    def lead(i: int) -> str:
        # a leader counter that drops to zero is an isolated start node
        return q[0] if i == 0 else l[i]

    b = _Builder(f"krc({k})", q + l[1:], "q0")
    b.add("q0", "q0", 0, "q1", "l1", 1)
    for i in range(1, k):
        for j in range(k):
            b.add(q[i], q[j], 0, q[i + 1], q[j + 1], 1)
    for i in range(1, k):
        for j in range(1, k):
            b.add(l[i], l[j], 0, l[i + 1], q[j + 1], 1, keep_first=True)
    for i in range(1, k):
        for j in range(k):
            b.add(l[i], q[j], 0, q[i + 1], l[j + 1], 1)
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            b.add(l[i], q[j], 1, q[i], l[j], 1)
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            b.add(l[i], l[j], 1, q[i], l[j], 1, keep_first=True)
    b.add(l[k], q[0], 0, l[k + 1], q[1], 1)
    for i in range(1, k):
        b.add(l[k], l[i], 0, l[k + 1], q[i + 1], 1)
    b.add(l[k], l[k], 0, l[k + 1], l[k + 1], 1)
    b.add(l[k + 1], q[1], 1, l[k], q[0], 0)
    for i in range(2, k + 1):
        b.add(l[k + 1], q[i], 1, l[k], l[i - 1], 0)
    for i in range(1, k + 1):
        b.add(l[k + 1], l[i], 1, l[k], lead(i - 1), 0)
    b.add(l[k + 1], l[k + 1], 1, l[k], l[k], 0)
    return b.build({"k": k}, checker="regular")


# -- clique partition -------------------------------------------------------------

def c_cliques(c: int) -> Protocol:
    if c < 2:
        raise ValueError("c must be at least 2")
    part = [f"l{i}" for i in range(c - 1)]
    wait = [f"f{i}" for i in range(1, c - 1)]
    closing = [f"lbar{i}" for i in range(c - 1)]
    member = [f"m{i}" for i in range(1, c)]
    token = [f"l'{i}" for i in range(1, c)]
    states = part + wait + ["f"] + closing + ["l"] + member + token + ["r"]

    def closing_state(i: int) -> str:
        # the closing counter runs into the settled leader state
        return "l" if i == c - 1 else f"lbar{i}"

    b = _Builder(f"c-cliques({c})", states, "l0")
    for i in range(c - 1):
        if i < c - 2:
            b.add(f"l{i}", "l0", 0, f"l{i + 1}", "f", 1)
        else:
            b.add(f"l{i}", "l0", 0, closing_state(1), "m1", 1)
    for i in range(1, c - 1):
        for j in range(1, i + 1):
            if i < c - 2:
                b.add(f"l{i}", f"l{j}", 0, f"l{i + 1}", f"f{j}", 1)
            else:
                b.add(f"l{i}", f"l{j}", 0, "lbar0", f"f{j}", 1)
    for i in range(1, c - 1):
        b.add(f"f{i}", "f", 1, f"f{i - 1}" if i > 1 else "f", "l0", 0)
    for i in range(c - 1):
        b.add(f"lbar{i}", "f", 1, closing_state(i + 1), "m1", 1)
    for i in range(1, c - 1):
        for j in range(1, c - 1):
            b.add(f"m{i}", f"m{j}", 0, f"m{i + 1}", f"m{j + 1}", 1)
    for i in range(1, c):
        b.add("l", f"m{i}", 1, "r", f"l'{i}", 1)
    for i in range(2, c):
        for j in range(2, c):
            b.add(f"l'{i}", f"l'{j}", 1, f"l'{i - 1}", f"l'{j - 1}", 0)
    for i in range(1, c):
        b.add(f"l'{i}", "r", 1, f"m{i}", "l", 1)
    return b.build({"c": c}, checker="cliques")


# -- replication, degree, partition ------------------------------------------------

def leader_replication(repaired: bool = True) -> Protocol:
    """Copy the graph on the start-state nodes onto the r0 nodes.

    With ``repaired`` the edge kept by an adjacent leader/follower pair when
    marking is the active one, and copy operations that find the edge
    already in the wanted state complete instead of blocking.
    """
    states = ["q0", "r0", "l", "l_a", "l_d", "f", "f_a", "f_d", "r", "r_a", "r_d", "r'"]
    b = _Builder("leader-replication", states, "q0", output=["r", "r_a", "r_d"])
    b.add("q0", "r0", 0, "l", "r", 1)
    _both(b, ("l", "l"), "l", "f")
    b.add_random("l", "f", 0, [("1/2", ("l_d", "f_d", 0)), ("1/2", ("f", "l", 0))])
    b.add_random("l", "f", 1, [("1/2", ("l_a", "f_a", 1 if repaired else 0)),
                               ("1/2", ("f", "l", 1))])
    for x in ("l", "f"):
        for i in ("a", "d"):
            b.add(f"{x}_{i}", "r", 1, f"{x}_{i}", f"r_{i}", 1)
    b.add("r_a", "r_a", 0, "r'", "r'", 1)
    b.add("r_d", "r_d", 1, "r'", "r'", 0)
    if repaired:
        b.add("r_a", "r_a", 1, "r'", "r'", 1)
        b.add("r_d", "r_d", 0, "r'", "r'", 0)
    for x in ("l", "f"):
        for i in ("a", "d"):
            b.add("r'", f"{x}_{i}", 1, "r", x, 1)
    for i in ("a", "d"):
        for j in ("a", "d"):
            _both(b, (f"l_{i}", f"l_{j}"), f"l_{i}", f"f_{j}", keep_first=True)
    return b.build(checker="replication")


def power_degree(d: int) -> Protocol:
    if d < 1:
        raise ValueError("d must be at least 1")
    states = ["q0", "q0'", "q"] + [f"q{i}" for i in range(1, d + 1)] + [
        f"a{i}" for i in range(d + 1)]
    b = _Builder(f"power-degree({d})", states, "a0")
    b.add("q0", "a0", 0, "q0'", "a1", 1)
    b.add("q0'", "a0", 0, "q", "a1", 1)
    for i in range(1, d):
        b.add("q", f"a{i}", 1, f"q{i + 1}", f"a{i + 1}", 1)
    for j in range(2, d + 1):
        b.add(f"q{j}", "a0", 0, "q", f"a{j}", 1)
    return b.build({"d": d}, checker="power-degree")


def udm_partition() -> Protocol:
    b = _Builder("udm-partition", ["q0", "qu'", "qu", "qd", "qm", "qm'"], "q0")
    b.add("q0", "q0", 0, "qu'", "qd", 1)
    b.add("qu'", "q0", 0, "qu", "qm", 1)
    b.add("qu'", "qu'", 0, "qu", "qm'", 1)
    b.add("qm'", "qd", 1, "qm", "q0", 0)
    return b.build(checker="udm")


# -- scenarios -----------------------------------------------------------------------

# target(final configuration, protocol, start configuration)
Target = Callable[[Configuration, Protocol, Configuration], bool]
Setup = Callable[[Protocol, int, np.random.Generator, Mapping[str, Any]], Overrides | None]


def _full(config: Configuration) -> Graph:
    return Graph(tuple(range(config.n)), frozenset(config.active_edges))


def _count(config, protocol, name) -> int:
    i = protocol.index(name)
    return sum(1 for s in config.node_states if s == i)


def _graph_target(pred) -> Target:
    return lambda config, protocol, start: pred(output_graph(config, protocol), config.n)


def _single_node(state: str) -> Setup:
    return lambda protocol, n, rng, opts: Overrides({0: state})


def _power_target(config: Configuration, protocol: Protocol, start: Configuration) -> bool:
    d = protocol.params["d"]
    leaders = protocol.state_set(["q0", "q0'", "q"] + [f"q{i}" for i in range(1, d + 1)])
    centers = [u for u, s in enumerate(config.node_states) if s in leaders]
    return len(centers) == 1 and is_star_of_size(_full(config), centers[0], 2 ** d)


def _replication_target(config: Configuration, protocol: Protocol, start: Configuration) -> bool:
    """The replica is isomorphic to the graph the originals started with."""
    return graphs_isomorphic(replica_graph(config, protocol), original_graph(start, protocol))


def replication_overrides(graph: Graph, n: int) -> Overrides:
    """Originals on nodes 0..g-1 carrying ``graph``; every other node starts in r0."""
    g = graph.relabeled()
    size = len(g.nodes)
    if size < 1 or n < 2 * size:
        raise ValueError(f"need at least {2 * size} nodes to copy a {size}-node graph")
    return Overrides({u: "r0" for u in range(size, n)}, tuple(sorted(g.edges)))


def _replication_setup(protocol, n, rng, opts) -> Overrides:
    graph = opts.get("input_graph")
    if graph is None:
        graph = random_connected_graph(int(opts.get("input_size", n // 2)), rng)
    return replication_overrides(graph, n)


@dataclass(frozen=True)
class Entry:
    build: Callable[..., Protocol]
    params: tuple[str, ...] = ()
    target: Target | None = None
    setup: Setup | None = None
    min_n: Callable[[Mapping[str, int]], int] = lambda p: 2
    cap: Callable[[int], int] = lambda n: 100 * n * n
    seeds: tuple[str, ...] = ()


def _nlogn2(n: int) -> int:
    return int(100 * n * n * math.log(n)) + 1


CATALOG: dict[str, Entry] = {
    "one-way-epidemic": Entry(
        one_way_epidemic, target=lambda c, p, s: _count(c, p, "b") == 0,
        setup=_single_node("a"), seeds=("a",)),
    "one-to-one-elimination": Entry(
        one_to_one_elimination, target=lambda c, p, s: _count(c, p, "a") == 1),
    "max-matching": Entry(max_matching, target=_graph_target(is_maximum_matching)),
    "one-to-all-elimination": Entry(
        one_to_all_elimination, target=lambda c, p, s: _count(c, p, "a") == 0),
    "meet-everybody": Entry(
        meet_everybody, target=lambda c, p, s: _count(c, p, "b") == 0,
        setup=_single_node("a"), cap=_nlogn2, seeds=("a",)),
    "node-cover": Entry(node_cover, target=lambda c, p, s: _count(c, p, "a") == 0),
    "edge-cover": Entry(
        edge_cover, target=_graph_target(lambda g, n: len(g.edges) == n * (n - 1) // 2),
        cap=_nlogn2),
    "simple-global-line": Entry(
        simple_global_line, target=_graph_target(is_spanning_line), cap=lambda n: 20 * n ** 5),
    "intermediate-global-line": Entry(
        intermediate_global_line, target=_graph_target(is_spanning_line),
        cap=lambda n: 50 * n ** 4),
    "fast-global-line": Entry(
        fast_global_line, target=_graph_target(is_spanning_line), cap=lambda n: 100 * n ** 3),
    "cycle-cover": Entry(cycle_cover, target=_graph_target(is_cycle_cover)),
    "global-star": Entry(global_star, target=_graph_target(is_spanning_star)),
    "global-ring": Entry(
        global_ring, target=_graph_target(is_spanning_ring), min_n=lambda p: 3,
        cap=lambda n: 50 * n ** 4),
    "2rc": Entry(
        two_regular_connected, target=_graph_target(is_spanning_ring), min_n=lambda p: 3,
        cap=lambda n: 50 * n ** 4),
    "krc": Entry(
        k_regular_connected, ("k",),
        target=lambda c, p, s: is_k_regular_relaxed(output_graph(c, p), c.n, p.params["k"]),
        min_n=lambda p: p["k"] + 1, cap=lambda n: 50 * n ** 4),
    "c-cliques": Entry(
        c_cliques, ("c",),
        target=lambda c, p, s: is_clique_partition(output_graph(c, p), c.n, p.params["c"]),
        cap=lambda n: 50 * n ** 4),
    "leader-replication": Entry(
        leader_replication, target=_replication_target, setup=_replication_setup,
        min_n=lambda p: 2, cap=lambda n: 50 * n ** 4, seeds=("r0",)),
    "power-degree": Entry(
        power_degree, ("d",), target=_power_target, setup=_single_node("q0"),
        min_n=lambda p: 2 ** p["d"] + 1, cap=_nlogn2, seeds=("q0",)),
    "udm-partition": Entry(udm_partition),
}

ALIASES = {"maximum-matching": "max-matching", "k-regular-connected": "krc",
           "2-regular-connected": "2rc"}


def parse_name(text: str) -> tuple[str, dict[str, int]]:
    """Split ``krc(k=3)``, ``krc(3)`` or ``krc`` into a name and parameters."""
    m = re.fullmatch(r"\s*([\w-]+)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise KeyError(f"unknown protocol {text!r}")
    name = ALIASES.get(m.group(1), m.group(1))
    if name not in CATALOG:
        raise KeyError(f"unknown protocol {text!r}")
    params: dict[str, int] = {}
    if m.group(2):
        keys = CATALOG[name].params
        for pos, part in enumerate(p.strip() for p in m.group(2).split(",") if p.strip()):
            if "=" in part:
                k, v = (s.strip() for s in part.split("=", 1))
            else:
                if pos >= len(keys):
                    raise KeyError(f"too many parameters for {name}")
                k, v = keys[pos], part
            params[k] = int(v)
    return name, params


def builtin(name: str, params: Mapping[str, int] | None = None) -> Protocol:
    """Return a catalog protocol by name, e.g. ``builtin("krc", {"k": 3})``."""
    return scenario(name, params).protocol


@dataclass(frozen=True)
class Scenario:
    name: str
    protocol: Protocol
    entry: Entry
    params: Mapping[str, int] = field(default_factory=dict)
    options: Mapping[str, Any] = field(default_factory=dict)

    @property
    def min_n(self) -> int:
        return self.entry.min_n(self.params)

    def check_n(self, n: int) -> None:
        if n < self.min_n:
            raise ValueError(f"{self.protocol.name} needs n >= {self.min_n}, got {n}")

    def cap(self, n: int) -> int:
        return self.entry.cap(n)

    def stop(self, n: int) -> StopCondition:
        return stop_condition(self.protocol, n)

    def overrides(self, n: int, rng: np.random.Generator) -> Overrides | None:
        if self.entry.setup is None:
            return None
        return self.entry.setup(self.protocol, n, rng, self.options)

    def target(self, config: Configuration, start: Configuration) -> bool:
        """Whether ``config`` shows the intended construction for a run that
        began at ``start``."""
        if self.entry.target is None:
            raise ValueError(f"{self.protocol.name} has no target predicate")
        return self.entry.target(config, self.protocol, start)

    @property
    def has_target(self) -> bool:
        return self.entry.target is not None

    @property
    def label(self) -> str:
        return ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))


def scenario(name: str, params: Mapping[str, int] | None = None, **options) -> Scenario:
    base, parsed = parse_name(name)
    merged = {**parsed, **(params or {})}
    entry = CATALOG[base]
    missing = [k for k in entry.params if k not in merged]
    if missing:
        raise KeyError(f"{base} needs parameter(s) {', '.join(missing)}")
    extra = [k for k in merged if k not in entry.params]
    if extra:
        raise KeyError(f"{base} takes no parameter(s) {', '.join(extra)}")
    proto = entry.build(**{k: merged[k] for k in entry.params})
    return Scenario(base, proto, entry, merged, options)


def scenario_for(protocol: Protocol, **options) -> Scenario:
    """Attach catalog metadata to a protocol loaded from text when it matches
    a built-in one; otherwise use the generic edge-quiescence stop rule."""
    try:
        sc = scenario(protocol.name, **options)
    except KeyError:
        sc = None
    if sc is not None and sc.protocol == protocol:
        return sc
    generic = Protocol(protocol.name, protocol.states, protocol.initial, protocol.output_states,
                       protocol.rules, protocol.params, "quiescence-heuristic")
    return Scenario(protocol.name, generic, Entry(lambda: generic), {}, options)


def catalog_names() -> list[str]:
    return list(CATALOG)


def default_instances() -> list[Scenario]:
    """One scenario per catalog entry, with small default parameters."""
    defaults = {"krc": {"k": 3}, "c-cliques": {"c": 3}, "power-degree": {"d": 2}}
    return [scenario(name, defaults.get(name)) for name in CATALOG]
