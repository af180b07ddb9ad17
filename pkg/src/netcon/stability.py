"""Configuration-level stop predicates, one per construction.

Each checker returns True only for configurations from which the observed
graph can no longer change. Each also offers a count filter: a necessary
condition on state counts and the active-edge count that the compiled
engine evaluates cheaply before calling the full check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import output_graph
from .graphs import Graph, is_spanning_line, is_spanning_ring, is_spanning_star
from .kernel import (
    Constraint,
    CountFilter,
    StopCondition,
    any_pair_enabled,
    count_eq,
    count_le,
    edges_eq,
)
from .model import Configuration, Protocol

CheckFn = Callable[[Configuration, Protocol], bool]
FilterFn = Callable[[Protocol, int], CountFilter | None]


def _pairs_enabled(config: Configuration, table: np.ndarray) -> bool:
    s = np.asarray(config.node_states, dtype=np.int64)
    return bool(any_pair_enabled(s, config.adjacency(), table))


def is_silent(config: Configuration, protocol: Protocol) -> bool:
    """No pair of nodes has an effective transition available."""
    return not _pairs_enabled(config, protocol.effect_table)


def no_edge_rule_enabled(config: Configuration, protocol: Protocol) -> bool:
    """No pair of nodes can fire a transition that flips its edge."""
    return not _pairs_enabled(config, protocol.edge_effect_table)


def _count(config: Configuration, protocol: Protocol, names) -> int:
    ids = protocol.state_set(names)
    return sum(1 for s in config.node_states if s in ids)


def _full_graph(config: Configuration) -> Graph:
    return Graph(tuple(range(config.n)), frozenset(config.active_edges))


# -- lines, star, ring ----------------------------------------------------------

def simple_line_stable(config: Configuration, protocol: Protocol) -> bool:
    return (_count(config, protocol, ["q0"]) == 0
            and _count(config, protocol, ["l", "w"]) == 1
            and is_spanning_line(_full_graph(config), config.n))


def line_stable(config: Configuration, protocol: Protocol) -> bool:
    """Spanning line with no isolated start state left. For line builders
    that never deactivate an edge this already fixes the output."""
    return _count(config, protocol, ["q0"]) == 0 and is_spanning_line(_full_graph(config), config.n)


_FAST_TRANSIENT = ["q2'", "l'", "l''", "f0", "f1", "q0"]


def fast_line_stable(config: Configuration, protocol: Protocol) -> bool:
    return (_count(config, protocol, _FAST_TRANSIENT) == 0
            and _count(config, protocol, ["l"]) == 1
            and is_spanning_line(_full_graph(config), config.n))


def star_stable(config: Configuration, protocol: Protocol) -> bool:
    c = protocol.index("c")
    centers = [u for u, s in enumerate(config.node_states) if s == c]
    if len(centers) != 1:
        return False
    g = _full_graph(config)
    return is_spanning_star(g, config.n) and g.degrees()[centers[0]] == config.n - 1


def ring_stable(config: Configuration, protocol: Protocol) -> bool:
    if _count(config, protocol, ["l'"]) != 1 or _count(config, protocol, ["q1'"]) != 1:
        return False
    if _count(config, protocol, ["q2"]) != config.n - 2:
        return False
    lp, qp = protocol.index("l'"), protocol.index("q1'")
    u = config.node_states.index(lp)
    v = config.node_states.index(qp)
    return config.edge(u, v) == 1 and is_spanning_ring(_full_graph(config), config.n)


# -- regular networks -------------------------------------------------------------

def _regular_k(protocol: Protocol) -> int:
    return sum(1 for s in protocol.states if s.startswith("q")) - 1


def regular_stable(config: Configuration, protocol: Protocol) -> bool:
    """Connected, one leader token, every node's counter equals its degree and
    the nodes still short of degree k are pairwise adjacent."""
    k = _regular_k(protocol)
    deg = config.degrees()
    leaders = 0
    short = []
    for u, s in enumerate(config.node_states):
        name = protocol.states[s]
        idx = int(name[1:])
        if name[0] == "l":
            if idx > k:
                return False
            leaders += 1
        elif idx == 0:
            return False
        if idx != deg[u]:
            return False
        if deg[u] < k:
            short.append(u)
    if leaders != 1:
        return False
    for i, u in enumerate(short):
        for v in short[i + 1:]:
            if not config.edge(u, v):
                return False
    g = _full_graph(config)
    return len(g.components()) == 1


def regular_filter(protocol: Protocol, n: int) -> CountFilter:
    k = _regular_k(protocol)
    leaders = [f"l{i}" for i in range(1, k + 1)]
    short = [f"q{i}" for i in range(1, k)] + [f"l{i}" for i in range(1, k)]
    degree_sum = tuple((f"q{i}", -i) for i in range(1, k + 1)) + tuple(
        (f"l{i}", -i) for i in range(1, k + 1))
    return CountFilter((
        count_eq(leaders, 1),
        count_eq(f"l{k + 1}", 0),
        count_eq("q0", 0),
        count_le(short, k - 1),
        Constraint(degree_sum, "==", 0, 2),
    ))


# -- clique partition ---------------------------------------------------------------

def _clique_c(protocol: Protocol) -> int:
    return (protocol.num_states + 3) // 5


def cliques_stable(config: Configuration, protocol: Protocol) -> bool:
    """floor(n/c) complete components each holding one leader token, and the
    n mod c remaining nodes gathered in one partial star under a single
    partial leader."""
    c = _clique_c(protocol)
    n = config.n
    # quick reject: the clique-state nodes must induce a disjoint union of
    # K_c, i.e. degree c-1 and every edge in c-2 triangles
    clique_states = [protocol.index(x) for x in ("l", "r", f"m{c - 1}", f"l'{c - 1}")]
    member = np.isin(np.asarray(config.node_states), clique_states)
    sub = config.adjacency()[np.ix_(member, member)].astype(np.float64)
    if len(sub) != c * (n // c) or np.any(sub.sum(axis=1) != c - 1):
        return False
    if np.any((sub @ sub)[sub == 1] != c - 2):
        return False
    names = [protocol.states[s] for s in config.node_states]
    g = _full_graph(config)
    adj = g.adjacency()
    full = f"m{c - 1}"
    token = f"l'{c - 1}"
    cliques = 0
    residue = []
    for comp in g.components():
        states = sorted(names[u] for u in comp)
        if len(comp) == c and all(len(adj[u]) == c - 1 for u in comp):
            if states == sorted(["l"] + [full] * (c - 1)):
                cliques += 1
                continue
            if states == sorted(["r", token] + [full] * (c - 2)):
                cliques += 1
                continue
            return False
        residue.append(comp)
    if cliques != n // c:
        return False
    r = n % c
    if r == 0:
        return not residue
    if len(residue) != 1 or len(residue[0]) != r:
        return False
    comp = residue[0]
    heads = [u for u in comp if names[u] == f"l{r - 1}"]
    if len(heads) != 1:
        return False
    head = heads[0]
    return all(names[u] == "f" and adj[u] == {head} for u in comp if u != head)


def cliques_filter(protocol: Protocol, n: int) -> CountFilter:
    c = _clique_c(protocol)
    k, r = divmod(n, c)
    partial = [f"l{i}" for i in range(c - 1)]
    transient = ([f"f{i}" for i in range(1, c - 1)] + [f"lbar{i}" for i in range(c - 1)]
                 + [f"m{i}" for i in range(1, c - 1)] + [f"l'{i}" for i in range(1, c - 1)])
    cons = [
        count_eq(partial, 1 if r else 0),
        count_eq(["l", "r"], k),
        count_eq("f", max(r - 1, 0)),
        count_eq([f"m{c - 1}", f"l'{c - 1}"], k * (c - 1)),
        edges_eq(k * c * (c - 1) // 2 + max(r - 1, 0)),
    ]
    if transient:
        cons.append(count_eq(transient, 0))
    return CountFilter(tuple(cons))


# -- replication --------------------------------------------------------------------

ORIGINAL = ("q0", "l", "l_a", "l_d", "f", "f_a", "f_d")
COPY = ("r0", "r", "r_a", "r_d", "r'")
LEADERS = ("l", "l_a", "l_d")
MARKED = ("l_a", "l_d", "f_a", "f_d")


def replica_graph(config: Configuration, protocol: Protocol) -> Graph:
    """Active edges among copy-side nodes that have been paired with an original."""
    paired = protocol.state_set(COPY[1:])
    keep = {u for u, s in enumerate(config.node_states) if s in paired}
    return Graph(tuple(sorted(keep)), frozenset(
        e for e in config.active_edges if e[0] in keep and e[1] in keep))


def original_graph(config: Configuration, protocol: Protocol) -> Graph:
    side = protocol.state_set(ORIGINAL)
    keep = {u for u, s in enumerate(config.node_states) if s in side}
    return Graph(tuple(sorted(keep)), frozenset(
        e for e in config.active_edges if e[0] in keep and e[1] in keep))


def replication_stable(config: Configuration, protocol: Protocol) -> bool:
    """One leader, a perfect pairing of originals with copies, a replica equal
    to the original under that pairing, and at most one pending copy
    operation whose marks agree with the original."""
    names = [protocol.states[s] for s in config.node_states]
    if "q0" in names or sum(nm in LEADERS for nm in names) != 1:
        return False
    orig = [u for u, nm in enumerate(names) if nm in ORIGINAL]
    copy = {u for u, nm in enumerate(names) if nm in COPY[1:]}
    adj = config.adjacency()
    partner = {}
    for u in orig:
        mates = [v for v in copy if adj[u, v]]
        if len(mates) != 1:
            return False
        partner[u] = mates[0]
    if sorted(partner.values()) != sorted(copy):
        return False
    for i, u in enumerate(orig):
        for v in orig[i + 1:]:
            if adj[u, v] != adj[partner[u], partner[v]]:
                return False
    for v in range(config.n):
        if names[v] == "r0" and adj[v].any():
            return False
    marked = [u for u in orig if names[u] in MARKED]
    if marked:
        if len(marked) != 2:
            return False
        u, v = marked
        kind = {names[u][-1], names[v][-1]}
        if len(kind) != 1 or kind != {"a" if adj[u, v] else "d"}:
            return False
        if not any(names[x] in LEADERS for x in marked):
            return False
    for u in orig:
        p = names[partner[u]]
        if p in ("r_a", "r_d", "r'"):
            if names[u] not in MARKED:
                return False
            if p != "r'" and p[-1] != names[u][-1]:
                return False
    return True


def replication_filter(protocol: Protocol, n: int) -> CountFilter:
    return CountFilter((
        count_eq("q0", 0),
        count_eq(list(LEADERS), 1),
        count_le(list(MARKED), 2),
    ))


# -- registry -----------------------------------------------------------------------

@dataclass(frozen=True)
class Checker:
    check: CheckFn
    prefilter: FilterFn | None = None
    observe: Callable[[Configuration, Protocol], Graph] = output_graph


def _static(*cons) -> FilterFn:
    return lambda protocol, n: CountFilter(tuple(cons))


CHECKERS: dict[str, Checker] = {
    "silent": Checker(is_silent),
    "quiescence-heuristic": Checker(no_edge_rule_enabled),
    "all-informed": Checker(is_silent, _static(count_eq("b", 0))),
    "one-left": Checker(is_silent, _static(count_le("a", 1))),
    "none-left": Checker(is_silent, _static(count_eq("a", 0))),
    "all-met": Checker(is_silent, _static(count_eq("b", 0))),
    "complete-graph": Checker(
        is_silent, lambda p, n: CountFilter((edges_eq(n * (n - 1) // 2),))),
    "simple-line": Checker(
        simple_line_stable,
        lambda p, n: CountFilter((count_eq("q0", 0), count_eq(["l", "w"], 1), edges_eq(n - 1)))),
    "line": Checker(
        line_stable, lambda p, n: CountFilter((count_eq("q0", 0), edges_eq(n - 1)))),
    "fast-line": Checker(
        fast_line_stable,
        lambda p, n: CountFilter((count_eq(_FAST_TRANSIENT, 0), count_eq("l", 1),
                                  edges_eq(n - 1)))),
    "cycle-cover": Checker(is_silent, _static(count_le("q0", 1), count_le("q1", 2))),
    "star": Checker(star_stable, lambda p, n: CountFilter((count_eq("c", 1), edges_eq(n - 1)))),
    "ring": Checker(
        ring_stable,
        lambda p, n: CountFilter((count_eq("l'", 1), count_eq("q1'", 1), count_eq("q2", n - 2),
                                  edges_eq(n)))),
    "regular": Checker(regular_stable, regular_filter),
    "cliques": Checker(cliques_stable, cliques_filter),
    "power-degree": Checker(
        is_silent,
        lambda p, n: CountFilter((
            count_eq("q", 1),
            count_eq(f"a{p.params['d']}", 2 ** p.params["d"]),
            edges_eq(2 ** p.params["d"])))),
    "replication": Checker(replication_stable, replication_filter, replica_graph),
    "udm": Checker(
        no_edge_rule_enabled,
        _static(count_le("q0", 1), count_le("qu'", 1), count_eq("qm'", 0))),
}


def get_checker(name: str) -> Checker:
    try:
        return CHECKERS[name]
    except KeyError:
        raise KeyError(f"unknown stability checker {name!r}") from None


def stop_condition(protocol: Protocol, n: int, checker: str | None = None) -> StopCondition:
    """Bind the protocol's stability checker to a population size."""
    chk = get_checker(checker or protocol.stability_checker)
    filt = chk.prefilter(protocol, n) if chk.prefilter is not None else None
    return StopCondition(lambda config: chk.check(config, protocol), filt, protocol)


def observer(protocol: Protocol, checker: str | None = None):
    return get_checker(checker or protocol.stability_checker).observe
