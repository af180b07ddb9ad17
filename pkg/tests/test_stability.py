"""Stop predicates against the exact reachable chain.

A stop predicate is sound when every configuration it accepts is output
stable and satisfies the target. It is exact when it accepts every such
configuration.
"""

import numpy as np
import pytest

from netcon.catalog import default_instances, global_ring, leader_replication, scenario
from netcon.graphs import Graph
from netcon.oracle import enumerate_reachable, output_stable_set, verify_stabilization
from netcon.stability import observer

INSTANCES = {sc.protocol.name: sc for sc in default_instances()}
# protocols whose stop predicate misses some stable configurations
CONSERVATIVE = {"krc(3)", "leader-replication"}


def _cases(name):
    if name != "leader-replication":
        sc = INSTANCES[name]
        return [(sc, n) for n in range(sc.min_n, 5)]
    single = scenario(name, input_graph=Graph.from_edges([0], []))
    pair = scenario(name, input_graph=Graph.from_edges([0, 1], [(0, 1)]))
    return [(single, 2), (single, 3), (pair, 4)]


def _sets(sc, n):
    chain = enumerate_reachable(sc.protocol, n, sc.overrides(n, None))
    start = chain.configuration(0)
    stable = output_stable_set(chain, observer(sc.protocol))
    stop = sc.stop(n)
    configs = [chain.configuration(i) for i in range(len(chain))]
    accepted = np.array([stop(c) for c in configs])
    if sc.has_target:
        good = stable & np.array([sc.target(c, start) for c in configs])
    else:
        good = stable
    return accepted, good


@pytest.mark.parametrize("name", sorted(INSTANCES))
def test_stop_predicate_sound_and_exact(name):
    for sc, n in _cases(name):
        accepted, good = _sets(sc, n)
        assert accepted.any(), f"{name}@{n}: stop predicate never holds"
        assert not (accepted & ~good).any(), f"{name}@{n}: accepts an unstable configuration"
        if name not in CONSERVATIVE:
            assert not (good & ~accepted).any(), f"{name}@{n}: misses a stable configuration"


@pytest.mark.parametrize("name", sorted(n for n in INSTANCES if INSTANCES[n].has_target))
def test_every_closed_class_meets_target(name):
    for sc, n in _cases(name):
        chain = enumerate_reachable(sc.protocol, n, sc.overrides(n, None))
        start = chain.configuration(0)
        verdict = verify_stabilization(chain, lambda c: sc.target(c, start), observer(sc.protocol))
        assert verdict.passed, f"{name}@{n}: {verdict.describe(sc.protocol)}"


def _replication_verdict(protocol, graph, n):
    sc = scenario("leader-replication", input_graph=graph)
    chain = enumerate_reachable(protocol, n, sc.overrides(n, None), max_n=n)
    start = chain.configuration(0)
    return verify_stabilization(chain, lambda c: sc.target(c, start), observer(protocol))


def test_replication_repair_needed_for_a_path():
    p3 = Graph.from_edges([0, 1, 2], [(0, 1), (1, 2)])
    assert _replication_verdict(leader_replication(repaired=True), p3, 6).passed
    literal = _replication_verdict(leader_replication(repaired=False), p3, 6)
    assert not literal.passed and literal.counterexample


def _ring_verdict(protocol, n):
    sc = scenario("global-ring")
    chain = enumerate_reachable(protocol, n, max_n=n)
    start = chain.configuration(0)
    return verify_stabilization(chain, lambda c: sc.target(c, start), observer(protocol))


def test_repaired_ring_stabilizes_at_five():
    assert _ring_verdict(global_ring(repaired=True), 5).passed


@pytest.mark.slow
def test_ring_repair_needed_at_six():
    assert _ring_verdict(global_ring(repaired=True), 6).passed
    literal = _ring_verdict(global_ring(repaired=False), 6)
    assert not literal.passed
    # the witness ends with a blocked end whose partner has already backtracked
    last = literal.counterexample[-1]
    names = [global_ring(repaired=False).states[s] for s in last.node_states]
    assert "q1''" in names
