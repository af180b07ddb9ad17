"""Reference interaction engine: pair scheduling, rule application, runs.

This is the straightforward pure-Python implementation. The compiled path in
``netcon.kernel`` consumes the random stream in the same order and produces
identical trajectories; tests hold the two to that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .graphs import Graph
from .model import (
    STOP_CAP,
    STOP_PREDICATE,
    STOP_QUIESCENCE,
    ChangeRecord,
    Configuration,
    Protocol,
    RunResult,
)


@dataclass(frozen=True)
class Overrides:
    """Deviations from the homogeneous start: per-node states and active edges."""

    states: Mapping[int, str] = field(default_factory=dict)
    edges: tuple[tuple[int, int], ...] = ()


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent stream for trial ``trial`` derived from ``(master_seed, trial)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial])))


def initial_configuration(
    n: int, protocol: Protocol, overrides: Overrides | None = None
) -> Configuration:
    if n < 2:
        raise ValueError(f"population size must be at least 2, got {n}")
    states = [protocol.initial] * n
    edges: set[tuple[int, int]] = set()
    if overrides is not None:
        for node, name in overrides.states.items():
            if not 0 <= node < n:
                raise ValueError(f"override node {node} outside 0..{n - 1}")
            states[node] = protocol.index(name) if isinstance(name, str) else int(name)
        for u, v in overrides.edges:
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"bad override edge ({u}, {v})")
            edges.add((min(u, v), max(u, v)))
    return Configuration(n, states, edges)


def uniform_pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """One uniform draw over the n(n-1)/2 unordered pairs, returned as (u, v), u < v."""
    total = n * (n - 1)
    k = int(rng.random() * total)
    if k >= total:
        k = total - 1
    u, v = divmod(k, n - 1)
    if v >= u:
        v += 1
    return (u, v) if u < v else (v, u)


def apply_interaction(
    config: Configuration, u: int, v: int, protocol: Protocol, rng: np.random.Generator,
    step: int = 0,
) -> ChangeRecord:
    """Apply the transition for the pair (u, v) in place.

    Random draws, in order: one for the branch if the rule has several, then one
    fair coin if both nodes share a state and the outcome splits them.
    """
    a = config.node_states[u]
    b = config.node_states[v]
    c = config.edge(u, v)
    match = protocol.lookup(a, b, c)
    if match is None:
        return ChangeRecord(step, u, v, (a, b, c), (a, b, c), None)
    j = 0
    if len(match.outcomes) > 1:
        r = rng.random()
        while j < len(match.outcomes) - 1 and r >= match.cumulative[j]:
            j += 1
    x, y, z = match.outcomes[j]
    if a == b and x != y and rng.random() >= 0.5:
        x, y = y, x
    config.node_states[u] = x
    config.node_states[v] = y
    if z != c:
        config.set_edge(u, v, z)
    return ChangeRecord(step, u, v, (a, b, c), (x, y, z), match.rule)


def run_until(
    config: Configuration,
    protocol: Protocol,
    stop: Callable[[Configuration], bool],
    cap: int,
    rng: np.random.Generator,
    quiescence_window: int | None = None,
    on_change: Callable[[ChangeRecord], None] | None = None,
) -> RunResult:
    """Step until ``stop`` holds, ``cap`` steps elapse, or no edge has changed
    for ``quiescence_window`` steps.

    ``stop`` is evaluated at step 0 and after every effective step. The
    configuration is mutated in place and returned in the result.
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    if stop(config):
        return RunResult(0, STOP_PREDICATE, 0, config)
    n = config.n
    last_edge = 0
    for t in range(1, cap + 1):
        u, v = uniform_pair(n, rng)
        rec = apply_interaction(config, u, v, protocol, rng, t)
        if rec.effective:
            if rec.edge_changed:
                last_edge = t
            if on_change is not None:
                on_change(rec)
            if stop(config):
                return RunResult(t, STOP_PREDICATE, last_edge, config)
        if quiescence_window and t - last_edge >= quiescence_window:
            return RunResult(t, STOP_QUIESCENCE, last_edge, config)
    return RunResult(cap, STOP_CAP, last_edge, config)


def output_graph(config: Configuration, protocol: Protocol) -> Graph:
    """Subgraph induced by nodes in output states, restricted to active edges."""
    keep = [u for u, s in enumerate(config.node_states) if s in protocol.output_states]
    ks = set(keep)
    return Graph(tuple(keep), frozenset(e for e in config.active_edges if e[0] in ks and e[1] in ks))


def simulate_steps(
    config: Configuration, protocol: Protocol, rng: np.random.Generator, steps: int
) -> Iterable[ChangeRecord]:
    """Yield one record per step (effective or not) for ``steps`` steps."""
    for t in range(1, steps + 1):
        u, v = uniform_pair(config.n, rng)
        yield apply_interaction(config, u, v, protocol, rng, t)
