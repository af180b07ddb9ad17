"""Compiled stepping loop for Monte-Carlo runs.

The loop draws from the same ``numpy.random.Generator`` object as the reference
engine, in the same order, so for equal seeds both produce the same trajectory.
Stop predicates are split in two: a cheap linear filter over state counts and
the active-edge count, evaluated inside the loop after each effective step, and
the full Python check, evaluated only when the filter passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numba
import numpy as np

from .model import (
    STOP_CAP,
    STOP_PREDICATE,
    STOP_QUIESCENCE,
    Configuration,
    Protocol,
    RunResult,
)

OPS = {"==": 0, "<=": 1, ">=": 2}


@dataclass(frozen=True)
class Constraint:
    """``sum(coef[s] * count[s]) + edge_coef * active_edges  op  rhs``."""

    coef: tuple[tuple[str, int], ...]
    op: str
    rhs: int
    edge_coef: int = 0


def count_eq(states, rhs: int) -> Constraint:
    return Constraint(tuple((s, 1) for s in _names(states)), "==", rhs)


def count_le(states, rhs: int) -> Constraint:
    return Constraint(tuple((s, 1) for s in _names(states)), "<=", rhs)


def edges_eq(rhs: int) -> Constraint:
    return Constraint((), "==", rhs, 1)


def _names(states) -> tuple[str, ...]:
    return (states,) if isinstance(states, str) else tuple(states)


@dataclass(frozen=True)
class CountFilter:
    constraints: tuple[Constraint, ...]

    def compile(self, protocol: Protocol) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        k, q = len(self.constraints), protocol.num_states
        coef = np.zeros((k, q), dtype=np.int64)
        edge = np.zeros(k, dtype=np.int64)
        op = np.zeros(k, dtype=np.int64)
        rhs = np.zeros(k, dtype=np.int64)
        for i, con in enumerate(self.constraints):
            for name, w in con.coef:
                coef[i, protocol.index(name)] += w
            edge[i] = con.edge_coef
            op[i] = OPS[con.op]
            rhs[i] = con.rhs
        return coef, edge, op, rhs

    def holds(self, config: Configuration, protocol: Protocol) -> bool:
        coef, edge, op, rhs = _compiled(self, protocol)
        return bool(_filter_ok(config.counts(protocol.num_states), len(config.active_edges),
                               coef, edge, op, rhs))


@lru_cache(maxsize=256)
def _compiled(filt: CountFilter, protocol: Protocol):
    return filt.compile(protocol)


@dataclass(frozen=True)
class StopCondition:
    """A configuration predicate with an optional necessary-condition filter."""

    check: Callable[[Configuration], bool]
    prefilter: CountFilter | None = None
    protocol: Protocol | None = None

    def __call__(self, config: Configuration) -> bool:
        if self.prefilter is not None and not self.prefilter.holds(config, self.protocol):
            return False
        return bool(self.check(config))


@numba.njit(cache=True)
def _filter_ok(counts, n_edges, coef, edge, op, rhs):
    for i in range(coef.shape[0]):
        acc = edge[i] * n_edges
        for s in range(coef.shape[1]):
            acc += coef[i, s] * counts[s]
        o = op[i]
        if o == 0:
            if acc != rhs[i]:
                return False
        elif o == 1:
            if acc > rhs[i]:
                return False
        elif acc < rhs[i]:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _advance(states, adj, counts, nbranch, cum, out_a, out_b, out_c, q,
             coef, edge, op, rhs, n_edges, last_edge, t, cap, window, rng):
    """Step until the filter passes after an effective step (status 1), the
    quiescence window elapses (status 2) or the cap is reached (status 0)."""
    n = states.shape[0]
    total = n * (n - 1)
    nm1 = n - 1
    while t < cap:
        t += 1
        k = int(rng.random() * total)
        if k >= total:
            k = total - 1
        u = k // nm1
        v = k - u * nm1
        if v >= u:
            v += 1
        if u > v:
            u, v = v, u
        a = states[u]
        b = states[v]
        c = adj[u, v]
        idx = (a * q + b) * 2 + c
        nb = nbranch[idx]
        if nb > 0:
            j = 0
            if nb > 1:
                r = rng.random()
                while j < nb - 1 and r >= cum[idx, j]:
                    j += 1
            x = out_a[idx, j]
            y = out_b[idx, j]
            z = out_c[idx, j]
            if a == b and x != y:
                if rng.random() >= 0.5:
                    x, y = y, x
            if x != a or y != b or z != c:
                states[u] = x
                states[v] = y
                counts[a] -= 1
                counts[b] -= 1
                counts[x] += 1
                counts[y] += 1
                if z != c:
                    adj[u, v] = z
                    adj[v, u] = z
                    n_edges += 1 if z == 1 else -1
                    last_edge = t
                if _filter_ok(counts, n_edges, coef, edge, op, rhs):
                    return t, 1, n_edges, last_edge
        if window > 0 and t - last_edge >= window:
            return t, 2, n_edges, last_edge
    return t, 0, n_edges, last_edge


@numba.njit(cache=True, nogil=True)
def any_pair_enabled(states, adj, table):
    """True if some pair (u, v) has ``table[states[u], states[v], adj[u, v]]`` set."""
    n = states.shape[0]
    for u in range(n):
        a = states[u]
        for v in range(u + 1, n):
            if table[a, states[v], adj[u, v]]:
                return True
    return False


@lru_cache(maxsize=256)
def _tables(protocol: Protocol):
    q = protocol.num_states
    width = max([len(m.outcomes) for m in protocol.resolved if m is not None] or [1])
    size = q * q * 2
    nbranch = np.zeros(size, dtype=np.int64)
    cum = np.ones((size, width), dtype=np.float64)
    out_a = np.zeros((size, width), dtype=np.int64)
    out_b = np.zeros((size, width), dtype=np.int64)
    out_c = np.zeros((size, width), dtype=np.int64)
    for idx, m in enumerate(protocol.resolved):
        if m is None:
            continue
        nbranch[idx] = len(m.outcomes)
        for j, (x, y, z) in enumerate(m.outcomes):
            out_a[idx, j], out_b[idx, j], out_c[idx, j] = x, y, z
            cum[idx, j] = m.cumulative[j]
    return nbranch, cum, out_a, out_b, out_c


def _no_filter(q: int):
    return (np.zeros((0, q), dtype=np.int64), np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))


def run_fast(
    config: Configuration,
    protocol: Protocol,
    stop: StopCondition | Callable[[Configuration], bool],
    cap: int,
    rng: np.random.Generator,
    quiescence_window: int | None = None,
) -> RunResult:
    """Same contract and same trajectory as ``engine.run_until``, compiled.

    The returned configuration is a fresh object; ``config`` is not mutated.
    """
    if cap < 0:
        raise ValueError("cap must be non-negative")
    if stop(config):
        return RunResult(0, STOP_PREDICATE, 0, config.copy())
    q = protocol.num_states
    prefilter = getattr(stop, "prefilter", None)
    check = stop.check if isinstance(stop, StopCondition) else stop
    filt = _compiled(prefilter, protocol) if prefilter is not None else _no_filter(q)
    states = np.asarray(config.node_states, dtype=np.int64).copy()
    adj = config.adjacency()
    counts = np.bincount(states, minlength=q).astype(np.int64)
    n_edges = len(config.active_edges)
    last_edge, t = 0, 0
    window = int(quiescence_window or 0)
    tables = _tables(protocol)
    while True:
        t, status, n_edges, last_edge = _advance(
            states, adj, counts, *tables, q, *filt, n_edges, last_edge, t, cap, window, rng)
        if status == 1:
            current = Configuration.from_arrays(states, adj)
            if check(current):
                return RunResult(t, STOP_PREDICATE, last_edge, current)
            if window > 0 and t - last_edge >= window:
                return RunResult(t, STOP_QUIESCENCE, last_edge, current)
            continue
        current = Configuration.from_arrays(states, adj)
        if status == 2:
            return RunResult(t, STOP_QUIESCENCE, last_edge, current)
        return RunResult(t, STOP_CAP, last_edge, current)
