"""Core value types: protocols, rules, configurations and run records."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

Pattern = tuple[int, int, int]
Outcome = tuple[int, int, int]


class ProtocolError(ValueError):
    """Raised when a protocol definition is structurally invalid."""


@dataclass(frozen=True)
class Branch:
    weight: Fraction
    outcome: Outcome


@dataclass(frozen=True)
class Rule:
    """One transition: pattern (a, b, c) with one or more weighted outcomes."""

    pattern: Pattern
    branches: tuple[Branch, ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ProtocolError(f"rule {self.pattern} has no outcome")
        total = sum((br.weight for br in self.branches), Fraction(0))
        if total != 1:
            raise ProtocolError(f"rule {self.pattern} weights sum to {total}, not 1")
        for br in self.branches:
            if br.weight <= 0:
                raise ProtocolError(f"rule {self.pattern} has a non-positive weight")
            if br.outcome[2] not in (0, 1):
                raise ProtocolError(f"rule {self.pattern} has edge outcome {br.outcome[2]}")
        if self.pattern[2] not in (0, 1):
            raise ProtocolError(f"rule pattern {self.pattern} has edge state outside {{0,1}}")

    @classmethod
    def deterministic(cls, pattern: Pattern, outcome: Outcome) -> "Rule":
        return cls(tuple(pattern), (Branch(Fraction(1), tuple(outcome)),))

    @property
    def is_probabilistic(self) -> bool:
        return len(self.branches) > 1

    @property
    def effective(self) -> bool:
        return any(br.outcome != self.pattern for br in self.branches)

    @property
    def modifies_edge(self) -> bool:
        return any(br.outcome[2] != self.pattern[2] for br in self.branches)


@dataclass(frozen=True)
class RuleMatch:
    """A rule resolved for an ordered query (a, b, c).

    ``outcomes`` are re-oriented so that the first entry is the new state of the
    node that held ``a`` in the query. ``cumulative`` holds float cumulative
    weights used for branch sampling.
    """

    rule: Rule
    swapped: bool
    outcomes: tuple[Outcome, ...]
    cumulative: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Protocol:
    """A network constructor: states, initial state, output states, transitions.

    States are referred to by integer index; ``states`` holds display names.
    Equality is structural over name, states, initial, outputs and rules;
    ``params`` and ``stability_checker`` are catalog metadata.
    """

    name: str
    states: tuple[str, ...]
    initial: int
    output_states: frozenset[int]
    rules: Mapping[Pattern, Rule]
    params: Mapping[str, int] = field(default_factory=dict)
    stability_checker: str = "quiescence-heuristic"

    def __post_init__(self) -> None:
        if len(set(self.states)) != len(self.states):
            raise ProtocolError("duplicate state names")
        q = len(self.states)
        if not 0 <= self.initial < q:
            raise ProtocolError("initial state out of range")
        if not self.output_states <= frozenset(range(q)):
            raise ProtocolError("output state out of range")
        rules = dict(self.rules)
        for pat, rule in rules.items():
            if pat != rule.pattern:
                raise ProtocolError(f"rule keyed by {pat} has pattern {rule.pattern}")
            for x in (*pat[:2], *(s for br in rule.branches for s in br.outcome[:2])):
                if not 0 <= x < q:
                    raise ProtocolError(f"rule {pat} references unknown state {x}")
            a, b, c = pat
            if a != b and (b, a, c) in rules:
                raise ProtocolError(
                    f"both orientations ({self.states[a]},{self.states[b]},{c}) and "
                    f"({self.states[b]},{self.states[a]},{c}) are defined"
                )
        object.__setattr__(self, "rules", MappingProxyType(rules))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def _key(self):
        return (self.name, self.states, self.initial, self.output_states, dict(self.rules))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Protocol):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash((self.name, self.states, self.initial))

    @property
    def num_states(self) -> int:
        return len(self.states)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ProtocolError(f"unknown state {name!r} in protocol {self.name}") from None

    @cached_property
    def _index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def resolved(self) -> tuple[RuleMatch | None, ...]:
        """Flat table indexed by ``(a * Q + b) * 2 + c``."""
        q = self.num_states
        table: list[RuleMatch | None] = [None] * (q * q * 2)
        for (a, b, c), rule in self.rules.items():
            cum, acc = [], Fraction(0)
            for br in rule.branches:
                acc += br.weight
                cum.append(float(acc))
            direct = tuple(br.outcome for br in rule.branches)
            table[(a * q + b) * 2 + c] = RuleMatch(rule, False, direct, tuple(cum))
            if a != b:
                flipped = tuple((y, x, e) for x, y, e in direct)
                table[(b * q + a) * 2 + c] = RuleMatch(rule, True, flipped, tuple(cum))
        return tuple(table)

    def lookup(self, a: int, b: int, c: int) -> RuleMatch | None:
        return self.resolved[(a * self.num_states + b) * 2 + c]

    @cached_property
    def effect_table(self) -> np.ndarray:
        """Boolean array ``[a, b, c]``: some branch changes the interacting pair."""
        q = self.num_states
        out = np.zeros((q, q, 2), dtype=bool)
        for a in range(q):
            for b in range(q):
                for c in (0, 1):
                    m = self.lookup(a, b, c)
                    if m is None:
                        continue
                    out[a, b, c] = any(o != (a, b, c) for o in m.outcomes)
        return out

    @cached_property
    def edge_effect_table(self) -> np.ndarray:
        """Boolean array ``[a, b, c]``: some branch flips the edge."""
        q = self.num_states
        out = np.zeros((q, q, 2), dtype=bool)
        for a in range(q):
            for b in range(q):
                for c in (0, 1):
                    m = self.lookup(a, b, c)
                    if m is not None:
                        out[a, b, c] = any(o[2] != c for o in m.outcomes)
        return out

    def state_set(self, names: Iterable[str]) -> frozenset[int]:
        return frozenset(self.index(s) for s in names)


@dataclass
class Configuration:
    """Node states plus the set of active edges ``(u, v)`` with ``u < v``."""

    n: int
    node_states: list[int]
    active_edges: set[tuple[int, int]]
    _adj: np.ndarray | None = field(default=None, repr=False, compare=False)

    def edge(self, u: int, v: int) -> int:
        return int((u, v) in self.active_edges if u < v else (v, u) in self.active_edges)

    def set_edge(self, u: int, v: int, value: int) -> None:
        key = (u, v) if u < v else (v, u)
        self._adj = None
        if value:
            self.active_edges.add(key)
        else:
            self.active_edges.discard(key)

    def copy(self) -> "Configuration":
        return Configuration(self.n, list(self.node_states), set(self.active_edges))

    def counts(self, num_states: int) -> np.ndarray:
        return np.bincount(np.asarray(self.node_states, dtype=np.int64), minlength=num_states)

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 matrix of active edges (a fresh copy)."""
        if self._adj is not None:
            return self._adj.copy()
        adj = np.zeros((self.n, self.n), dtype=np.uint8)
        if self.active_edges:
            e = np.array(list(self.active_edges), dtype=np.int64)
            adj[e[:, 0], e[:, 1]] = 1
            adj[e[:, 1], e[:, 0]] = 1
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.active_edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def key(self) -> tuple[tuple[int, ...], frozenset[tuple[int, int]]]:
        return tuple(self.node_states), frozenset(self.active_edges)

    @classmethod
    def from_arrays(cls, states: np.ndarray, adj: np.ndarray) -> "Configuration":
        us, vs = np.nonzero(np.triu(adj, 1))
        return cls(len(states), states.tolist(), set(zip(us.tolist(), vs.tolist())),
                   adj.copy())


@dataclass(frozen=True)
class ChangeRecord:
    step: int
    u: int
    v: int
    before: Outcome
    after: Outcome
    rule: Rule | None

    @property
    def effective(self) -> bool:
        return self.before != self.after

    @property
    def edge_changed(self) -> bool:
        return self.before[2] != self.after[2]

    def format(self, protocol: Protocol) -> str:
        s = protocol.states
        a, b, c = self.before
        x, y, z = self.after
        return f"{self.step} {self.u} {self.v} ({s[a]},{s[b]},{c})->({s[x]},{s[y]},{z})"


STOP_PREDICATE = "predicate-satisfied"
STOP_CAP = "step-cap"
STOP_QUIESCENCE = "quiescence-window"


@dataclass(frozen=True)
class RunResult:
    steps: int
    reason: str
    last_edge_change: int
    config: Configuration
