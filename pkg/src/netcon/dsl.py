"""Text format for protocols: parsing, canonical serialization, validation.

Format::

    protocol <name>
    states: q0 q1 l
    initial: q0
    output: q1 l            # optional, defaults to all states
    rules:
    (q0,q0,0) -> (q1,l,1)
    (l,q1,1) -> 1/2: (l,q1,0) | 1/2: (q1,l,1)

``#`` starts a comment. Tokens are any run of characters other than
whitespace and ``( ) , : | #``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .model import Branch, Protocol, ProtocolError, Rule


class ProtocolSyntaxError(ProtocolError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


_TOKEN = r"[^\s(),:|#]+"
_TRIPLE = rf"\(\s*({_TOKEN})\s*,\s*({_TOKEN})\s*,\s*([01])\s*\)"
_RULE_RE = re.compile(rf"^{_TRIPLE}\s*->\s*(.+)$")
_TRIPLE_RE = re.compile(rf"^{_TRIPLE}$")
_BRANCH_RE = re.compile(rf"^(\d+(?:/\d+)?)\s*:\s*({_TRIPLE})$")
_HEADER_RE = re.compile(r"^(protocol|states|initial|output|rules)\b\s*:?\s*(.*)$")


@dataclass(frozen=True)
class ProtocolSource:
    """A parsed protocol together with the text it came from."""

    text: str
    protocol: Protocol
    origin: str = "<string>"


def parse_protocol(text: str) -> Protocol:
    name = None
    states: list[str] | None = None
    initial = None
    output: list[str] | None = None
    raw_rules: list[tuple[int, str, str, int, str]] = []
    in_rules = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("("):
            if not in_rules:
                raise ProtocolSyntaxError(lineno, "rule before 'rules:' section")
            m = _RULE_RE.match(line)
            if not m:
                raise ProtocolSyntaxError(lineno, f"malformed rule: {line}")
            raw_rules.append((lineno, m.group(1), m.group(2), int(m.group(3)), m.group(4)))
            continue
        m = _HEADER_RE.match(line)
        if not m:
            raise ProtocolSyntaxError(lineno, f"unrecognised line: {line}")
        key, rest = m.group(1), m.group(2).strip()
        if key == "protocol":
            if not rest or len(rest.split()) != 1:
                raise ProtocolSyntaxError(lineno, "protocol name must be a single token")
            name = rest
        elif key == "states":
            states = rest.split()
            if not states:
                raise ProtocolSyntaxError(lineno, "empty state list")
            for s in states:
                if not re.fullmatch(_TOKEN, s):
                    raise ProtocolSyntaxError(lineno, f"bad state token {s!r}")
            if len(set(states)) != len(states):
                raise ProtocolSyntaxError(lineno, "duplicate state name")
        elif key == "initial":
            if len(rest.split()) != 1:
                raise ProtocolSyntaxError(lineno, "initial takes exactly one state")
            initial = (lineno, rest)
        elif key == "output":
            output = rest.split()
            output_line = lineno
        else:
            if rest:
                raise ProtocolSyntaxError(lineno, "unexpected text after 'rules:'")
            in_rules = True
    if name is None:
        raise ProtocolSyntaxError(1, "missing 'protocol <name>' line")
    if states is None:
        raise ProtocolSyntaxError(1, "missing 'states:' line")
    if initial is None:
        raise ProtocolSyntaxError(1, "missing 'initial:' line")
    index = {s: i for i, s in enumerate(states)}

    def state(lineno: int, tok: str) -> int:
        if tok not in index:
            raise ProtocolSyntaxError(lineno, f"unknown state {tok!r}")
        return index[tok]

    init = state(*initial)
    outs = frozenset(range(len(states))) if output is None else frozenset(
        state(output_line, s) for s in output)
    rules: dict[tuple[int, int, int], Rule] = {}
    for lineno, a_tok, b_tok, c, rhs in raw_rules:
        pat = (state(lineno, a_tok), state(lineno, b_tok), c)
        branches = []
        parts = [p.strip() for p in rhs.split("|")]
        for part in parts:
            m = _TRIPLE_RE.match(part)
            if m and len(parts) == 1:
                weight = Fraction(1)
            else:
                m2 = _BRANCH_RE.match(part)
                if not m2:
                    raise ProtocolSyntaxError(lineno, f"malformed outcome: {part}")
                weight = Fraction(m2.group(1))
                m = _TRIPLE_RE.match(m2.group(2))
            out = (state(lineno, m.group(1)), state(lineno, m.group(2)), int(m.group(3)))
            branches.append(Branch(weight, out))
        if pat in rules:
            raise ProtocolSyntaxError(lineno, f"duplicate rule for ({a_tok},{b_tok},{c})")
        if pat[0] != pat[1] and (pat[1], pat[0], c) in rules:
            raise ProtocolSyntaxError(
                lineno, f"({a_tok},{b_tok},{c}) and ({b_tok},{a_tok},{c}) both defined")
        try:
            rules[pat] = Rule(pat, tuple(branches))
        except ProtocolError as exc:
            raise ProtocolSyntaxError(lineno, str(exc)) from None
    return Protocol(name, tuple(states), init, outs, rules)


def load_protocol_file(path: str | Path) -> ProtocolSource:
    text = Path(path).read_text()
    return ProtocolSource(text, parse_protocol(text), str(path))


def _triple(p: Protocol, t) -> str:
    return f"({p.states[t[0]]},{p.states[t[1]]},{t[2]})"


def serialize_protocol(p: Protocol) -> str:
    """Canonical text: states in declaration order, rules sorted by pattern."""
    lines = [f"protocol {p.name}", "states: " + " ".join(p.states),
             f"initial: {p.states[p.initial]}"]
    if p.output_states != frozenset(range(p.num_states)):
        lines.append("output: " + " ".join(p.states[i] for i in sorted(p.output_states)))
    lines.append("rules:")
    for pat in sorted(p.rules):
        rule = p.rules[pat]
        if rule.is_probabilistic:
            rhs = " | ".join(f"{br.weight}: {_triple(p, br.outcome)}" for br in rule.branches)
        else:
            rhs = _triple(p, rule.branches[0].outcome)
        lines.append(f"{_triple(p, pat)} -> {rhs}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationReport:
    state_count: int
    rule_count: int
    effective_rule_count: int
    reachable_states: frozenset[str]
    warnings: tuple[str, ...] = field(default=())


def reachable_states(p: Protocol, seeds: frozenset[int] | None = None) -> frozenset[int]:
    """States producible from ``seeds`` by some rule firing (edge states ignored)."""
    have = set(seeds if seeds is not None else {p.initial})
    changed = True
    while changed:
        changed = False
        for (a, b, _), rule in p.rules.items():
            if a in have and b in have:
                for br in rule.branches:
                    for s in br.outcome[:2]:
                        if s not in have:
                            have.add(s)
                            changed = True
    return frozenset(have)


def validate_protocol(p: Protocol, seeds: frozenset[int] | None = None) -> ValidationReport:
    """Report state/rule counts and warn about unreachable states and dead rules.

    ``seeds`` adds states that appear in the start configuration beyond the
    initial state, for protocols started from a non-uniform configuration.
    """
    seeds = frozenset({p.initial}) | (seeds or frozenset())
    reach = reachable_states(p, seeds)
    warnings = []
    for i, s in enumerate(p.states):
        if i not in reach:
            warnings.append(f"state {s} is unreachable")
    for pat, rule in sorted(p.rules.items()):
        if pat[0] not in reach or pat[1] not in reach:
            warnings.append(f"rule {_triple(p, pat)} can never fire")
        elif not rule.effective:
            warnings.append(f"rule {_triple(p, pat)} never changes anything")
    return ValidationReport(
        state_count=p.num_states,
        rule_count=len(p.rules),
        effective_rule_count=sum(r.effective for r in p.rules.values()),
        reachable_states=frozenset(p.states[i] for i in reach),
        warnings=tuple(warnings),
    )
