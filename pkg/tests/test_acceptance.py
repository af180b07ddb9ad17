"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also collected in the terminal summary.
"""

import math
import time

import pytest

from netcon.catalog import builtin, catalog_names, default_instances, scenario
from netcon.dsl import parse_protocol, serialize_protocol
from netcon.graphs import Graph
from netcon.harness import fit_exponent, run_trial, run_trials, sweep
from netcon.model import STOP_PREDICATE
from netcon.oracle import enumerate_reachable, expected_hitting_time, verify_stabilization
from netcon.stability import observer

MASTER_SEED = 2024


def _verify_exact(sc, n):
    chain = enumerate_reachable(sc.protocol, n, sc.overrides(n, None))
    start = chain.configuration(0)
    return verify_stabilization(chain, lambda c: sc.target(c, start), observer(sc.protocol))


def test_criterion_1_exact_oracle_stabilization(criterion):
    t0 = time.perf_counter()
    failures, checked = [], []
    for name in ["simple-global-line", "intermediate-global-line", "fast-global-line",
                 "cycle-cover", "global-star", "2rc"]:
        sc = scenario(name)
        for n in (2, 3, 4):
            if n < sc.min_n:
                continue
            verdict = _verify_exact(sc, n)
            checked.append(f"{name}@{n}")
            if not verdict.passed:
                failures.append(f"{name}@{n}: {verdict.reason}")
    sc = scenario("leader-replication", input_graph=Graph.from_edges([0, 1], [(0, 1)]))
    verdict = _verify_exact(sc, 4)
    checked.append("leader-replication@4")
    if not verdict.passed:
        failures.append(f"leader-replication@4: {verdict.reason}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120
    detail = f"{len(checked)} chains verified in {elapsed:.1f}s" + (
        f"; failures: {failures}" if failures else "")
    assert criterion(1, "exact-oracle stabilization", ok, detail)


def _epidemic_formula(n: int) -> float:
    # sum over epochs of the expected wait n(n-1) / (2 i (n-i))
    return sum(n * (n - 1) / (2 * i * (n - i)) for i in range(1, n))


ORACLE_CASES = [
    ("simple-global-line", 2, 1.0),
    ("one-way-epidemic", 3, 3.0),
    ("one-to-one-elimination", 3, 4.0),
    ("one-way-epidemic", 4, _epidemic_formula(4)),
]


def _oracle_time(name: str, n: int) -> float:
    sc = scenario(name)
    chain = enumerate_reachable(sc.protocol, n, sc.overrides(n, None))
    return expected_hitting_time(chain, sc.stop(n))


def test_criterion_2_oracle_values(criterion):
    rows, ok = [], True
    for name, n, want in ORACLE_CASES[:3]:
        got = _oracle_time(name, n)
        ok &= abs(got - want) <= 1e-9
        rows.append(f"{name}@{n}={got:.12g} (want {want})")
    for n in (3, 4):
        got = _oracle_time("one-way-epidemic", n)
        want = _epidemic_formula(n)
        ok &= abs(got - want) <= 1e-9
        rows.append(f"epidemic formula@{n}: {got:.12g} vs {want:.12g}")
    assert criterion(2, "oracle hitting times", ok, "; ".join(rows))


def test_criterion_3_monte_carlo_matches_oracle(criterion):
    t0 = time.perf_counter()
    rows, ok = [], True
    for name, n, _ in ORACLE_CASES:
        exact = _oracle_time(name, n)
        stats = run_trials(scenario(name), n, 10_000, MASTER_SEED)
        dev = abs(stats.mean - exact)
        good = stats.valid and dev <= 3 * stats.stderr
        ok &= good
        rows.append(f"{name}@{n}: mean {stats.mean:.4f} oracle {exact:.4f} "
                    f"|d|/se {dev / stats.stderr if stats.stderr else 0.0:.2f}")
    rows.append(f"{time.perf_counter() - t0:.1f}s")
    assert criterion(3, "Monte-Carlo agrees with oracle", ok, "; ".join(rows))


def _slope_check(name, ns, trials, lo, hi):
    table = sweep(scenario(name), ns, trials, MASTER_SEED)
    fit = fit_exponent(table)
    all_valid = all(r.valid for r in table.rows)
    return lo <= fit.slope <= hi and all_valid, f"{name} slope {fit.slope:.3f} in [{lo}, {hi}]"


@pytest.mark.slow
def test_criterion_4_elementary_exponents(criterion):
    t0 = time.perf_counter()
    wide = [64, 128, 256, 512]
    narrow = [32, 64, 128, 256]
    cases = [
        ("one-way-epidemic", wide, 1.00, 1.25),
        ("one-to-one-elimination", wide, 1.85, 2.15),
        ("one-to-all-elimination", wide, 1.00, 1.25),
        ("meet-everybody", narrow, 2.00, 2.35),
        ("node-cover", wide, 1.00, 1.25),
        ("edge-cover", narrow, 2.00, 2.35),
    ]
    results = [_slope_check(name, ns, 1000, lo, hi) for name, ns, lo, hi in cases]
    elapsed = time.perf_counter() - t0
    ok = all(r[0] for r in results) and elapsed < 600
    detail = "; ".join(r[1] for r in results) + f"; {elapsed:.0f}s"
    assert criterion(4, "elementary-protocol exponents", ok, detail)


@pytest.mark.slow
def test_criterion_5_constructor_exponents(criterion):
    cases = [
        ("cycle-cover", [32, 64, 128, 256], 1000, 1.85, 2.15),
        ("global-star", [32, 64, 128, 256], 1000, 2.00, 2.35),
        ("fast-global-line", [16, 32, 64, 128], 100, 2.7, 3.3),
        ("simple-global-line", [8, 16, 32, 64], 50, 3.6, 5.2),
    ]
    results = [_slope_check(name, ns, trials, lo, hi) for name, ns, trials, lo, hi in cases]
    ok = all(r[0] for r in results)
    assert criterion(5, "constructor exponents", ok, "; ".join(r[1] for r in results))


@pytest.mark.slow
def test_criterion_6_line_protocol_ordering(criterion):
    n, trials = 32, 500
    stats = {name: run_trials(scenario(name), n, trials, MASTER_SEED)
             for name in ("fast-global-line", "intermediate-global-line", "simple-global-line")}

    def separated(lower, higher):
        a, b = stats[lower], stats[higher]
        return b.mean - a.mean > 3 * math.hypot(a.stderr, b.stderr)

    ok = (all(s.valid for s in stats.values())
          and separated("fast-global-line", "intermediate-global-line")
          and separated("intermediate-global-line", "simple-global-line"))
    detail = "; ".join(f"{name} {s.mean:.0f}±{s.stderr:.0f}" for name, s in stats.items())
    assert criterion(6, "fast < intermediate < simple at n=32", ok, detail)


@pytest.mark.slow
def test_criterion_7_correctness_sweeps(criterion):
    cases = [("cycle-cover", {}), ("global-star", {}), ("global-ring", {}), ("2rc", {}),
             ("krc", {"k": 3}), ("c-cliques", {"c": 3}), ("power-degree", {"d": 2}),
             ("maximum-matching", {})]
    runs = [(scenario(name, params), n) for name, params in cases for n in (16, 33, 64)]
    runs.append((scenario("leader-replication", input_size=6), 16))
    failures = []
    for sc, n in runs:
        # one miss already decides the sweep, so stop at the first one
        for i in range(50):
            outcome, _ = run_trial(sc, n, MASTER_SEED, i, sc.cap(n), check_target=True)
            if outcome.reason != STOP_PREDICATE or not outcome.target_ok:
                failures.append(f"{sc.protocol.name}@{n}: trial {i} {outcome.reason}")
                break
    ok = not failures
    detail = f"{len(runs)} sweeps of 50 trials" + (f"; {failures}" if failures else ", all 100%")
    assert criterion(7, "verify sweeps reach the target", ok, detail)


STATE_COUNTS = {
    "simple-global-line": 5, "intermediate-global-line": 8, "fast-global-line": 9,
    "cycle-cover": 3, "global-star": 2, "global-ring": 9, "2rc": 6,
    "leader-replication": 12,
}


def test_criterion_8_dsl_round_trip_and_state_counts(criterion):
    protocols = [sc.protocol for sc in default_instances()]
    protocols += [builtin("krc", {"k": k}) for k in (2, 4, 5)]
    protocols += [builtin("c-cliques", {"c": c}) for c in (2, 4, 5)]
    protocols += [builtin("power-degree", {"d": d}) for d in (1, 3)]
    trips = [p for p in protocols if parse_protocol(serialize_protocol(p)) != p]
    counts = {name: len(builtin(name).states) for name in STATE_COUNTS}
    counts.update({f"krc({k})": len(builtin("krc", {"k": k}).states) for k in range(2, 7)})
    counts.update({f"c-cliques({c})": len(builtin("c-cliques", {"c": c}).states)
                   for c in range(2, 7)})
    want = dict(STATE_COUNTS)
    want.update({f"krc({k})": 2 * (k + 1) for k in range(2, 7)})
    want.update({f"c-cliques({c})": 5 * c - 3 for c in range(2, 7)})
    wrong = {k: (counts[k], want[k]) for k in want if counts[k] != want[k]}
    covered = {p.name.split("(")[0] for p in protocols}
    ok = not trips and not wrong and covered >= set(catalog_names())
    detail = (f"{len(protocols)} protocols round-trip"
              + (f"; round-trip failures {[p.name for p in trips]}" if trips else "")
              + (f"; state counts off {wrong}" if wrong else "; all state counts match"))
    assert criterion(8, "DSL round trip and state counts", ok, detail)
