import csv
import io
import math

import pytest

from netcon.catalog import scenario
from netcon.harness import (
    CSV_HEADER,
    ExperimentError,
    SweepTable,
    TrialStats,
    csv_text,
    emit_csv,
    fit_exponent,
    run_trial,
    run_trials,
    sweep,
    thread_count,
)
from netcon.model import STOP_CAP


def _row(n, mean, valid=True):
    return TrialStats("p", "", n, 0, 10**9, [], mean, 1.0, 0.1, 1, 2, 0 if valid else 5, valid)


def test_trials_follow_their_own_streams():
    sc = scenario("global-star")
    stats = run_trials(sc, 10, 8, seed=17)
    for o in stats.outcomes:
        single, _ = run_trial(sc, 10, 17, o.index, sc.cap(10))
        assert single.steps == o.steps
    assert [o.index for o in stats.outcomes] == list(range(8))


def test_threads_give_identical_results():
    sc = scenario("cycle-cover")
    one = run_trials(sc, 20, 40, seed=3, threads=1)
    four = run_trials(sc, 20, 40, seed=3, threads=4)
    assert one.steps == four.steps
    assert (one.mean, one.stddev) == (four.mean, four.stddev)


def test_reference_engine_agrees_with_kernel():
    sc = scenario("simple-global-line")
    fast = run_trials(sc, 8, 10, seed=5)
    ref = run_trials(sc, 8, 10, seed=5, engine="reference")
    assert fast.steps == ref.steps
    with pytest.raises(ValueError):
        run_trials(sc, 8, 1, seed=5, engine="warp")


def test_summary_statistics():
    stats = run_trials(scenario("one-way-epidemic"), 16, 200, seed=1)
    steps = stats.steps
    mean = sum(steps) / len(steps)
    sd = math.sqrt(sum((s - mean) ** 2 for s in steps) / (len(steps) - 1))
    assert stats.mean == pytest.approx(mean)
    assert stats.stddev == pytest.approx(sd)
    assert stats.stderr == pytest.approx(sd / math.sqrt(200))
    assert (stats.min, stats.max) == (min(steps), max(steps))
    assert stats.valid and stats.capped == 0


def test_cap_rule():
    sc = scenario("one-to-one-elimination")
    # find a cap that stops some but not all of 200 trials
    free = run_trials(sc, 12, 200, seed=2)
    ordered = sorted(free.steps)
    cap_one = ordered[-2]  # exactly one trial (the slowest) exceeds it
    few = run_trials(sc, 12, 200, seed=2, cap=cap_one)
    assert few.capped == 1 and few.valid
    assert few.mean == pytest.approx(sum(ordered[:-1]) / 199)
    cap_many = ordered[-3]
    many = run_trials(sc, 12, 200, seed=2, cap=cap_many)
    assert many.capped == 2 and not many.valid
    assert sum(o.reason == STOP_CAP for o in many.outcomes) == 2


def test_all_capped_is_an_error():
    with pytest.raises(ExperimentError):
        run_trials(scenario("simple-global-line"), 10, 5, seed=0, cap=1)


def test_bad_trial_count_and_population():
    with pytest.raises(ExperimentError):
        run_trials(scenario("global-star"), 5, 0, seed=0)
    with pytest.raises(ValueError):
        run_trials(scenario("global-ring"), 2, 5, seed=0)


def test_sweep_needs_two_sizes():
    with pytest.raises(ExperimentError):
        sweep(scenario("global-star"), [8], 5, seed=0)
    table = sweep(scenario("global-star"), [8, 16], 5, seed=0)
    assert [r.n for r in table.rows] == [8, 16]


def test_fit_recovers_exact_power_law():
    rows = [_row(n, 3.0 * n ** 2.5) for n in (8, 16, 32, 64)]
    fit = fit_exponent(SweepTable(rows))
    assert fit.slope == pytest.approx(2.5)
    assert math.exp(fit.intercept) == pytest.approx(3.0)
    assert fit.r2 == pytest.approx(1.0)
    assert (fit.n_min, fit.n_max) == (8, 64)


def test_fit_skips_invalid_rows_and_needs_three():
    rows = [_row(8, 64.0), _row(16, 256.0), _row(32, 1.0, valid=False), _row(64, 4096.0)]
    assert fit_exponent(SweepTable(rows)).slope == pytest.approx(2.0)
    with pytest.raises(ExperimentError):
        fit_exponent(SweepTable(rows[:2]))


def test_csv_layout(tmp_path):
    rows = [_row(8, 1 / 3), _row(16, 2.0, valid=False)]
    text = emit_csv(SweepTable(rows), tmp_path / "out.csv")
    assert (tmp_path / "out.csv").read_text() == text
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == CSV_HEADER
    assert parsed[1][4] == format(1 / 3, ".17g")
    assert float(parsed[1][4]) == 1 / 3
    assert parsed[2][4] == "nan"
    assert parsed[2][9] == "5"


def test_csv_quotes_fields_with_commas():
    row = TrialStats("krc(3)", "a=1,b=2", 8, 0, 1, [], 1.0, 0.0, 0.0, 1, 1, 0, True)
    line = csv_text([row]).splitlines()[1]
    assert line.startswith('krc(3),"a=1,b=2",8,')


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("NETCON_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("NETCON_THREADS", "0")
    assert thread_count() == 1
    monkeypatch.setenv("NETCON_THREADS", "many")
    with pytest.raises(ExperimentError):
        thread_count()
    monkeypatch.delenv("NETCON_THREADS")
    assert thread_count() == 1


def test_target_checked_against_start():
    sc = scenario("leader-replication", input_size=3)
    stats = run_trials(sc, 8, 5, seed=4, check_target=True)
    assert all(o.target_ok for o in stats.outcomes)
