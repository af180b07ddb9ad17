"""Monte-Carlo experiments: repeated trials, sweeps over n, exponent fits, CSV."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .catalog import Scenario
from .engine import initial_configuration, run_until, trial_rng
from .kernel import run_fast
from .model import STOP_CAP, STOP_PREDICATE, Configuration

CSV_HEADER = ["protocol", "params", "n", "trials", "mean_steps", "stddev", "stderr",
              "min", "max", "capped", "seed"]

CAP_TOLERANCE = 0.01


class ExperimentError(RuntimeError):
    pass


@dataclass
class TrialOutcome:
    index: int
    steps: int
    reason: str
    target_ok: bool | None = None


@dataclass
class TrialStats:
    protocol: str
    params: str
    n: int
    seed: int
    cap: int
    outcomes: list[TrialOutcome] = field(repr=False)
    mean: float
    stddev: float
    stderr: float
    min: int
    max: int
    capped: int
    valid: bool

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def steps(self) -> list[int]:
        return [o.steps for o in self.outcomes]


def thread_count() -> int:
    raw = os.environ.get("NETCON_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ExperimentError(f"NETCON_THREADS must be an integer, got {raw!r}") from None


def run_trial(
    sc: Scenario, n: int, seed: int, index: int, cap: int, check_target: bool = False,
    engine: str = "fast",
) -> tuple[TrialOutcome, Configuration]:
    """One trial on the stream derived from ``(seed, index)``."""
    rng = trial_rng(seed, index)
    start = initial_configuration(n, sc.protocol, sc.overrides(n, rng))
    stop = sc.stop(n)
    if engine == "fast":
        res = run_fast(start, sc.protocol, stop, cap, rng)
    elif engine == "reference":
        res = run_until(start.copy(), sc.protocol, stop, cap, rng)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    ok = None
    if check_target and res.reason == STOP_PREDICATE:
        ok = sc.target(res.config, start)
    return TrialOutcome(index, res.steps, res.reason, ok), res.config


def _summarise(sc: Scenario, n: int, seed: int, cap: int, outcomes: list[TrialOutcome]) -> TrialStats:
    capped = sum(o.reason == STOP_CAP for o in outcomes)
    if capped == len(outcomes):
        raise ExperimentError(f"{sc.protocol.name} n={n}: every trial hit the cap {cap}")
    good = np.array([o.steps for o in outcomes if o.reason != STOP_CAP], dtype=np.float64)
    valid = capped < CAP_TOLERANCE * len(outcomes)
    k = len(good)
    mean = float(good.mean())
    sd = float(good.std(ddof=1)) if k > 1 else 0.0
    return TrialStats(sc.protocol.name, sc.label, n, seed, cap, outcomes, mean, sd,
                      sd / math.sqrt(k), int(good.min()), int(good.max()), capped, valid)


def run_trials(
    sc: Scenario, n: int, trials: int, seed: int, cap: int | None = None,
    check_target: bool = False, threads: int | None = None, engine: str = "fast",
) -> TrialStats:
    """Run independent trials until the stop predicate or the cap.

    Capped trials are left out of the mean; if they make up 1% of the trials
    or more the statistic is flagged invalid.
    """
    if trials <= 0:
        raise ExperimentError("trials must be positive")
    sc.check_n(n)
    cap = sc.cap(n) if cap is None else cap
    threads = thread_count() if threads is None else threads

    def one(i: int) -> TrialOutcome:
        return run_trial(sc, n, seed, i, cap, check_target, engine)[0]

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(one, range(trials)))
    else:
        outcomes = [one(i) for i in range(trials)]
    return _summarise(sc, n, seed, cap, outcomes)


@dataclass
class SweepTable:
    rows: list[TrialStats]


def sweep(
    sc: Scenario, ns: Sequence[int], trials: int, seed: int, cap_factor: float = 1.0,
    threads: int | None = None,
) -> SweepTable:
    if len(ns) < 2:
        raise ExperimentError("a sweep needs at least two population sizes")
    rows = []
    for n in ns:
        cap = max(1, int(sc.cap(n) * cap_factor))
        rows.append(run_trials(sc, n, trials, seed, cap, threads=threads))
    return SweepTable(rows)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    n_min: int
    n_max: int


def fit_exponent(table: SweepTable) -> ExponentFit:
    """Least-squares line through (ln n, ln mean steps)."""
    rows = [r for r in table.rows if r.valid]
    if len(rows) < 3:
        raise ExperimentError("need at least three valid rows to fit an exponent")
    x = np.log([r.n for r in rows])
    y = np.log([r.mean for r in rows])
    fit = stats.linregress(x, y)
    return ExponentFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2),
                       min(r.n for r in rows), max(r.n for r in rows))


def _num(x: float) -> str:
    return format(x, ".17g")


def csv_text(rows: Sequence[TrialStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        mean = _num(r.mean) if r.valid else "nan"
        w.writerow([r.protocol, r.params, r.n, r.trials, mean, _num(r.stddev), _num(r.stderr),
                    r.min, r.max, r.capped, r.seed])
    return buf.getvalue()


def emit_csv(rows: SweepTable | Sequence[TrialStats], path: str | Path | None = None) -> str:
    rows = rows.rows if isinstance(rows, SweepTable) else list(rows)
    text = csv_text(rows)
    if path is not None:
        Path(path).write_text(text)
    return text
