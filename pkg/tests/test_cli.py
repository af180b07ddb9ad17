import csv
import io

import pytest

from netcon.catalog import builtin
from netcon.cli import main, read_config, UsageError
from netcon.dsl import serialize_protocol


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_run_reports_steps_and_target():
    code, text = run("run", "-p", "global-star", "-n", "6", "--seed", "3")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("steps ")
    assert "reason predicate-satisfied" in lines
    assert "target satisfied" in lines


def test_run_usage_errors():
    assert run("run", "-p", "no-such-protocol", "-n", "5")[0] == 2
    assert run("run", "-p", "global-star")[0] == 2
    assert run("run", "-n", "5")[0] == 2
    assert run("run", "-p", "global-ring", "-n", "2")[0] == 2
    assert run("run", "-p", "krc", "-n", "6")[0] == 2
    assert run("run", "-p", "krc", "--param", "k", "-n", "6")[0] == 2
    assert run("bogus")[0] == 2


def test_run_hitting_cap_exits_one():
    code, text = run("run", "-p", "simple-global-line", "-n", "8", "--cap", "1")
    assert code == 1
    assert "reason step-cap" in text.splitlines()


def test_trace_file_matches_step_count(tmp_path):
    trace = tmp_path / "trace.txt"
    code, text = run("run", "-p", "global-star", "-n", "5", "--seed", "2", "--trace", str(trace))
    assert code == 0
    steps = int(text.split()[1])
    lines = trace.read_text().splitlines()
    assert lines
    numbers = [int(line.split()[0]) for line in lines]
    assert numbers == sorted(numbers) and numbers[-1] == steps
    assert all("->" in line for line in lines)


def test_trace_and_fast_paths_agree(tmp_path):
    plain = run("run", "-p", "cycle-cover", "-n", "9", "--seed", "5")[1]
    traced = run("run", "-p", "cycle-cover", "-n", "9", "--seed", "5",
                 "--trace", str(tmp_path / "t.txt"))[1]
    assert plain == traced


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nprotocol = global-star\nn = 5\nseed = 4\n")
    base = run("run", "--config", str(cfg))
    assert base[0] == 0
    same = run("run", "-p", "global-star", "-n", "5", "--seed", "4")
    assert base == same
    override = run("run", "--config", str(cfg), "-n", "7")
    assert override == run("run", "-p", "global-star", "-n", "7", "--seed", "4")


def test_config_parsing(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("--trials = 10\nfit = yes\nparam = k=3\ncap-factor = 2.5\n")
    assert read_config(str(cfg)) == {"trials": 10, "fit": True, "param": ["k=3"],
                                     "cap_factor": 2.5}
    cfg.write_text("trials ten\n")
    with pytest.raises(UsageError):
        read_config(str(cfg))
    cfg.write_text("trials = ten\n")
    with pytest.raises(UsageError):
        read_config(str(cfg))


def test_config_key_must_apply(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("hitting = true\n")
    assert run("run", "-p", "global-star", "-n", "4", "--config", str(cfg))[0] == 2


def test_experiment_csv_and_fit(tmp_path):
    path = tmp_path / "out.csv"
    code, text = run("experiment", "-p", "one-way-epidemic", "--ns", "8,16,32",
                     "--trials", "20", "--seed", "1", "--csv", str(path), "--fit")
    assert code == 0
    body, fit_line = text.rsplit("\n", 2)[0], text.splitlines()[-1]
    assert path.read_text() == body + "\n"
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert [r[2] for r in rows[1:]] == ["8", "16", "32"]
    assert fit_line.startswith("slope ")
    assert 0.5 < float(fit_line.split()[1]) < 2.0


def test_experiment_usage_errors():
    assert run("experiment", "-p", "global-star", "--trials", "5")[0] == 2
    assert run("experiment", "-p", "global-star", "--ns", "8,x", "--trials", "5")[0] == 2
    # a single size cannot be swept
    assert run("experiment", "-p", "global-star", "--ns", "8", "--trials", "5")[0] == 1


def test_verify_command():
    code, text = run("verify", "-p", "global-star", "-n", "8", "--trials", "10")
    assert code == 0
    assert "10/10 trials reached the target" in text
    assert run("verify", "-p", "udm-partition", "-n", "8", "--trials", "5")[0] == 2


def test_verify_reports_capped_trials():
    code, _ = run("verify", "-p", "simple-global-line", "-n", "8", "--trials", "4", "--cap", "1")
    assert code == 1


def test_oracle_hitting_time():
    code, text = run("oracle", "-p", "one-way-epidemic", "-n", "3", "--hitting")
    assert code == 0
    assert text.splitlines()[-1] == "3.0"


def test_oracle_verify_and_dump(tmp_path):
    dump = tmp_path / "chain.txt"
    code, text = run("oracle", "-p", "global-star", "-n", "3", "--verify", "--dump", str(dump))
    assert code == 0
    assert text.splitlines()[0].startswith("reachable configurations ")
    count = int(text.splitlines()[0].split()[-1])
    assert len(dump.read_text().splitlines()) == count
    assert "PASS" in text


def test_oracle_size_guard():
    assert run("oracle", "-p", "global-star", "-n", "6")[0] == 1


def test_protocol_file_argument(tmp_path):
    path = tmp_path / "star.nc"
    path.write_text(serialize_protocol(builtin("global-star")))
    code, text = run("run", "-p", str(path), "-n", "6", "--seed", "3")
    assert code == 0
    assert text == run("run", "-p", "global-star", "-n", "6", "--seed", "3")[1]
    assert run("run", "-p", str(path), "--param", "k=2", "-n", "6")[0] == 2


def test_unknown_protocol_file_uses_generic_stop(tmp_path):
    path = tmp_path / "toy.nc"
    text = serialize_protocol(builtin("global-star")).replace("global-star", "my-star")
    path.write_text(text)
    code, out = run("run", "-p", str(path), "-n", "5", "--seed", "1")
    assert "steps " in out
    assert code in (0, 1)
