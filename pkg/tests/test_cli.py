from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from coop import corpus
from coop.cli import main

HERE = Path(__file__).parent
TICK = str(HERE / "programs" / "tick.coop")


@pytest.fixture
def cli():
    runner = CliRunner()

    def invoke(*args, env=None):
        return runner.invoke(main, [str(a) for a in args], env=env)

    return invoke


@pytest.fixture
def fileio(tmp_path):
    path = tmp_path / "fileio.coop"
    path.write_text(corpus.read("fileio.coop"))
    return path


def test_check_well_typed(cli, fileio):
    assert cli("check", fileio).exit_code == 0


def test_check_reports_rule(cli, tmp_path):
    path = tmp_path / "bad.coop"
    path.write_text(corpus.read("negative/missing_finally.coop"))
    res = cli("check", path)
    assert res.exit_code == 1
    assert "TyUser-Run" in res.output


def test_check_empty_file(cli, tmp_path):
    path = tmp_path / "empty.coop"
    path.write_text("")
    res = cli("check", path)
    assert res.exit_code == 1 and "no main computation" in res.output


def test_check_missing_file_is_io_error(cli, tmp_path):
    assert cli("check", tmp_path / "absent.coop").exit_code == 2


def test_check_emit_types(cli):
    res = cli("check", "--emit-types", TICK)
    assert res.exit_code == 0
    assert "r : ({tick} => ({}, {}, int)) ! ({}, {})" in res.output
    assert "main : int * int ! ({}, {})" in res.output


def test_run_tick(cli):
    res = cli("run", TICK)
    assert res.exit_code == 0 and res.output.strip() == "return (1, 2)"


def test_run_exit_codes(cli, tmp_path):
    raising = tmp_path / "r.coop"
    raising.write_text("exception e\nraise e")
    res = cli("run", raising)
    assert (res.exit_code, res.output.strip()) == (1, "raise e")
    static = tmp_path / "s.coop"
    static.write_text("return (1 + true)")
    assert cli("run", static).exit_code == 4


@pytest.mark.parametrize("cfg, expected", [({}, 1), ({"quota": 5}, 1), ({"failAtWrite": 0}, 0)])
def test_run_file_io_matrix(cli, fileio, tmp_path, cfg, expected):
    conf = tmp_path / "fs.json"
    conf.write_text(json.dumps(cfg))
    trace = tmp_path / "trace.json"
    res = cli("run", fileio, "--container", "fs-sim", "--fs-config", conf, "--trace", trace)
    assert res.exit_code == 0 and res.output.strip() == "return ()"
    events = json.loads(trace.read_text())
    closes = [e for e in events if e.get("op") == "close"]
    assert len(closes) == expected


def test_run_fs_real_in_sandbox(cli, fileio, tmp_path):
    box = tmp_path / "box"
    box.mkdir()
    res = cli("run", fileio, "--container", "fs-real", "--sandbox", box)
    assert res.exit_code == 0
    assert (box / "hello.txt").read_text() == "Hello, world."


def test_trace_subcommand_prints_json(cli):
    res = cli("trace", TICK)
    assert res.exit_code == 0
    events = json.loads(res.stdout if hasattr(res, "stdout") else res.output)
    assert events[0] == {"event": "op", "op": "tick", "runDepth": 1}


def test_eq_test_single_schema(cli):
    res = cli("eq-test", "--schema", "run-return", "--cases", "500")
    assert res.exit_code == 0
    row = [line for line in res.output.splitlines() if line.startswith("run-return")][0]
    assert row.split()[1:3] == ["500", "0"]


def test_eq_test_seed_from_environment(cli):
    res = cli("eq-test", "--schema", "beta", "--cases", "5", env={"COOP_SEED": "42"})
    assert res.output.splitlines()[0] == "seed 42"


def test_eq_test_mutations_are_refuted(cli):
    res = cli("eq-test", "--mutations", "--cases", "60")
    assert res.exit_code == 0
    assert "0 mutations without a counterexample" in res.output


def test_eq_test_unknown_schema(cli):
    assert cli("eq-test", "--schema", "nope").exit_code != 0


def test_eq_test_list(cli):
    res = cli("eq-test", "--list")
    assert "setenv-setenv" in res.output.split()


def test_corpus_command(cli):
    res = cli("corpus")
    assert res.exit_code == 0
    assert res.output.count("ok") == 12


def test_eq_test_output_independent_of_hash_seed():
    import os
    import subprocess
    import sys

    def go(h):
        env = dict(os.environ, PYTHONHASHSEED=str(h))
        cmd = [sys.executable, "-m", "coop.cli", "eq-test", "--seed", "3", "--cases", "5",
               "--schema", "run-op", "--schema", "k-try-op"]
        return subprocess.run(cmd, env=env, capture_output=True, text=True).stdout

    assert go(1) == go(2) != ""
