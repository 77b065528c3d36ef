from __future__ import annotations

import json

import pytest

from coop import corpus
from coop.containers import FsRealContainer, FsSimConfig, FsSimContainer, Reply, StateContainer, make_container
from coop.pipeline import run_source

FILEIO = corpus.read("fileio.coop")


def test_state_container_defaults_cells_to_zero():
    box = StateContainer()
    assert box.handle("memread", 3) == Reply.ret(0)
    assert box.handle("memset", (3, 9)) == Reply.ret()
    assert box.handle("memread", 3) == Reply.ret(9)
    box.reset()
    assert box.handle("memread", 3) == Reply.ret(0)


def test_fs_sim_open_truncates_and_numbers_handles():
    fs = FsSimContainer(FsSimConfig(files={"a": "old"}))
    assert fs.handle("open", "a") == Reply.ret(0)
    assert fs.files["a"] == ""
    assert fs.handle("open", "b") == Reply.ret(1)


def test_fs_sim_quota_raises_without_appending():
    fs = FsSimContainer(FsSimConfig(quota=3))
    fh = fs.handle("open", "f").value
    assert fs.handle("write", (fh, "abcd")) == Reply.raise_("QuotaExceeded")
    assert fs.files["f"] == ""
    assert fs.handle("write", (fh, "abc")) == Reply.ret()


def test_fs_sim_fault_injection_by_global_write_index():
    fs = FsSimContainer(FsSimConfig(fail_at_write=1))
    fh = fs.handle("open", "f").value
    assert fs.handle("write", (fh, "a")) == Reply.ret()
    assert fs.handle("write", (fh, "b")) == Reply.kill("IOError")
    assert fs.handle("write", (fh, "c")) == Reply.ret()
    assert fs.files["f"] == "ac"


def test_fs_sim_write_after_close_and_double_close():
    fs = FsSimContainer()
    fh = fs.handle("open", "f").value
    assert fs.handle("close", fh) == Reply.ret()
    assert fs.handle("write", (fh, "x")) == Reply.kill("IOError")
    assert fs.handle("close", fh) == Reply.kill("DoubleClose")
    assert fs.handle("close", 99) == Reply.kill("IOError")
    assert fs.is_closed("f")


def test_fs_sim_config_from_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"quota": 7, "failAtWrite": 2, "files": {"x": "y"}}))
    cfg = FsSimConfig.load(path)
    assert (cfg.quota, cfg.fail_at_write, cfg.files) == (7, 2, {"x": "y"})


@pytest.mark.parametrize(
    "config, closes, fired, content",
    [
        (FsSimConfig(), 1, "return", "Hello, world."),
        (FsSimConfig(quota=5), 1, "raise QuotaExceeded", ""),
        (FsSimConfig(fail_at_write=0), 0, "kill IOError", ""),
    ],
)
def test_file_io_scenarios(config, closes, fired, content):
    fs = FsSimContainer(config)
    res = run_source(FILEIO, "fileio.coop", fs)
    assert res.outcome.show() == "return ()"
    assert fs.calls["close"] == closes
    (inst,) = res.session.log.instances
    assert inst.fired == [fired]
    assert fs.files["hello.txt"] == content
    assert fs.is_closed("hello.txt") == (closes == 1)


def test_container_is_reset_between_runs():
    fs = FsSimContainer(FsSimConfig(fail_at_write=0))
    first = run_source(FILEIO, "fileio.coop", fs).outcome
    second = run_source(FILEIO, "fileio.coop", fs).outcome
    assert first == second and fs.calls["write"] == 1


def test_fs_real_writes_inside_sandbox(tmp_path):
    fs = FsRealContainer(tmp_path)
    res = run_source(FILEIO, "fileio.coop", fs)
    assert res.outcome.show() == "return ()"
    assert (tmp_path / "hello.txt").read_text() == "Hello, world."
    assert fs.calls["close"] == 1


def test_fs_real_rejects_escape(tmp_path):
    fs = FsRealContainer(tmp_path / "box")
    (tmp_path / "box").mkdir()
    assert fs.handle("open", "../outside.txt") == Reply.kill("SandboxViolation")
    assert not (tmp_path / "outside.txt").exists()


def test_fs_real_whole_program_killed_on_escape(tmp_path):
    src = FILEIO.replace('"hello.txt"', '"../escape.txt"')
    (tmp_path / "box").mkdir()
    res = run_source(src, "escape.coop", FsRealContainer(tmp_path / "box"))
    assert res.outcome.show() == "kill SandboxViolation"
    assert res.outcome.exit_code == 3


def test_make_container_names():
    for name in ("pure", "state", "fs-sim"):
        assert make_container(name).name == name
    with pytest.raises(ValueError):
        make_container("nope")
