"""The bundled example programs and their recorded outcomes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .containers import make_container
from .errors import CoopError
from .pipeline import check_source, run_source


@dataclass
class CorpusResult:
    file: str
    ok: bool
    expected: str
    actual: str


def corpus_root():
    return resources.files("coop") / "programs"


def manifest() -> dict:
    return json.loads((corpus_root() / "manifest.json").read_text(encoding="utf-8"))


def read(name: str) -> str:
    return (corpus_root() / name).read_text(encoding="utf-8")


def run_positive(entry: dict, trace: bool = False):
    return run_source(read(entry["file"]), entry["file"], make_container(entry["container"]), trace=trace)


def check_positive() -> list[CorpusResult]:
    out = []
    for entry in manifest()["programs"]:
        try:
            res = run_positive(entry)
            actual = res.outcome.show()
        except CoopError as err:
            actual = err.format(entry["file"])
        out.append(CorpusResult(entry["file"], actual == entry["outcome"], entry["outcome"], actual))
    return out


def check_negative() -> list[CorpusResult]:
    out = []
    for entry in manifest()["negative"]:
        try:
            _program, types = check_source(read(entry["file"]), entry["file"])
            errors = types.errors
        except CoopError as err:
            errors = [err]
        rules = [e.rule for e in errors]
        actual = ", ".join(e.format(entry["file"]) for e in errors) or "accepted"
        out.append(CorpusResult(entry["file"], entry["rule"] in rules, entry["rule"], actual))
    return out


def run_all() -> list[CorpusResult]:
    return check_positive() + check_negative()
