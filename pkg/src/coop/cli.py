"""The ``coop`` command: check, run, trace, eq-test and corpus."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from .containers import CONTAINERS, FsSimConfig, make_container
from .errors import CoopError, StuckError, UnhandledOperation
from .oracle import equations
from .pipeline import check_source, run_source
from .types import show_type

# exit codes
EXIT_OK, EXIT_RAISE, EXIT_IO, EXIT_KILL, EXIT_STATIC = 0, 1, 2, 3, 4


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        click.echo(f"{path}: {err.strerror or err}", err=True)
        sys.exit(EXIT_IO)


def _container(name, fs_config, sandbox):
    cfg = None
    if fs_config is not None:
        try:
            cfg = FsSimConfig.load(fs_config)
        except (OSError, ValueError) as err:
            click.echo(f"{fs_config}: {err}", err=True)
            sys.exit(EXIT_IO)
    return make_container(name, fs_config=cfg, sandbox=sandbox)


def _write_json(path: str, data):
    text = json.dumps(data, indent=2)
    if path == "-":
        click.echo(text)
        return
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as err:
        click.echo(f"{path}: {err.strerror or err}", err=True)
        sys.exit(EXIT_IO)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Interpreter for a calculus of runners of algebraic effects."""


@main.command()
@click.argument("path")
@click.option("--emit-types", is_flag=True, help="Print the type of every top-level binding and of main.")
@click.option("--strict-values", is_flag=True, help="Reject computations in value positions instead of hoisting them.")
def check(path, emit_types, strict_values):
    """Typecheck PATH. Exit 0 iff it is well-typed."""
    source = _read(path)
    try:
        program, types = check_source(source, path, strict_values=strict_values)
    except CoopError as err:
        click.echo(err.format(path), err=True)
        sys.exit(1)
    errors = list(types.errors)
    if program.main is None and not errors:
        errors.append(CoopError("no main computation", None, "Program"))
    for err in errors:
        click.echo(err.format(path), err=True)
    if emit_types:
        for name, ty in types.bindings:
            click.echo(f"{name} : {show_type(ty)}")
        if types.main is not None:
            click.echo(f"main : {show_type(types.main)}")
    sys.exit(1 if errors else 0)


def _run(path, container, fs_config, sandbox, trace_path, no_check, strict_values):
    source = _read(path)
    box = _container(container, fs_config, sandbox)
    try:
        res = run_source(source, path, box, trace=trace_path is not None, check=not no_check,
                         strict_values=strict_values)
    except CoopError as err:
        click.echo(err.format(path), err=True)
        sys.exit(EXIT_STATIC)
    except UnhandledOperation as err:
        click.echo(f"{path}: runtime error: {err}", err=True)
        sys.exit(EXIT_STATIC)
    except StuckError as err:
        click.echo(f"{path}: stuck: {err}", err=True)
        sys.exit(EXIT_STATIC)
    if trace_path is not None:
        _write_json(trace_path, res.session.trace_events)
    return res


@main.command()
@click.argument("path")
@click.option("--container", type=click.Choice(CONTAINERS), default="pure", show_default=True)
@click.option("--fs-config", type=click.Path(), help="JSON fault configuration for the fs-sim container.")
@click.option("--sandbox", type=click.Path(), help="Directory confining the fs-real container.")
@click.option("--trace", "trace_path", type=click.Path(), help="Write the event trace as JSON ('-' for stdout).")
@click.option("--no-check", is_flag=True, help="Skip static checking.")
@click.option("--strict-values", is_flag=True)
def run(path, container, fs_config, sandbox, trace_path, no_check, strict_values):
    """Run PATH and print its outcome.

    Exit status: 0 return, 1 raise, 3 kill, 4 static or runtime error, 2 I/O error.
    """
    res = _run(path, container, fs_config, sandbox, trace_path, no_check, strict_values)
    click.echo(res.outcome.show())
    sys.exit(res.outcome.exit_code)


@main.command()
@click.argument("path")
@click.option("--container", type=click.Choice(CONTAINERS), default="pure", show_default=True)
@click.option("--fs-config", type=click.Path())
@click.option("--sandbox", type=click.Path())
@click.option("-o", "--output", default="-", show_default=True, help="Where to write the trace.")
def trace(path, container, fs_config, sandbox, output):
    """Run PATH and emit its event trace as JSON."""
    res = _run(path, container, fs_config, sandbox, output, False, False)
    click.echo(res.outcome.show(), err=True)
    sys.exit(res.outcome.exit_code)


@main.command("eq-test")
@click.option("--seed", type=int, default=0, show_default=True, help="Overridden by COOP_SEED.")
@click.option("--cases", type=int, default=100, show_default=True)
@click.option("--schema", "schemas", multiple=True, help="Restrict to these schema ids (repeatable).")
@click.option("--mutations", is_flag=True, help="Run the deliberately wrong schemas instead.")
@click.option("--depth", type=int, default=equations.DEPTH, show_default=True, help="Generator depth.")
@click.option("--int-bound", type=int, default=equations.INT_BOUND, show_default=True,
              help="Integers range over [0, N) when domains are enumerated.")
@click.option("--list", "list_only", is_flag=True, help="List schema ids and exit.")
def eq_test(seed, cases, schemas, mutations, depth, int_bound, list_only):
    """Check equation schemas against the denotational oracle."""
    table = equations.MUTATIONS if mutations else equations.SCHEMAS
    if list_only:
        for name in sorted(table):
            click.echo(name)
        return
    env_seed = os.environ.get("COOP_SEED")
    if env_seed:
        seed = int(env_seed)
    unknown = [s for s in schemas if s not in equations.SCHEMAS and s not in equations.MUTATIONS]
    if unknown:
        raise click.BadParameter(", ".join(unknown), param_hint="--schema")
    ids = sorted(schemas) if schemas else sorted(table)
    click.echo(f"seed {seed}")
    click.echo(f"{'schema':34} {'cases':>6} {'failures':>9} {'rejected':>9}")
    bad = 0
    for sid in ids:
        rep = equations.run_schema(sid, cases, seed, depth, int_bound)
        click.echo(f"{sid:34} {rep.cases:>6} {rep.failures:>9} {rep.rejected:>9}")
        expect_fail = sid in equations.MUTATIONS
        if (rep.failures == 0) if expect_fail else not rep.passed:
            bad += 1
    what = "mutations without a counterexample" if mutations else "failing schemas"
    click.echo(f"{bad} {what}")
    sys.exit(1 if bad else 0)


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable report.")
def corpus(as_json):
    """Run the bundled example programs and negative tests."""
    results = corpus_mod.run_all()
    if as_json:
        click.echo(json.dumps([r.__dict__ for r in results], indent=2))
    else:
        for r in results:
            mark = "ok  " if r.ok else "FAIL"
            click.echo(f"{mark} {r.file:32} {r.actual}")
    sys.exit(0 if all(r.ok for r in results) else 1)


if __name__ == "__main__":
    main()
