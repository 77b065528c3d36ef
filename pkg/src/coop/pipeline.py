"""Parse, check and run a program in one call."""

from __future__ import annotations

from dataclasses import dataclass

from .containers import Container, make_container
from .errors import CoopError, StuckError
from .evaluator import Session, run_program
from .parser import parse_program
from .typecheck import ProgramTypes, check_program
from .values import Outcome


@dataclass
class RunResult:
    outcome: Outcome
    session: Session
    container: Container
    types: ProgramTypes | None


class MissingExternal(CoopError):
    pass


class ResidualOperation(CoopError):
    pass


def check_source(source: str, filename: str = "<input>", strict_values: bool = False):
    """Return ``(program, ProgramTypes)``; parse errors propagate."""
    program = parse_program(source, filename, strict_values=strict_values)
    return program, check_program(program)


def check_against_container(program, types: ProgramTypes, container: Container):
    provided = container.externals()
    for name in program.tables.externals:
        if name not in provided:
            raise MissingExternal(f"container {container.name} does not provide {name}", None, "Container")
    if types.main is not None:
        residual = types.main.ops - container.signature
        if residual:
            names = ", ".join(sorted(residual))
            raise ResidualOperation(
                f"operations {{{names}}} are not handled by container {container.name}", None, "Container"
            )


def run_source(
    source: str,
    filename: str = "<input>",
    container: Container | str = "pure",
    trace: bool = False,
    check: bool = True,
    strict_values: bool = False,
) -> RunResult:
    """Parse, optionally check, and evaluate ``source``.

    Raises :class:`CoopError` on static errors (the first one found).
    """
    if isinstance(container, str):
        container = make_container(container)
    program = parse_program(source, filename, strict_values=strict_values)
    if program.main is None:
        raise CoopError("no main computation", None, "Program")
    types = None
    if check:
        types = check_program(program)
        if types.errors:
            raise types.errors[0]
        check_against_container(program, types, container)
    container.reset()
    try:
        outcome, session = run_program(program, container, trace=trace)
    finally:
        container.teardown()
    return RunResult(outcome, session, container, types)


__all__ = ["RunResult", "check_source", "run_source", "StuckError"]
