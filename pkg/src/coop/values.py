"""Runtime values, built-in constants and outcome printing.

Ground values use host data directly: ``()`` for unit, Python ``int``,
``bool`` and ``str``, 2-tuples for pairs, and :class:`InlV`/:class:`InrV` for
sums. Closures capture their defining environment; runner closures never
capture kernel state, which is supplied when the runner is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

UNIT_V = ()


@dataclass(frozen=True)
class InlV:
    value: object


@dataclass(frozen=True)
class InrV:
    value: object


@dataclass(eq=False)
class UserClosure:
    param: str
    body: object
    env: dict


@dataclass(eq=False)
class KernelClosure:
    param: str
    body: object
    env: dict


@dataclass(eq=False)
class RunnerClosure:
    clauses: dict  # op -> (param, kernel body)
    env: dict
    state_type: object

    @property
    def ops(self):
        return frozenset(self.clauses)


@dataclass(eq=False)
class NativeRunner:
    """A runner whose co-operations are host functions.

    Each co-operation receives ``(session, arg, state)`` and returns a kernel
    step, so it can return, raise, or send a signal like a source-level one.
    """

    name: str
    coops: dict = field(default_factory=dict)  # op -> Callable

    @property
    def ops(self):
        return frozenset(self.coops)


def apply_constant(name: str, args: tuple):
    if name == "+":
        return args[0] + args[1]
    if name == "-":
        return args[0] - args[1]
    if name == "*":
        return args[0] * args[1]
    if name == "=":
        return args[0] == args[1]
    if name == "<":
        return args[0] < args[1]
    if name == "concat":
        return args[0] + args[1]
    if name == "test":
        return InlV(UNIT_V) if args[0] else InrV(UNIT_V)
    raise KeyError(f"unknown constant {name}")


def _show_str(s: str) -> str:
    body = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def show_runtime(v) -> str:
    """Fully parenthesised rendering used by ``coop run`` output.

    EBNF::

        value ::= "()" | int | "true" | "false" | string
                | "(" value ", " value ")" | "(inl " value ")" | "(inr " value ")"
                | "<fun>" | "<funK>" | "<runner>"
    """
    if v == () and isinstance(v, tuple):
        return "()"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return _show_str(v)
    if isinstance(v, tuple) and len(v) == 2:
        return f"({show_runtime(v[0])}, {show_runtime(v[1])})"
    if isinstance(v, InlV):
        return f"(inl {show_runtime(v.value)})"
    if isinstance(v, InrV):
        return f"(inr {show_runtime(v.value)})"
    if isinstance(v, UserClosure):
        return "<fun>"
    if isinstance(v, KernelClosure):
        return "<funK>"
    if isinstance(v, (RunnerClosure, NativeRunner)):
        return "<runner>"
    raise TypeError(f"not a runtime value: {v!r}")


@dataclass(frozen=True)
class Outcome:
    """Terminal result of a top-level evaluation."""

    kind: str  # "return" | "raise" | "kill"
    value: object = None  # runtime value, exception name or signal name

    def show(self) -> str:
        if self.kind == "return":
            return f"return {show_runtime(self.value)}"
        return f"{self.kind} {self.value}"

    @property
    def exit_code(self) -> int:
        return {"return": 0, "raise": 1, "kill": 3}[self.kind]


Continuation = Callable
