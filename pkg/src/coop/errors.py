"""Diagnostics shared by the parser, typechecker and runtime."""

from __future__ import annotations


class CoopError(Exception):
    """A user-facing diagnostic with an optional position and rule label."""

    def __init__(self, message: str, pos=None, rule: str | None = None):
        super().__init__(message)
        self.message = message
        self.pos = pos
        self.rule = rule

    def format(self, filename: str = "<input>") -> str:
        line, col = self.pos if self.pos else (1, 1)
        label = f"{self.rule}: " if self.rule else ""
        return f"{filename}:{line}:{col}: {label}{self.message}"

    def __str__(self) -> str:
        return self.format()


class ParseError(CoopError):
    pass


class TypeCheckError(CoopError):
    pass


class StuckError(Exception):
    """Raised when evaluation reaches a state ruled out by typing.

    Seeing this means the typechecker accepted something it should not have.
    """


class UnhandledOperation(Exception):
    def __init__(self, op: str):
        super().__init__(f"operation {op} reached the top level but the container does not handle it")
        self.op = op
