"""Pretty-printer producing source text the parser accepts again.

Output is deliberately over-parenthesised: every compound value is an atom and
every computation followed by further tokens is wrapped in parentheses.
"""

from __future__ import annotations

from . import syntax as S
from .types import show_type

_BINOPS = {"+", "-", "*", "=", "<"}


def show_lit(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return f"({v})" if v < 0 else str(v)
    if isinstance(v, str):
        body = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{body}"'
    raise TypeError(f"not a literal: {v!r}")


def show_value(v) -> str:
    if isinstance(v, S.Var):
        return v.name
    if isinstance(v, S.Lit):
        return show_lit(v.value)
    if isinstance(v, S.UnitVal):
        return "()"
    if isinstance(v, S.Const):
        if v.name in _BINOPS and len(v.args) == 2:
            return f"({show_value(v.args[0])} {v.name} {show_value(v.args[1])})"
        return f"{v.name}({', '.join(show_value(a) for a in v.args)})"
    if isinstance(v, S.Pair):
        return f"({show_value(v.left)}, {show_value(v.right)})"
    if isinstance(v, (S.Inl, S.Inr)):
        kw = "inl" if isinstance(v, S.Inl) else "inr"
        inner = f"({kw} {show_value(v.value)})"
        return inner if v.annot is None else f"({inner} : {show_type(v.annot)})"
    if isinstance(v, S.Fun):
        (x,) = v.body.vars
        return f"(fun ({x} : {show_type(v.annot)}) -> {show_comp(v.body.body)})"
    if isinstance(v, S.FunK):
        (x,) = v.body.vars
        state = f" @ {show_type(v.state)}" if v.state is not None else ""
        return f"(funK ({x} : {show_type(v.annot)}){state} -> {show_comp(v.body.body)})"
    if isinstance(v, S.RunnerLit):
        clauses = ", ".join(f"{op} {b.vars[0]} -> {show_comp(b.body)}" for op, b in v.clauses)
        return f"({{{clauses}}} @ {show_type(v.state)})"
    if isinstance(v, S.Ascribe):
        return f"({show_value(v.value)} : {show_type(v.annot)})"
    raise TypeError(f"not a value: {v!r}")


def _paren(c) -> str:
    return f"({show_comp(c)})"


def _annot(annot, kernel: bool) -> str:
    if annot is None:
        return ""
    if kernel:
        carrier, state = annot
        s = f" : {show_type(carrier)}"
        return s + (f" @ {show_type(state)}" if state is not None else "")
    return f" : {show_type(annot)}"


def _handlers(ret: S.Bind, handlers) -> str:
    parts = [f"return {ret.vars[0]} -> {show_comp(ret.body)}"]
    parts += [f"raise {e} -> {show_comp(n)}" for e, n in handlers]
    return "{" + ", ".join(parts) + "}"


def show_finally(f: S.Finally) -> str:
    x, c = f.ret.vars
    parts = [f"return {x} @ {c} -> {show_comp(f.ret.body)}"]
    parts += [f"raise {e} @ {b.vars[0]} -> {show_comp(b.body)}" for e, b in f.raises]
    parts += [f"kill {s} -> {show_comp(n)}" for s, n in f.kills]
    return "{" + ", ".join(parts) + "}"


def show_comp(c) -> str:
    kernel = isinstance(c, S.KernelComp)
    if isinstance(c, (S.Return, S.KReturn)):
        return f"return {show_value(c.value)}"
    if isinstance(c, (S.App, S.KApp)):
        return f"{show_value(c.fn)} {show_value(c.arg)}"
    if isinstance(c, (S.Try, S.KTry)):
        return f"try {_paren(c.comp)} with {_handlers(c.ret, c.handlers)}"
    if isinstance(c, (S.MatchPair, S.KMatchPair)):
        x, y = c.body.vars
        return f"match {show_value(c.value)} with {{({x}, {y}) -> {show_comp(c.body.body)}}}"
    if isinstance(c, (S.MatchEmpty, S.KMatchEmpty)):
        return f"(match {show_value(c.value)} with {{}}{_annot(c.annot, kernel)})"
    if isinstance(c, (S.MatchSum, S.KMatchSum)):
        l, r = c.left, c.right
        return (
            f"match {show_value(c.value)} with "
            f"{{inl {l.vars[0]} -> {show_comp(l.body)}, inr {r.vars[0]} -> {show_comp(r.body)}}}"
        )
    if isinstance(c, (S.Op, S.KOp)):
        hs = ", ".join(f"{e} -> {show_comp(n)}" for e, n in c.handlers)
        return f"{c.op}({show_value(c.arg)}, {c.cont.vars[0]}. {show_comp(c.cont.body)}, {{{hs}}})"
    if isinstance(c, (S.Raise, S.KRaise)):
        if c.annot is None:
            return f"raise {c.exc}"
        return f"(raise {c.exc}{_annot(c.annot, kernel)})"
    if isinstance(c, S.Kill):
        if c.annot is None:
            return f"kill {c.sig}"
        return f"(kill {c.sig}{_annot(c.annot, True)})"
    if isinstance(c, S.Run):
        return (
            f"using {show_value(c.runner)} @ {show_value(c.init)} run {_paren(c.comp)} "
            f"finally {show_finally(c.fin)}"
        )
    if isinstance(c, S.KernelSwitch):
        return f"kernel {_paren(c.comp)} @ {show_value(c.init)} finally {show_finally(c.fin)}"
    if isinstance(c, (S.Let, S.KLet)):
        return f"let {c.body.vars[0]} = {_paren(c.comp)} in {show_comp(c.body.body)}"
    if isinstance(c, S.Getenv):
        return f"getenv ({c.body.vars[0]}. {show_comp(c.body.body)})"
    if isinstance(c, S.Setenv):
        return f"setenv ({show_value(c.value)}, {_paren(c.comp)})"
    if isinstance(c, S.UserSwitch):
        return f"user {_paren(c.comp)} with {_handlers(c.ret, c.handlers)}"
    raise TypeError(f"not a computation: {c!r}")


def show_term(t) -> str:
    if isinstance(t, S.Value):
        return show_value(t)
    return show_comp(t)


def show_declarations(tables) -> str:
    lines = []
    if tables.exceptions:
        lines.append("exception " + ", ".join(sorted(tables.exceptions)))
    if tables.signals:
        lines.append("signal " + ", ".join(sorted(tables.signals)))
    for name, sig in sorted(tables.operations.items()):
        excs = f" ! {{{', '.join(sorted(sig.excs))}}}" if sig.excs else ""
        lines.append(f"operation {name} : {show_type(sig.param)} ~> {show_type(sig.result)}{excs}")
    for name, ty in sorted(tables.externals.items()):
        lines.append(f"external {name} : {show_type(ty)}")
    return "\n".join(lines)


def show_program(program) -> str:
    parts = [show_declarations(program.tables)]
    for _src, name, _annot, comp in program.bindings:
        parts.append(f"let {name} = {_paren(comp)}")
    if program.main is not None:
        parts.append(show_comp(program.main))
    return "\n".join(p for p in parts if p) + "\n"
