"""Lexer, parser and elaborator for ``.coop`` source files.

Parsing happens in two passes. The first builds a sort-agnostic ``Raw`` tree,
because the concrete syntax does not separate values from computations
(``f x`` is a computation, ``(x, y)`` a value, ``(open "a")`` in value
position a computation to hoist). The second pass elaborates the raw tree into
:mod:`coop.syntax` terms: it resolves scopes, renames every binder to a fresh
name, expands the generic-effect and ``if``/``;`` abbreviations and hoists
computations out of value positions (unless ``strict_values`` is set).

Grammar summary (``expr`` binds loosest)::

    expr  ::= stmt [';' expr]
    stmt  ::= let PAT [: T] = expr in expr | try expr with CLAUSES
            | using cmp @ cmp run expr finally CLAUSES
            | kernel expr @ cmp finally CLAUSES | user expr with CLAUSES
            | if cmp then stmt else stmt | match cmp with CLAUSES [: T [@ T]]
            | return cmp | raise e [: T [@ T]] | kill s [: T [@ T]]
            | fun (x : T) -> expr | funK (x : T) [@ T] -> expr
            | getenv atom | setenv atom | cmp
    cmp   ::= arith [('=' | '<') arith]
    arith ::= term (('+' | '-') term)*
    term  ::= app ('*' app)*
    app   ::= atom atom*
    atom  ::= x | n | "s" | true | false | () | (expr) | (expr : T)
            | (item, item, ...) | { CLAUSES } [@ T] | inl atom | inr atom
    item  ::= x . expr | expr
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import syntax as S
from . import types as T
from .errors import ParseError

KEYWORDS = {
    "fun", "funK", "return", "try", "with", "raise", "kill", "match", "getenv",
    "setenv", "using", "run", "finally", "kernel", "user", "let", "in", "if",
    "then", "else", "inl", "inr", "true", "false", "operation", "exception",
    "signal", "external", "int", "bool", "str", "unit", "empty",
}

SYMBOLS = ["->", "~>", "=>", "(", ")", "{", "}", ",", ".", ":", ";", "@", "!", "+", "-", "*", "=", "<"]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|~>|=>|[(){},.:;@!+\-*=<])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT INT STR KW SYM EOF
    text: str
    line: int
    col: int
    value: object = None

    @property
    def pos(self):
        return (self.line, self.col)


def _unescape(body: str, pos) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape sequence \\{nxt}", pos)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


_OPERAND_END = {"IDENT", "INT", "STR"}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        col = i - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {source[i]!r}", (line, col))
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            value = int(text)
            prev = tokens[-1] if tokens else None
            negate = (
                prev is not None
                and prev.text == "-"
                and prev.line == line
                and prev.col == col - 1
                and not _ends_operand(tokens[-2] if len(tokens) > 1 else None)
            )
            if negate:
                tokens.pop()
                tokens.append(Token("INT", "-" + text, prev.line, prev.col, -value))
            else:
                tokens.append(Token("INT", text, line, col, value))
        elif kind == "str":
            tokens.append(Token("STR", text, line, col, _unescape(text[1:-1], (line, col))))
        elif kind == "ident":
            tokens.append(Token("KW" if text in KEYWORDS else "IDENT", text, line, col))
        elif kind == "sym":
            tokens.append(Token("SYM", text, line, col))
        i = m.end()
    tokens.append(Token("EOF", "", line, i - line_start + 1))
    return tokens


def _ends_operand(tok: Token | None) -> bool:
    if tok is None:
        return False
    if tok.kind in _OPERAND_END:
        return True
    return tok.text in (")", "}", "true", "false")


# -- raw tree ---------------------------------------------------------------


@dataclass
class Raw:
    kind: str
    args: tuple
    pos: tuple


@dataclass
class Clause:
    kind: str  # return raise kill inl inr pair coop handler
    name: str | None
    pat: object  # pattern for the bound value
    state_var: str | None
    body: Raw
    pos: tuple


_ATOM_START_KW = {"true", "false", "inl", "inr"}


class RawParser:
    def __init__(self, tokens: list[Token], tables: T.EffectTables):
        self.toks = tokens
        self.i = 0
        self.tables = tables

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("KW", "SYM") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected '{text}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            self.error(f"expected {what}")
        return self.advance()

    def error(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else f"'{t.text}'"
        raise ParseError(f"{msg}, found {found}", t.pos)

    # types
    def name_set(self, kind: str) -> frozenset:
        self.expect("{")
        names = []
        if not self.at("}"):
            while True:
                t = self.ident(f"{kind} name")
                if self.tables.declared(t.text) != kind:
                    raise ParseError(f"undeclared {kind} {t.text}", t.pos)
                names.append(t.text)
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return frozenset(names)

    def parse_type(self):
        if self.at("{"):
            ops = self.name_set("operation")
            self.expect("=>")
            self.expect("(")
            ext = self.name_set("operation")
            self.expect(",")
            sigs = self.name_set("signal")
            self.expect(",")
            state = self.ground_type()
            self.expect(")")
            return T.TRunner(ops, ext, sigs, state)
        arg = self.sum_type()
        if self.at("->"):
            self.advance()
            res = self.comp_type()
            if isinstance(res, T.KernelType):
                return T.TKernelFun(arg, res)
            return T.TUserFun(arg, res)
        return arg

    def comp_type(self):
        carrier = self.sum_type()
        if not self.at("!"):
            return T.UserType(carrier)
        self.advance()
        self.expect("(")
        ops = self.name_set("operation")
        self.expect(",")
        excs = self.name_set("exception")
        if self.at(")"):
            self.advance()
            return T.UserType(carrier, ops, excs)
        self.expect(",")
        sigs = self.name_set("signal")
        self.expect(",")
        state = self.ground_type()
        self.expect(")")
        return T.KernelType(carrier, ops, excs, sigs, state)

    def ground_type(self):
        pos = self.tok.pos
        t = self.sum_type()
        if not T.is_ground(t):
            raise ParseError(f"expected a ground type, got {T.show_type(t)}", pos)
        return t

    def sum_type(self):
        t = self.prod_type()
        while self.at("+"):
            self.advance()
            t = T.TSum(t, self.prod_type())
        return t

    def prod_type(self):
        t = self.atom_type()
        while self.at("*"):
            self.advance()
            t = T.TProd(t, self.atom_type())
        return t

    def atom_type(self):
        t = self.tok
        if t.kind == "KW" and t.text in T.BASE_TYPES:
            self.advance()
            return T.TBase(t.text)
        if self.at("unit"):
            self.advance()
            return T.UNIT
        if self.at("empty"):
            self.advance()
            return T.EMPTY
        if self.at("("):
            self.advance()
            inner = self.parse_type()
            self.expect(")")
            return inner
        self.error("expected a type")

    # patterns
    def pattern(self):
        t = self.tok
        if t.kind == "IDENT":
            self.advance()
            return t.text
        if self.at("("):
            self.advance()
            left = self.pattern()
            self.expect(",")
            right = self.pattern()
            self.expect(")")
            return (left, right)
        self.error("expected a pattern")

    # expressions
    def expr(self) -> Raw:
        e = self.stmt()
        if self.at(";"):
            pos = self.advance().pos
            return Raw("seq", (e, self.expr()), pos)
        return e

    def opt_annot(self, with_state: bool = True):
        annot = state = None
        if self.at(":"):
            self.advance()
            annot = self.sum_type()
            if with_state and self.at("@"):
                self.advance()
                state = self.ground_type()
        return annot, state

    def stmt(self) -> Raw:
        t = self.tok
        pos = t.pos
        if t.kind != "KW":
            return self.cmp()
        kw = t.text
        if kw == "let":
            self.advance()
            pat = self.pattern()
            annot = None
            if self.at(":"):
                self.advance()
                annot = self.parse_type()
            self.expect("=")
            bound = self.expr()
            if self.at("in"):
                self.advance()
                return Raw("let", (pat, annot, bound, self.expr()), pos)
            return Raw("toplet", (pat, annot, bound), pos)
        if kw == "try":
            self.advance()
            m = self.expr()
            self.expect("with")
            return Raw("try", (m, self.clauses()), pos)
        if kw == "using":
            self.advance()
            r = self.cmp()
            self.expect("@")
            w = self.cmp()
            self.expect("run")
            m = self.expr()
            self.expect("finally")
            return Raw("using", (r, w, m, self.clauses()), pos)
        if kw == "kernel":
            self.advance()
            k = self.expr()
            self.expect("@")
            w = self.cmp()
            self.expect("finally")
            return Raw("kernel", (k, w, self.clauses()), pos)
        if kw == "user":
            self.advance()
            m = self.expr()
            self.expect("with")
            return Raw("user", (m, self.clauses()), pos)
        if kw == "if":
            self.advance()
            c = self.cmp()
            self.expect("then")
            a = self.stmt()
            self.expect("else")
            return Raw("if", (c, a, self.stmt()), pos)
        if kw == "match":
            self.advance()
            v = self.cmp()
            self.expect("with")
            cl = self.clauses()
            annot, state = (None, None)
            if not cl:
                annot, state = self.opt_annot()
            return Raw("match", (v, cl, annot, state), pos)
        if kw == "return":
            self.advance()
            return Raw("return", (self.cmp(),), pos)
        if kw in ("raise", "kill"):
            self.advance()
            name = self.ident("exception name" if kw == "raise" else "signal name")
            annot, state = self.opt_annot()
            return Raw(kw, (name.text, annot, state), pos)
        if kw in ("fun", "funK"):
            self.advance()
            self.expect("(")
            x = self.ident("parameter name").text
            self.expect(":")
            ty = self.parse_type()
            self.expect(")")
            state = None
            if kw == "funK" and self.at("@"):
                self.advance()
                state = self.ground_type()
            self.expect("->")
            body = self.expr()
            return Raw(kw, (x, ty, state, body), pos)
        if kw in ("getenv", "setenv"):
            self.advance()
            if not self.starts_atom():
                self.error(f"expected an argument to {kw}")
            return Raw(kw, (self.atom(),), pos)
        return self.cmp()

    def cmp(self) -> Raw:
        a = self.arith()
        if self.at("=") or self.at("<"):
            t = self.advance()
            return Raw("bin", (t.text, a, self.arith()), t.pos)
        return a

    def arith(self) -> Raw:
        a = self.term()
        while self.at("+") or self.at("-"):
            t = self.advance()
            a = Raw("bin", (t.text, a, self.term()), t.pos)
        return a

    def term(self) -> Raw:
        a = self.app()
        while self.at("*"):
            t = self.advance()
            a = Raw("bin", ("*", a, self.app()), t.pos)
        return a

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("IDENT", "INT", "STR"):
            return True
        if t.kind == "KW":
            return t.text in _ATOM_START_KW
        return t.kind == "SYM" and t.text in ("(", "{")

    def app(self) -> Raw:
        if not self.starts_atom():
            self.error("expected an expression")
        f = self.atom()
        while self.starts_atom():
            arg = self.atom()
            f = Raw("app", (f, arg), f.pos)
        return f

    def atom(self) -> Raw:
        t = self.tok
        pos = t.pos
        if t.kind == "IDENT":
            self.advance()
            return Raw("var", (t.text,), pos)
        if t.kind == "INT":
            self.advance()
            return Raw("lit", (t.value,), pos)
        if t.kind == "STR":
            self.advance()
            return Raw("lit", (t.value,), pos)
        if self.at("true") or self.at("false"):
            self.advance()
            return Raw("lit", (t.text == "true",), pos)
        if self.at("inl") or self.at("inr"):
            self.advance()
            return Raw(t.text, (self.atom(),), pos)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return Raw("unit", (), pos)
            items = [self.item()]
            while self.at(","):
                self.advance()
                items.append(self.item())
            if len(items) == 1 and self.at(":"):
                self.advance()
                ty = self.parse_type()
                self.expect(")")
                return Raw("ascribe", (items[0], ty), pos)
            self.expect(")")
            if len(items) == 1:
                return Raw("paren", (items[0],), pos)
            return Raw("tuple", tuple(items), pos)
        if self.at("{"):
            cl = self.clauses()
            state = None
            if self.at("@") and self._block_takes_state(cl):
                self.advance()
                state = self.ground_type()
            return Raw("block", (cl, state), pos)
        self.error("expected an expression")

    def _block_takes_state(self, clauses) -> bool:
        return all(c.kind == "coop" for c in clauses)

    def item(self) -> Raw:
        t = self.tok
        if t.kind == "IDENT" and self.peek().kind == "SYM" and self.peek().text == ".":
            self.advance()
            self.advance()
            return Raw("cont", (t.text, self.expr()), t.pos)
        if self.at("{"):
            return self.atom()
        return self.expr()

    def clauses(self) -> list[Clause]:
        self.expect("{")
        out: list[Clause] = []
        if not self.at("}"):
            while True:
                out.append(self.clause())
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return out

    def clause(self) -> Clause:
        t = self.tok
        pos = t.pos
        kind, name, pat, state_var = None, None, None, None
        if self.at("return"):
            self.advance()
            kind, pat = "return", self.pattern()
            if self.at("@"):
                self.advance()
                state_var = self.ident("state variable").text
        elif self.at("raise"):
            self.advance()
            kind, name = "raise", self.ident("exception name").text
            if self.at("@"):
                self.advance()
                state_var = self.ident("state variable").text
        elif self.at("kill"):
            self.advance()
            kind, name = "kill", self.ident("signal name").text
        elif self.at("inl") or self.at("inr"):
            self.advance()
            kind, pat = t.text, self.pattern()
        elif self.at("("):
            kind, pat = "pair", self.pattern()
            if not isinstance(pat, tuple):
                raise ParseError("expected a pair pattern", pos)
        elif t.kind == "IDENT":
            self.advance()
            name = t.text
            if self.at("->"):
                kind = "handler"
            else:
                kind, pat = "coop", self.pattern()
        else:
            self.error("expected a clause")
        self.expect("->")
        body = self.expr()
        return Clause(kind, name, pat, state_var, body, pos)

    # declarations
    def program(self):
        decls = []
        bindings = []
        main = None
        while self.tok.kind != "EOF":
            t = self.tok
            if self.at("operation"):
                self.advance()
                name = self.ident("operation name")
                self._declare(name, "operation")
                self.expect(":")
                a = self.ground_type()
                self.expect("~>")
                b = self.ground_type_noarrow()
                excs = frozenset()
                if self.at("!"):
                    self.advance()
                    excs = self.name_set("exception")
                self.tables.operations[name.text] = T.OpSig(a, b, excs)
                decls.append(("operation", name.text))
            elif self.at("exception") or self.at("signal"):
                kind = self.advance().text
                while True:
                    name = self.ident(f"{kind} name")
                    self._declare(name, kind)
                    (self.tables.exceptions if kind == "exception" else self.tables.signals).add(name.text)
                    decls.append((kind, name.text))
                    if not self.at(","):
                        break
                    self.advance()
            elif self.at("external"):
                self.advance()
                name = self.ident("external name")
                self._declare(name, "external")
                self.expect(":")
                pos = self.tok.pos
                ty = self.parse_type()
                if not isinstance(ty, T.TRunner):
                    raise ParseError("externals must have a runner type", pos)
                self.tables.externals[name.text] = ty
                decls.append(("external", name.text))
            else:
                e = self.expr()
                if e.kind == "toplet":
                    bindings.append(e)
                    continue
                main = e
                if self.tok.kind != "EOF":
                    self.error("expected end of input after the main computation")
                break
            del t
        return decls, bindings, main

    def ground_type_noarrow(self):
        pos = self.tok.pos
        t = self.sum_type()
        if not T.is_ground(t):
            raise ParseError("operation signatures use ground types", pos)
        return t

    def _declare(self, tok: Token, kind: str):
        prev = self.tables.declared(tok.text)
        if prev is not None or tok.text in self.tables.constants:
            raise ParseError(f"{tok.text} is already declared", tok.pos)


# -- elaboration ------------------------------------------------------------


@dataclass
class Program:
    tables: T.EffectTables
    bindings: list  # [(source name, bound name, annotation, comp)]
    main: S.UserComp | None
    filename: str = "<input>"
    decls: list = field(default_factory=list)

    @property
    def body(self) -> S.UserComp | None:
        """The whole program as one closed user computation."""
        if self.main is None:
            return None
        comp = self.main
        for _src, name, _annot, bound in reversed(self.bindings):
            comp = S.Let(bound, S.Bind((name,), comp), pos=bound.pos)
        return comp


_VALUE_KINDS = {"lit", "unit", "tuple", "ascribe", "inl", "inr", "fun", "funK", "block", "bin"}


class Elaborator:
    def __init__(self, tables: T.EffectTables, supply: S.NameSupply, strict_values: bool = False):
        self.tables = tables
        self.supply = supply
        self.strict = strict_values

    def fresh(self, base: str) -> str:
        return self.supply.fresh(base)

    def is_op(self, name: str, scope: dict) -> bool:
        return name not in scope and name in self.tables.operations

    def is_const(self, name: str, scope: dict) -> bool:
        return name not in scope and name in self.tables.constants

    def is_value_form(self, r: Raw, scope: dict) -> bool:
        if r.kind in _VALUE_KINDS:
            return True
        if r.kind == "var":
            return not self.is_op(r.args[0], scope)
        if r.kind == "paren":
            return self.is_value_form(r.args[0], scope)
        if r.kind == "app":
            return self.const_app(r, scope) is not None
        return False

    def const_app(self, r: Raw, scope: dict):
        """``(name, raw args)`` when ``r`` applies a constant, curried or tupled."""
        spine = []
        while r.kind == "app":
            spine.append(r.args[1])
            r = r.args[0]
        if r.kind != "var" or not self.is_const(r.args[0], scope):
            return None
        spine.reverse()
        if len(spine) == 1:
            arg = spine[0]
            if arg.kind == "unit":
                return r.args[0], ()
            if arg.kind == "tuple":
                return r.args[0], tuple(arg.args)
        return r.args[0], tuple(spine)

    # binders
    def bind(self, scope: dict, name: str):
        new = self.fresh("x" if name == "_" else name)
        scope2 = dict(scope)
        if name != "_":
            scope2[name] = new
        return new, scope2

    # computations
    def comp(self, r: Raw, scope: dict, mode: str):
        hoists: list = []
        node = self._comp(r, scope, mode, hoists)
        let_cls = S.Let if mode == "user" else S.KLet
        for name, bound in reversed(hoists):
            node = let_cls(bound, S.Bind((name,), node), pos=bound.pos)
        return node

    def _comp(self, r: Raw, scope: dict, mode: str, hoists: list):
        k, a, pos = r.kind, r.args, r.pos
        user = mode == "user"
        if k == "paren":
            inner = a[0]
            if inner.kind == "cont":
                raise ParseError("unexpected continuation", inner.pos)
            return self._comp(inner, scope, mode, hoists)
        if k == "seq":
            first = self.comp(a[0], scope, mode)
            name = self.fresh("u")
            rest = self.comp(a[1], scope, mode)
            cls = S.Let if user else S.KLet
            return cls(first, S.Bind((name,), rest), pos=pos)
        if k == "let":
            pat, annot, bound, body = a
            m = self.bound_comp(bound, annot, scope, mode, pos)
            return self.let_pattern(m, pat, body, scope, mode, pos)
        if k == "toplet":
            raise ParseError("expected 'in' after a local let binding", pos)
        if k == "try":
            m, clauses = a
            body = self.comp(m, scope, mode)
            ret, handlers = self.handler_clauses(clauses, scope, mode, "try", pos)
            return (S.Try if user else S.KTry)(body, ret, handlers, pos=pos)
        if k == "using":
            if not user:
                raise ParseError("'using ... run' is only available in user mode", pos)
            rr, w, m, fin = a
            rv = self.value(rr, scope, mode, hoists)
            wv = self.value(w, scope, mode, hoists)
            return S.Run(rv, wv, self.comp(m, scope, "user"), self.finally_clauses(fin, scope, pos), pos=pos)
        if k == "kernel":
            if not user:
                raise ParseError("'kernel ... finally' is only available in user mode", pos)
            kk, w, fin = a
            wv = self.value(w, scope, mode, hoists)
            return S.KernelSwitch(self.comp(kk, scope, "kernel"), wv, self.finally_clauses(fin, scope, pos), pos=pos)
        if k == "user":
            if user:
                raise ParseError("'user ... with' is only available in kernel mode", pos)
            m, clauses = a
            body = self.comp(m, scope, "user")
            ret, handlers = self.handler_clauses(clauses, scope, "kernel", "user", pos)
            return S.UserSwitch(body, ret, handlers, pos=pos)
        if k == "if":
            c, then_, else_ = a
            cv = self.value(c, scope, mode, hoists)
            test = S.Const("test", (cv,), pos=c.pos)
            left = S.Bind((self.fresh("u"),), self.comp(then_, scope, mode))
            right = S.Bind((self.fresh("u"),), self.comp(else_, scope, mode))
            return (S.MatchSum if user else S.KMatchSum)(test, left, right, pos=pos)
        if k == "match":
            return self.match(a, scope, mode, hoists, pos)
        if k == "return":
            v = self.value(a[0], scope, mode, hoists)
            return (S.Return if user else S.KReturn)(v, pos=pos)
        if k == "raise":
            name, annot, state = a
            if self.tables.declared(name) != "exception":
                raise ParseError(f"undeclared exception {name}", pos)
            if user:
                if state is not None:
                    raise ParseError("user-mode raise takes no state annotation", pos)
                return S.Raise(name, annot, pos=pos)
            return S.KRaise(name, None if annot is None else (annot, state), pos=pos)
        if k == "kill":
            name, annot, state = a
            if user:
                raise ParseError("'kill' is only available in kernel mode", pos)
            if self.tables.declared(name) != "signal":
                raise ParseError(f"undeclared signal {name}", pos)
            return S.Kill(name, None if annot is None else (annot, state), pos=pos)
        if k == "getenv":
            if user:
                raise ParseError("'getenv' is only available in kernel mode", pos)
            arg = a[0]
            if arg.kind == "paren" and arg.args[0].kind == "cont":
                c, body = arg.args[0].args
                new, scope2 = self.bind(scope, c)
                return S.Getenv(S.Bind((new,), self.comp(body, scope2, mode)), pos=pos)
            if arg.kind == "unit":
                c = self.fresh("c")
                return S.Getenv(S.Bind((c,), S.KReturn(S.Var(c, pos=pos), pos=pos)), pos=pos)
            raise ParseError("getenv expects '(c. K)' or '()'", arg.pos)
        if k == "setenv":
            if user:
                raise ParseError("'setenv' is only available in kernel mode", pos)
            arg = a[0]
            if arg.kind == "tuple" and len(arg.args) == 2 and not self.is_value_form(arg.args[1], scope):
                v = self.value(arg.args[0], scope, mode, hoists)
                return S.Setenv(v, self.comp(arg.args[1], scope, mode), pos=pos)
            v = self.value(arg, scope, mode, hoists)
            return S.Setenv(v, S.KReturn(S.UnitVal(pos=pos), pos=pos), pos=pos)
        if k == "app":
            f, arg = a
            if f.kind == "var" and self.is_op(f.args[0], scope):
                return self.op_call(f.args[0], arg, scope, mode, hoists, pos)
            if self.is_value_form(r, scope):
                raise ParseError("expected a computation but found a value (add 'return')", pos)
            fv = self.value(f, scope, mode, hoists)
            av = self.value(arg, scope, mode, hoists)
            return (S.App if user else S.KApp)(fv, av, pos=pos)
        if k == "var" and self.is_op(a[0], scope):
            raise ParseError(f"operation {a[0]} needs an argument", pos)
        if k == "cont":
            raise ParseError("unexpected continuation", pos)
        raise ParseError("expected a computation but found a value (add 'return')", pos)

    def bound_comp(self, bound: Raw, annot, scope, mode, pos):
        """Elaborate the right-hand side of a let; a value ``V`` means ``return V``."""
        if annot is None and not self.is_value_form(bound, scope):
            return self.comp(bound, scope, mode)
        if self.is_value_form(bound, scope):
            hoists: list = []
            v = self.value(bound, scope, mode, hoists)
            if annot is not None:
                v = S.Ascribe(v, annot, pos=pos)
            node = (S.Return if mode == "user" else S.KReturn)(v, pos=pos)
            let_cls = S.Let if mode == "user" else S.KLet
            for name, b in reversed(hoists):
                node = let_cls(b, S.Bind((name,), node), pos=b.pos)
            return node
        m = self.comp(bound, scope, mode)
        t = self.fresh("t")
        ret_cls = S.Return if mode == "user" else S.KReturn
        let_cls = S.Let if mode == "user" else S.KLet
        return let_cls(m, S.Bind((t,), ret_cls(S.Ascribe(S.Var(t, pos=pos), annot, pos=pos), pos=pos)), pos=pos)

    def let_pattern(self, m, pat, body: Raw, scope, mode, pos):
        let_cls = S.Let if mode == "user" else S.KLet
        if isinstance(pat, str):
            new, scope2 = self.bind(scope, pat)
            return let_cls(m, S.Bind((new,), self.comp(body, scope2, mode)), pos=pos)
        p = self.fresh("p")
        return let_cls(m, S.Bind((p,), self.destructure(S.Var(p, pos=pos), pat, body, scope, mode, pos)), pos=pos)

    def destructure(self, v, pat, body: Raw, scope, mode, pos):
        return self.destructure_k(v, pat, scope, mode, pos, lambda s: self.comp(body, s, mode))

    def destructure_k(self, v, pat, scope, mode, pos, k):
        """Bind ``pat`` against value ``v`` and continue with ``k(scope)``."""
        user = mode == "user"
        if isinstance(pat, str):
            new, scope2 = self.bind(scope, pat)
            ret = (S.Return if user else S.KReturn)(v, pos=pos)
            return (S.Let if user else S.KLet)(ret, S.Bind((new,), k(scope2)), pos=pos)
        return self.pair_match(v, pat, scope, mode, pos, k)

    def pair_match(self, v, pat, scope, mode, pos, k):
        names, pending, scope2 = [], [], scope
        for part in pat:
            if isinstance(part, str):
                new, scope2 = self.bind(scope2, part)
                names.append(new)
            else:
                new = self.fresh("p")
                names.append(new)
                pending.append((new, part))

        def chain(s, items):
            if not items:
                return k(s)
            (name, sub), rest = items[0], items[1:]
            return self.destructure_k(S.Var(name, pos=pos), sub, s, mode, pos, lambda s2: chain(s2, rest))

        cls = S.MatchPair if mode == "user" else S.KMatchPair
        return cls(v, S.Bind(tuple(names), chain(scope2, pending)), pos=pos)

    def op_call(self, op, arg: Raw, scope, mode, hoists, pos):
        sig = self.tables.operations[op]
        user = mode == "user"
        cls = S.Op if user else S.KOp
        ret_cls = S.Return if user else S.KReturn
        raise_cls = S.Raise if user else S.KRaise
        items = arg.args if arg.kind == "tuple" else ()
        if len(items) in (2, 3) and items[1].kind == "cont":
            v = self.value(items[0], scope, mode, hoists)
            x, body = items[1].args
            new, scope2 = self.bind(scope, x)
            cont = S.Bind((new,), self.comp(body, scope2, mode))
            given = {}
            if len(items) == 3:
                block = items[2]
                if block.kind != "block" or block.args[1] is not None:
                    raise ParseError("expected exception continuations '{e -> N, ...}'", block.pos)
                for c in block.args[0]:
                    if c.kind != "handler":
                        raise ParseError("expected an exception continuation 'e -> N'", c.pos)
                    if c.name not in sig.excs:
                        raise ParseError(f"{c.name} is not among the exceptions of {op}", c.pos)
                    if c.name in given:
                        raise ParseError(f"duplicate continuation for {c.name}", c.pos)
                    given[c.name] = self.comp(c.body, scope, mode)
            handlers = tuple(
                (e, given[e] if e in given else raise_cls(e, pos=pos)) for e in sorted(sig.excs)
            )
            return cls(op, v, cont, handlers, pos=pos)
        v = self.value(arg, scope, mode, hoists)
        x = self.fresh("y")
        handlers = tuple((e, raise_cls(e, pos=pos)) for e in sorted(sig.excs))
        return cls(op, v, S.Bind((x,), ret_cls(S.Var(x, pos=pos), pos=pos)), handlers, pos=pos)

    def match(self, a, scope, mode, hoists, pos):
        v_raw, clauses, annot, state = a
        user = mode == "user"
        v = self.value(v_raw, scope, mode, hoists)
        if not clauses:
            if annot is None:
                raise ParseError("an empty match needs a result annotation ': X'", pos)
            if user:
                if state is not None:
                    raise ParseError("user-mode empty match takes no state annotation", pos)
                return S.MatchEmpty(v, annot, pos=pos)
            return S.KMatchEmpty(v, (annot, state), pos=pos)
        kinds = [c.kind for c in clauses]
        if kinds == ["pair"]:
            c = clauses[0]
            return self.pair_match(v, c.pat, scope, mode, pos, lambda s: self.comp(c.body, s, mode))
        if sorted(kinds) == ["inl", "inr"]:
            binds = {}
            for c in clauses:
                if isinstance(c.pat, str):
                    new, scope2 = self.bind(scope, c.pat)
                    binds[c.kind] = S.Bind((new,), self.comp(c.body, scope2, mode))
                else:
                    p = self.fresh("p")
                    binds[c.kind] = S.Bind((p,), self.destructure(S.Var(p, pos=c.pos), c.pat, c.body, scope, mode, c.pos))
            return (S.MatchSum if user else S.KMatchSum)(v, binds["inl"], binds["inr"], pos=pos)
        raise ParseError("match clauses must be '(x, y) -> ...' or 'inl x -> ..., inr y -> ...'", pos)

    def handler_clauses(self, clauses, scope, mode, what, pos):
        ret = None
        handlers = []
        seen = set()
        for c in clauses:
            if c.kind == "return":
                if ret is not None:
                    raise ParseError("duplicate return clause", c.pos)
                if c.state_var is not None:
                    raise ParseError(f"'{what}' return clauses do not bind a state", c.pos)
                if isinstance(c.pat, str):
                    new, scope2 = self.bind(scope, c.pat)
                    ret = S.Bind((new,), self.comp(c.body, scope2, mode))
                else:
                    p = self.fresh("p")
                    ret = S.Bind((p,), self.destructure(S.Var(p, pos=c.pos), c.pat, c.body, scope, mode, c.pos))
            elif c.kind == "raise":
                if self.tables.declared(c.name) != "exception":
                    raise ParseError(f"undeclared exception {c.name}", c.pos)
                if c.name in seen:
                    raise ParseError(f"duplicate clause for exception {c.name}", c.pos)
                if c.state_var is not None:
                    raise ParseError(f"'{what}' raise clauses do not bind a state", c.pos)
                seen.add(c.name)
                handlers.append((c.name, self.comp(c.body, scope, mode)))
            else:
                raise ParseError(f"unexpected clause in '{what} ... with'", c.pos)
        if ret is None:
            x = self.fresh("x")
            ret = S.Bind((x,), (S.Return if mode == "user" else S.KReturn)(S.Var(x, pos=pos), pos=pos))
        return ret, tuple(handlers)

    def finally_clauses(self, clauses, scope, pos) -> S.Finally:
        ret = None
        raises, kills = [], []
        seen = set()
        for c in clauses:
            if c.kind == "return":
                if ret is not None:
                    raise ParseError("duplicate return clause", c.pos)
                cname = c.state_var or "_"
                if isinstance(c.pat, str):
                    new_x, scope2 = self.bind(scope, c.pat)
                    new_c, scope2 = self.bind(scope2, cname)
                    ret = S.Bind((new_x, new_c), self.comp(c.body, scope2, "user"))
                else:
                    p = self.fresh("p")
                    new_c, scope2 = self.bind(scope, cname)
                    body = self.destructure(S.Var(p, pos=c.pos), c.pat, c.body, scope2, "user", c.pos)
                    ret = S.Bind((p, new_c), body)
            elif c.kind in ("raise", "kill"):
                kind = "exception" if c.kind == "raise" else "signal"
                if self.tables.declared(c.name) != kind:
                    raise ParseError(f"undeclared {kind} {c.name}", c.pos)
                if (c.kind, c.name) in seen:
                    raise ParseError(f"duplicate finally clause for {c.name}", c.pos)
                seen.add((c.kind, c.name))
                if c.kind == "raise":
                    new_c, scope2 = self.bind(scope, c.state_var or "_")
                    raises.append((c.name, S.Bind((new_c,), self.comp(c.body, scope2, "user"))))
                else:
                    kills.append((c.name, self.comp(c.body, scope, "user")))
            else:
                raise ParseError("unexpected clause in a finally block", c.pos)
        if ret is None:
            raise ParseError("a finally block needs a 'return x @ c -> ...' clause", pos)
        return S.Finally(ret, tuple(raises), tuple(kills), pos=pos)

    # values
    def value(self, r: Raw, scope: dict, mode: str, hoists: list):
        k, a, pos = r.kind, r.args, r.pos
        if k == "var":
            name = a[0]
            if name in scope:
                return S.Var(scope[name], pos=pos)
            if name in self.tables.externals:
                return S.Var(name, pos=pos)
            if name in self.tables.operations:
                raise ParseError(f"operation {name} used as a value", pos)
            if name in self.tables.constants:
                raise ParseError(f"constant {name} needs arguments", pos)
            raise ParseError(f"unbound variable {name}", pos)
        if k == "lit":
            return S.Lit(a[0], pos=pos)
        if k == "unit":
            return S.UnitVal(pos=pos)
        if k == "paren":
            if a[0].kind == "cont":
                raise ParseError("unexpected continuation", a[0].pos)
            return self.value(a[0], scope, mode, hoists)
        if k == "tuple":
            items = [self.value(i, scope, mode, hoists) for i in a]
            out = items[-1]
            for item in reversed(items[:-1]):
                out = S.Pair(item, out, pos=pos)
            return out
        if k == "ascribe":
            inner = self.value(a[0], scope, mode, hoists)
            if isinstance(inner, (S.Inl, S.Inr)) and inner.annot is None and isinstance(a[1], T.TSum):
                # an ascribed injection carries its sum type directly
                return type(inner)(inner.value, a[1], pos=inner.pos)
            return S.Ascribe(inner, a[1], pos=pos)
        if k in ("inl", "inr"):
            cls = S.Inl if k == "inl" else S.Inr
            return cls(self.value(a[0], scope, mode, hoists), pos=pos)
        if k == "fun":
            x, ty, _state, body = a
            new, scope2 = self.bind(scope, x)
            return S.Fun(ty, S.Bind((new,), self.comp(body, scope2, "user")), pos=pos)
        if k == "funK":
            x, ty, state, body = a
            new, scope2 = self.bind(scope, x)
            return S.FunK(ty, state, S.Bind((new,), self.comp(body, scope2, "kernel")), pos=pos)
        if k == "block":
            clauses, state = a
            if any(c.kind != "coop" for c in clauses):
                raise ParseError("runner clauses have the form 'op x -> K'", pos)
            if state is None:
                raise ParseError("a runner literal needs a state annotation '@ C'", pos)
            seen = set()
            out = []
            for c in clauses:
                if self.tables.declared(c.name) != "operation":
                    raise ParseError(f"undeclared operation {c.name}", c.pos)
                if c.name in seen:
                    raise ParseError(f"duplicate co-operation for {c.name}", c.pos)
                seen.add(c.name)
                if isinstance(c.pat, str):
                    new, scope2 = self.bind(scope, c.pat)
                    body = self.comp(c.body, scope2, "kernel")
                else:
                    new = self.fresh("p")
                    body = self.destructure(S.Var(new, pos=c.pos), c.pat, c.body, scope, "kernel", c.pos)
                out.append((c.name, S.Bind((new,), body)))
            return S.RunnerLit(tuple(out), state, pos=pos)
        if k == "bin":
            op, left, right = a
            return S.Const(op, (self.value(left, scope, mode, hoists), self.value(right, scope, mode, hoists)), pos=pos)
        ca = self.const_app(r, scope) if k == "app" else None
        if ca is not None:
            name, raw_args = ca
            args = tuple(self.value(x, scope, mode, hoists) for x in raw_args)
            return S.Const(name, args, pos=pos)
        if k == "cont":
            raise ParseError("unexpected continuation", pos)
        # a computation in value position
        if self.strict:
            raise ParseError("computation in value position (hoisting disabled by --strict-values)", pos)
        name = self.fresh("t")
        hoists.append((name, self.comp(r, scope, mode)))
        return S.Var(name, pos=pos)


def _source_idents(tokens) -> frozenset:
    return frozenset(t.text for t in tokens if t.kind == "IDENT")


def parse_program(source: str, filename: str = "<input>", strict_values: bool = False, fresh_start: int = 0) -> Program:
    tokens = tokenize(source)
    tables = T.EffectTables()
    rp = RawParser(tokens, tables)
    decls, bindings_raw, main_raw = rp.program()
    supply = S.NameSupply(fresh_start, reserved=_source_idents(tokens))
    el = Elaborator(tables, supply, strict_values)
    scope: dict = {}
    bindings = []
    for b in bindings_raw:
        pat, annot, bound = b.args
        if not isinstance(pat, str):
            raise ParseError("top-level bindings bind a single name", b.pos)
        comp = el.bound_comp(bound, annot, scope, "user", b.pos)
        new, scope = el.bind(scope, pat)
        bindings.append((pat, new, annot, comp))
    main = el.comp(main_raw, scope, "user") if main_raw is not None else None
    return Program(tables, bindings, main, filename, decls)


def parse_type(text: str, tables: T.EffectTables | None = None):
    tables = tables or T.EffectTables()
    rp = RawParser(tokenize(text), tables)
    t = rp.parse_type()
    if rp.tok.kind != "EOF":
        rp.error("expected end of type")
    return t


def parse_comp(text: str, tables: T.EffectTables, mode: str = "user", scope: dict | None = None, strict_values: bool = False, fresh_start: int = 0):
    """Parse a single computation against existing declarations.

    Variables in ``scope`` (mapping source name to term name) may occur free.
    """
    tokens = tokenize(text)
    rp = RawParser(tokens, tables)
    raw = rp.expr()
    if rp.tok.kind != "EOF":
        rp.error("expected end of input")
    supply = S.NameSupply(fresh_start, reserved=_source_idents(tokens))
    return Elaborator(tables, supply, strict_values).comp(raw, dict(scope or {}), mode)


def parse_value(text: str, tables: T.EffectTables, scope: dict | None = None, fresh_start: int = 0):
    tokens = tokenize(text)
    rp = RawParser(tokens, tables)
    raw = rp.expr()
    if rp.tok.kind != "EOF":
        rp.error("expected end of input")
    supply = S.NameSupply(fresh_start, reserved=_source_idents(tokens))
    hoists: list = []
    v = Elaborator(tables, supply, True).value(raw, dict(scope or {}), "user", hoists)
    return v
