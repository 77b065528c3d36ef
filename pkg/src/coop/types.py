"""Types of the calculus: ground, value, user and kernel computation types.

Ground types are the value types built only from base types, ``unit``,
``empty``, products and sums; there is no separate wrapper class for them.
``TBot`` is an internal bottom type used by inference for unannotated
``raise``/``kill``/injections. It never appears in a source program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

BASE_TYPES = ("int", "bool", "str")


@dataclass(frozen=True)
class TBase:
    name: str


@dataclass(frozen=True)
class TUnit:
    pass


@dataclass(frozen=True)
class TEmpty:
    pass


@dataclass(frozen=True)
class TBot:
    pass


@dataclass(frozen=True)
class TProd:
    left: "ValueType"
    right: "ValueType"


@dataclass(frozen=True)
class TSum:
    left: "ValueType"
    right: "ValueType"


@dataclass(frozen=True)
class UserType:
    carrier: "ValueType"
    ops: frozenset = frozenset()
    excs: frozenset = frozenset()


@dataclass(frozen=True)
class KernelType:
    carrier: "ValueType"
    ops: frozenset
    excs: frozenset
    sigs: frozenset
    state: "ValueType"


@dataclass(frozen=True)
class TUserFun:
    arg: "ValueType"
    result: UserType


@dataclass(frozen=True)
class TKernelFun:
    arg: "ValueType"
    result: KernelType


@dataclass(frozen=True)
class TRunner:
    ops: frozenset
    ext: frozenset
    sigs: frozenset
    state: "ValueType"


ValueType = Union[TBase, TUnit, TEmpty, TBot, TProd, TSum, TUserFun, TKernelFun, TRunner]

INT = TBase("int")
BOOL = TBase("bool")
STR = TBase("str")
UNIT = TUnit()
EMPTY = TEmpty()
BOT = TBot()


# -- skeletal types ---------------------------------------------------------


@dataclass(frozen=True)
class SkUserFun:
    arg: object
    result: "SkUser"


@dataclass(frozen=True)
class SkKernelFun:
    arg: object
    result: "SkKernel"


@dataclass(frozen=True)
class SkRunner:
    state: ValueType


@dataclass(frozen=True)
class SkUser:
    carrier: object


@dataclass(frozen=True)
class SkKernel:
    carrier: object
    state: ValueType


def skeleton(t):
    """Erase all effect information, keeping ground types and kernel state."""
    if isinstance(t, (TBase, TUnit, TEmpty, TBot)):
        return t
    if isinstance(t, TProd):
        return TProd(skeleton(t.left), skeleton(t.right))
    if isinstance(t, TSum):
        return TSum(skeleton(t.left), skeleton(t.right))
    if isinstance(t, TUserFun):
        return SkUserFun(skeleton(t.arg), skeleton(t.result))
    if isinstance(t, TKernelFun):
        return SkKernelFun(skeleton(t.arg), skeleton(t.result))
    if isinstance(t, TRunner):
        return SkRunner(t.state)
    if isinstance(t, UserType):
        return SkUser(skeleton(t.carrier))
    if isinstance(t, KernelType):
        return SkKernel(skeleton(t.carrier), t.state)
    raise TypeError(f"not a type: {t!r}")


def is_ground(t) -> bool:
    if isinstance(t, (TBase, TUnit, TEmpty)):
        return True
    if isinstance(t, (TProd, TSum)):
        return is_ground(t.left) and is_ground(t.right)
    return False


# -- signatures -------------------------------------------------------------


@dataclass(frozen=True)
class OpSig:
    param: ValueType
    result: ValueType
    excs: frozenset = frozenset()


@dataclass(frozen=True)
class ConstSig:
    args: tuple
    result: ValueType


def builtin_constants() -> dict[str, ConstSig]:
    return {
        "+": ConstSig((INT, INT), INT),
        "-": ConstSig((INT, INT), INT),
        "*": ConstSig((INT, INT), INT),
        "=": ConstSig((INT, INT), BOOL),
        "<": ConstSig((INT, INT), BOOL),
        "concat": ConstSig((STR, STR), STR),
        "test": ConstSig((BOOL,), TSum(UNIT, UNIT)),
    }


@dataclass
class EffectTables:
    operations: dict = field(default_factory=dict)
    constants: dict = field(default_factory=builtin_constants)
    exceptions: set = field(default_factory=set)
    signals: set = field(default_factory=set)
    externals: dict = field(default_factory=dict)

    def declared(self, name: str) -> str | None:
        if name in self.operations:
            return "operation"
        if name in self.exceptions:
            return "exception"
        if name in self.signals:
            return "signal"
        if name in self.externals:
            return "external"
        return None

    def copy(self) -> "EffectTables":
        return EffectTables(
            dict(self.operations),
            dict(self.constants),
            set(self.exceptions),
            set(self.signals),
            dict(self.externals),
        )


# -- subtyping --------------------------------------------------------------


def subtype_value(x: ValueType, y: ValueType) -> bool:
    if isinstance(x, TBot):
        return True
    if isinstance(x, (TBase, TUnit, TEmpty)):
        return x == y
    if isinstance(x, TProd):
        return isinstance(y, TProd) and subtype_value(x.left, y.left) and subtype_value(x.right, y.right)
    if isinstance(x, TSum):
        return isinstance(y, TSum) and subtype_value(x.left, y.left) and subtype_value(x.right, y.right)
    if isinstance(x, TUserFun):
        return isinstance(y, TUserFun) and subtype_value(y.arg, x.arg) and subtype_user(x.result, y.result)
    if isinstance(x, TKernelFun):
        return isinstance(y, TKernelFun) and subtype_value(y.arg, x.arg) and subtype_kernel(x.result, y.result)
    if isinstance(x, TRunner):
        return (
            isinstance(y, TRunner)
            and y.ops <= x.ops
            and x.ext <= y.ext
            and x.sigs <= y.sigs
            and x.state == y.state
        )
    return False


def subtype_user(u: UserType, v: UserType) -> bool:
    return subtype_value(u.carrier, v.carrier) and u.ops <= v.ops and u.excs <= v.excs


def subtype_kernel(u: KernelType, v: KernelType) -> bool:
    return (
        subtype_value(u.carrier, v.carrier)
        and u.ops <= v.ops
        and u.excs <= v.excs
        and u.sigs <= v.sigs
        and u.state == v.state
    )


class NoJoin(Exception):
    pass


def join(x: ValueType, y: ValueType) -> ValueType:
    """Least upper bound under subtyping; raises NoJoin when none exists."""
    if isinstance(x, TBot):
        return y
    if isinstance(y, TBot):
        return x
    if isinstance(x, (TBase, TUnit, TEmpty)):
        if x == y:
            return x
        raise NoJoin(x, y)
    if isinstance(x, TProd) and isinstance(y, TProd):
        return TProd(join(x.left, y.left), join(x.right, y.right))
    if isinstance(x, TSum) and isinstance(y, TSum):
        return TSum(join(x.left, y.left), join(x.right, y.right))
    if isinstance(x, TUserFun) and isinstance(y, TUserFun):
        return TUserFun(meet(x.arg, y.arg), join_user(x.result, y.result))
    if isinstance(x, TKernelFun) and isinstance(y, TKernelFun):
        return TKernelFun(meet(x.arg, y.arg), join_kernel(x.result, y.result))
    if isinstance(x, TRunner) and isinstance(y, TRunner) and x.state == y.state:
        return TRunner(x.ops & y.ops, x.ext | y.ext, x.sigs | y.sigs, x.state)
    raise NoJoin(x, y)


def meet(x: ValueType, y: ValueType) -> ValueType:
    if isinstance(x, TBot) or isinstance(y, TBot):
        return BOT
    if isinstance(x, (TBase, TUnit, TEmpty)):
        if x == y:
            return x
        raise NoJoin(x, y)
    if isinstance(x, TProd) and isinstance(y, TProd):
        return TProd(meet(x.left, y.left), meet(x.right, y.right))
    if isinstance(x, TSum) and isinstance(y, TSum):
        return TSum(meet(x.left, y.left), meet(x.right, y.right))
    if isinstance(x, TUserFun) and isinstance(y, TUserFun):
        r1, r2 = x.result, y.result
        return TUserFun(join(x.arg, y.arg), UserType(meet(r1.carrier, r2.carrier), r1.ops & r2.ops, r1.excs & r2.excs))
    if isinstance(x, TKernelFun) and isinstance(y, TKernelFun):
        r1, r2 = x.result, y.result
        if r1.state != r2.state:
            raise NoJoin(x, y)
        return TKernelFun(
            join(x.arg, y.arg),
            KernelType(meet(r1.carrier, r2.carrier), r1.ops & r2.ops, r1.excs & r2.excs, r1.sigs & r2.sigs, r1.state),
        )
    if isinstance(x, TRunner) and isinstance(y, TRunner) and x.state == y.state:
        return TRunner(x.ops | y.ops, x.ext & y.ext, x.sigs & y.sigs, x.state)
    raise NoJoin(x, y)


def join_user(u: UserType, v: UserType) -> UserType:
    return UserType(join(u.carrier, v.carrier), u.ops | v.ops, u.excs | v.excs)


def join_kernel(u: KernelType, v: KernelType) -> KernelType:
    if u.state != v.state:
        raise NoJoin(u, v)
    return KernelType(join(u.carrier, v.carrier), u.ops | v.ops, u.excs | v.excs, u.sigs | v.sigs, u.state)


# -- printing ---------------------------------------------------------------


def _names(s) -> str:
    return "{" + ", ".join(sorted(s)) + "}"


def show_type(t, prec: int = 0) -> str:
    """Render a type in the concrete syntax accepted by the parser.

    Precedence levels: 0 = arrow, 1 = sum, 2 = product, 3 = atom.
    """
    if isinstance(t, TBase):
        return t.name
    if isinstance(t, TUnit):
        return "unit"
    if isinstance(t, TEmpty):
        return "empty"
    if isinstance(t, TBot):
        return "bot"
    if isinstance(t, TSum):
        s = f"{show_type(t.left, 1)} + {show_type(t.right, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(t, TProd):
        s = f"{show_type(t.left, 2)} * {show_type(t.right, 3)}"
        return f"({s})" if prec > 2 else s
    if isinstance(t, (TUserFun, TKernelFun)):
        s = f"{show_type(t.arg, 1)} -> {show_type(t.result)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, TRunner):
        s = f"{_names(t.ops)} => ({_names(t.ext)}, {_names(t.sigs)}, {show_type(t.state)})"
        return f"({s})" if prec > 0 else s
    if isinstance(t, UserType):
        return f"{show_type(t.carrier, 1)} ! ({_names(t.ops)}, {_names(t.excs)})"
    if isinstance(t, KernelType):
        return (
            f"{show_type(t.carrier, 1)} ! ({_names(t.ops)}, {_names(t.excs)}, "
            f"{_names(t.sigs)}, {show_type(t.state)})"
        )
    if isinstance(t, SkUserFun):
        return f"({show_type(t.arg, 1)} -> {show_type(t.result)})"
    if isinstance(t, SkKernelFun):
        return f"({show_type(t.arg, 1)} -> {show_type(t.result)})"
    if isinstance(t, SkRunner):
        return f"runner {show_type(t.state, 3)}"
    if isinstance(t, SkUser):
        return f"{show_type(t.carrier, 1)}!"
    if isinstance(t, SkKernel):
        return f"{show_type(t.carrier, 1)} @ {show_type(t.state, 3)}"
    raise TypeError(f"not a type: {t!r}")
