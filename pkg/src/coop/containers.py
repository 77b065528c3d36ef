"""Top-level runners implemented in the host.

A container answers the operations that escape every source-level runner.
Each reply is a :class:`Reply`: a return value, an exception from the
operation's signature, or a signal that ends the program. The filesystem
containers also provide the native runner ``fileIO`` whose ``write``
co-operation talks to the container directly, so a failing write surfaces as
a co-operation signal that the enclosing ``finally`` block can observe.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .evaluator import KKill, KRaise, KRet
from .values import UNIT_V, NativeRunner


@dataclass(frozen=True)
class Reply:
    kind: str  # "return" | "raise" | "kill"
    value: object = UNIT_V

    @staticmethod
    def ret(v=UNIT_V) -> "Reply":
        return Reply("return", v)

    @staticmethod
    def raise_(e: str) -> "Reply":
        return Reply("raise", e)

    @staticmethod
    def kill(s: str) -> "Reply":
        return Reply("kill", s)


class Container:
    name = "abstract"
    signature: frozenset = frozenset()
    # exceptions each handled operation may raise
    op_excs: dict = {}

    def handle(self, op: str, arg) -> Reply:
        raise NotImplementedError

    def externals(self) -> dict:
        return {}

    def reset(self) -> None:
        pass

    def teardown(self) -> None:
        pass


class PureContainer(Container):
    """Handles nothing; any residual operation is an error."""

    name = "pure"


class StateContainer(Container):
    """A memory of integer cells, every cell initially 0."""

    name = "state"
    signature = frozenset({"memread", "memset"})
    op_excs = {"memread": frozenset(), "memset": frozenset()}

    def __init__(self):
        self.cells: dict[int, int] = {}

    def reset(self):
        self.cells = {}

    def handle(self, op, arg):
        if op == "memread":
            return Reply.ret(self.cells.get(arg, 0))
        if op == "memset":
            addr, val = arg
            self.cells[addr] = val
            return Reply.ret()
        raise KeyError(op)


# -- filesystems ---------------------------------------------------------------


def _file_io_runner(container) -> NativeRunner:
    def write(session, arg, fh, inst):
        session.emit("op", 0, op="write")
        reply = container.handle("write", (fh, arg))
        if reply.kind == "return":
            return KRet(UNIT_V, fh)
        if reply.kind == "raise":
            return KRaise(reply.value, fh)
        return KKill(reply.value)

    return NativeRunner("fileIO", {"write": write})


class _FsBase(Container):
    signature = frozenset({"open", "close"})
    op_excs = {"open": frozenset(), "close": frozenset(), "write": frozenset({"QuotaExceeded"})}

    def __init__(self):
        self.replies: list[tuple[str, object, Reply]] = []
        self.calls: dict[str, int] = {"open": 0, "write": 0, "close": 0}

    def externals(self):
        return {"fileIO": _file_io_runner(self)}

    def handle(self, op, arg):
        if op not in self.calls:
            raise KeyError(op)
        self.calls[op] += 1
        reply = getattr(self, "_" + op)(arg)
        self.replies.append((op, arg, reply))
        return reply


@dataclass
class FsSimConfig:
    quota: int = 1 << 20
    fail_at_write: int | None = None  # 0-based index over all writes
    files: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.quota < 0:
            raise ValueError("quota must be non-negative")

    @classmethod
    def from_json(cls, data: dict) -> "FsSimConfig":
        return cls(
            quota=int(data.get("quota", 1 << 20)),
            fail_at_write=data.get("failAtWrite"),
            files=dict(data.get("files", {})),
        )

    @classmethod
    def load(cls, path) -> "FsSimConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SimHandle:
    path: str
    closed: bool = False


class FsSimContainer(_FsBase):
    """In-memory filesystem with a per-file quota and an injectable fault."""

    name = "fs-sim"

    def __init__(self, config: FsSimConfig | None = None):
        super().__init__()
        self.config = config or FsSimConfig()
        self.reset()

    def reset(self):
        self.files = dict(self.config.files)
        self.handles: list[SimHandle] = []
        self.write_index = 0
        self.replies = []
        self.calls = {"open": 0, "write": 0, "close": 0}

    def _open(self, path):
        self.files[path] = ""
        self.handles.append(SimHandle(path))
        return Reply.ret(len(self.handles) - 1)

    def _write(self, arg):
        fh, s = arg
        index = self.write_index
        self.write_index += 1
        if not 0 <= fh < len(self.handles) or self.handles[fh].closed:
            return Reply.kill("IOError")
        if self.config.fail_at_write is not None and index == self.config.fail_at_write:
            return Reply.kill("IOError")
        h = self.handles[fh]
        if len(self.files[h.path]) + len(s) > self.config.quota:
            return Reply.raise_("QuotaExceeded")
        self.files[h.path] += s
        return Reply.ret()

    def _close(self, fh):
        if not 0 <= fh < len(self.handles):
            return Reply.kill("IOError")
        if self.handles[fh].closed:
            return Reply.kill("DoubleClose")
        self.handles[fh].closed = True
        return Reply.ret()

    def is_closed(self, path: str) -> bool:
        hs = [h for h in self.handles if h.path == path]
        return bool(hs) and all(h.closed for h in hs)

    def snapshot(self) -> dict:
        return {
            "files": dict(self.files),
            "handles": [(h.path, h.closed) for h in self.handles],
            "replies": [(op, arg, r.kind, r.value) for op, arg, r in self.replies],
        }


class FsRealContainer(_FsBase):
    """Host filesystem confined to a sandbox directory."""

    name = "fs-real"

    def __init__(self, sandbox):
        super().__init__()
        self.sandbox = Path(sandbox).resolve()
        self.handles: list = []

    def reset(self):
        self.teardown()
        self.handles = []
        self.replies = []
        self.calls = {"open": 0, "write": 0, "close": 0}

    def teardown(self):
        for f in self.handles:
            if f is not None and not f.closed:
                f.close()

    def _resolve(self, path: str) -> Path | None:
        target = (self.sandbox / path).resolve()
        if target != self.sandbox and self.sandbox not in target.parents:
            return None
        return target

    def _open(self, path):
        target = self._resolve(path)
        if target is None:
            return Reply.kill("SandboxViolation")
        try:
            self.handles.append(open(target, "w", encoding="utf-8"))
        except OSError:
            return Reply.kill("IOError")
        return Reply.ret(len(self.handles) - 1)

    def _write(self, arg):
        fh, s = arg
        if not 0 <= fh < len(self.handles) or self.handles[fh].closed:
            return Reply.kill("IOError")
        try:
            self.handles[fh].write(s)
            self.handles[fh].flush()
            os.fsync(self.handles[fh].fileno())
        except OSError:
            return Reply.kill("IOError")
        return Reply.ret()

    def _close(self, fh):
        if not 0 <= fh < len(self.handles):
            return Reply.kill("IOError")
        if self.handles[fh].closed:
            return Reply.kill("DoubleClose")
        try:
            self.handles[fh].close()
        except OSError:
            return Reply.kill("IOError")
        return Reply.ret()


CONTAINERS = ("pure", "state", "fs-sim", "fs-real")


def make_container(name: str, fs_config: FsSimConfig | None = None, sandbox=None) -> Container:
    if name == "pure":
        return PureContainer()
    if name == "state":
        return StateContainer()
    if name == "fs-sim":
        return FsSimContainer(fs_config)
    if name == "fs-real":
        return FsRealContainer(sandbox if sandbox is not None else os.getcwd())
    raise ValueError(f"unknown container {name!r}")
