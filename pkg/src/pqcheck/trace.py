"""Operations, traces and the line-oriented trace file format.

A trace file is UTF-8 text. Lines starting with ``#`` are comments; the
canonical header is ``# N=<len> U=<bound>``. Every other non-blank line is
``i <value>`` or ``e <value>``, optionally followed by a timestamp column::

    # N=4 U=5
    i 2
    i 5
    e 5
    e 2
"""

from __future__ import annotations

import io
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Optional

MAX_VALUE = 2**40

INSERT = "i"
EXTRACT = "e"

_HEADER_RE = re.compile(r"^#\s*N=(\d+)\s+U=(\d+)\s*$")


class TraceFormatError(ValueError):
    """Raised for malformed trace text."""


class Operation(NamedTuple):
    kind: str
    value: int
    timestamp: Optional[int] = None

    @property
    def is_insert(self) -> bool:
        return self.kind == INSERT

    def untimed(self) -> "Operation":
        return Operation(self.kind, self.value)

    def __repr__(self) -> str:
        name = "ins" if self.kind == INSERT else "ext"
        if self.timestamp is None:
            return f"{name}({self.value})"
        return f"{name}({self.value})@{self.timestamp}"


def ins(value: int, timestamp: Optional[int] = None) -> Operation:
    return Operation(INSERT, value, timestamp)


def ext(value: int, timestamp: Optional[int] = None) -> Operation:
    return Operation(EXTRACT, value, timestamp)


@dataclass(frozen=True)
class Trace:
    """An immutable operation sequence with a declared value bound.

    ``u_bound`` defaults to the largest value present (0 for the empty
    trace) and may be declared larger, never smaller.
    """

    ops: tuple[Operation, ...] = ()
    u_bound: Optional[int] = None
    timestamped: bool = field(init=False)

    def __post_init__(self) -> None:
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        top = 0
        stamped = 0
        for op in ops:
            if op.kind not in (INSERT, EXTRACT):
                raise ValueError(f"unknown operation kind {op.kind!r}")
            if not 0 <= op.value <= MAX_VALUE:
                raise ValueError(f"value {op.value} outside [0, 2^40]")
            if op.timestamp is not None:
                if op.timestamp < 0:
                    raise ValueError("timestamps must be non-negative")
                stamped += 1
            top = max(top, op.value)
        if stamped not in (0, len(ops)):
            raise ValueError("either every operation carries a timestamp or none does")
        if self.u_bound is None:
            object.__setattr__(self, "u_bound", top)
        elif self.u_bound < top:
            raise ValueError(f"u_bound {self.u_bound} below max value {top}")
        elif self.u_bound > MAX_VALUE:
            raise ValueError("u_bound exceeds 2^40")
        object.__setattr__(self, "timestamped", bool(ops) and stamped == len(ops))

    @property
    def n_len(self) -> int:
        return len(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[Operation]:
        return iter(self.ops)

    def forward(self) -> Iterator[Operation]:
        return iter(self.ops)

    def backward(self) -> Iterator[Operation]:
        return reversed(self.ops)

    def untimed(self) -> "Trace":
        return Trace(tuple(op.untimed() for op in self.ops), self.u_bound)

    def stats(self) -> "StreamStats":
        return compute_stats(self)


@dataclass(frozen=True)
class StreamStats:
    valley_count: int
    is_balanced: bool
    has_duplicates: bool


class _StatsAccumulator:
    def __init__(self) -> None:
        self.valleys = 0
        self.balance: Counter[int] = Counter()
        self.inserted: set[int] = set()
        self.duplicates = False
        self._prev: Optional[str] = None

    def add(self, op: Operation) -> None:
        if op.kind == INSERT:
            if self._prev == EXTRACT:
                self.valleys += 1
            if op.value in self.inserted:
                self.duplicates = True
            self.inserted.add(op.value)
            self.balance[op.value] += 1
        else:
            self.balance[op.value] -= 1
        self._prev = op.kind

    def result(self) -> StreamStats:
        balanced = not any(self.balance.values())
        return StreamStats(self.valleys, balanced, self.duplicates)


def compute_stats(t: Iterable[Operation]) -> StreamStats:
    acc = _StatsAccumulator()
    for op in t:
        acc.add(op)
    return acc.result()


def _parse_op(line: str, lineno: int) -> Operation:
    parts = line.split()
    if len(parts) not in (2, 3) or parts[0] not in (INSERT, EXTRACT):
        raise TraceFormatError(f"line {lineno}: malformed operation {line!r}")
    try:
        nums = [int(tok, 10) for tok in parts[1:]]
    except ValueError:
        raise TraceFormatError(f"line {lineno}: non-integer field in {line!r}") from None
    if any(x < 0 or not tok.isdigit() for x, tok in zip(nums, parts[1:])):
        raise TraceFormatError(f"line {lineno}: fields must be non-negative decimals")
    if nums[0] > MAX_VALUE:
        raise TraceFormatError(f"line {lineno}: value exceeds 2^40")
    return Operation(parts[0], nums[0], nums[1] if len(nums) == 2 else None)


def _parse_header(line: str) -> Optional[tuple[int, int]]:
    m = _HEADER_RE.match(line.strip())
    if m is None:
        return None
    return int(m.group(1)), int(m.group(2))


def _iter_text_lines(text) -> Iterator[str]:
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if isinstance(text, str):
        return iter(text.splitlines())
    return (line.rstrip("\r\n") for line in text)


def parse_trace(text) -> Trace:
    """Parse trace text (``str``, ``bytes`` or a text stream) into a Trace."""
    header = None
    ops = []
    columns = None
    for lineno, line in enumerate(_iter_text_lines(text), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            h = _parse_header(stripped)
            if h is not None:
                header = h
            continue
        op = _parse_op(stripped, lineno)
        cols = 3 if op.timestamp is not None else 2
        if columns is None:
            columns = cols
        elif cols != columns:
            raise TraceFormatError(f"line {lineno}: mixed timestamped and plain lines")
        ops.append(op)
    u_bound = max((op.value for op in ops), default=0)
    if header is not None:
        n_hdr, u_hdr = header
        if n_hdr != len(ops):
            raise TraceFormatError(f"header declares N={n_hdr} but {len(ops)} operations follow")
        if u_hdr < u_bound:
            raise TraceFormatError(f"value {u_bound} exceeds header U={u_hdr}")
        if u_hdr > MAX_VALUE:
            raise TraceFormatError("header U exceeds 2^40")
        u_bound = u_hdr
    return Trace(tuple(ops), u_bound)


def format_op(op: Operation) -> str:
    if op.timestamp is None:
        return f"{op.kind} {op.value}"
    return f"{op.kind} {op.value} {op.timestamp}"


def serialize_trace(t: Trace, comments: Iterable[str] = ()) -> bytes:
    buf = io.StringIO()
    buf.write(f"# N={t.n_len} U={t.u_bound}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    for op in t.ops:
        buf.write(format_op(op))
        buf.write("\n")
    return buf.getvalue().encode("utf-8")


def iter_lines_reversed(fh: IO[bytes], chunk_size: int = 1 << 16) -> Iterator[bytes]:
    """Yield the non-empty lines of a seekable binary file from last to first.

    Reads fixed-size chunks from the tail so memory stays bounded by the
    chunk size plus the longest line.
    """
    fh.seek(0, os.SEEK_END)
    pos = fh.tell()
    tail = b""
    while pos > 0:
        step = min(chunk_size, pos)
        pos -= step
        fh.seek(pos)
        chunk = fh.read(step) + tail
        lines = chunk.split(b"\n")
        tail = lines[0]
        for line in reversed(lines[1:]):
            if line:
                yield line
    if tail:
        yield tail


class TraceFile:
    """A trace file readable forward and backward without loading it whole.

    Construction performs one forward scan to learn N, U, the timestamp
    layout and the stream statistics; ``forward()`` and ``backward()`` then
    re-read the file each time they are called.
    """

    def __init__(self, path: str | os.PathLike, chunk_size: int = 1 << 16) -> None:
        self.path = os.fspath(path)
        self.chunk_size = chunk_size
        acc = _StatsAccumulator()
        header = None
        n = 0
        top = 0
        columns = None
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                stripped = line.strip()
                if not stripped:
                    continue
                if stripped.startswith("#"):
                    h = _parse_header(stripped)
                    if h is not None:
                        header = h
                    continue
                op = _parse_op(stripped, lineno)
                cols = 3 if op.timestamp is not None else 2
                if columns is None:
                    columns = cols
                elif cols != columns:
                    raise TraceFormatError(f"line {lineno}: mixed timestamped and plain lines")
                acc.add(op)
                n += 1
                top = max(top, op.value)
        if header is not None:
            if header[0] != n:
                raise TraceFormatError(f"header declares N={header[0]} but {n} operations follow")
            if header[1] < top:
                raise TraceFormatError(f"value {top} exceeds header U={header[1]}")
            top = header[1]
        self.n_len = n
        self.u_bound = top
        self.timestamped = columns == 3
        self._stats = acc.result()

    def __len__(self) -> int:
        return self.n_len

    def stats(self) -> StreamStats:
        return self._stats

    def forward(self) -> Iterator[Operation]:
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                stripped = line.strip()
                if stripped and not stripped.startswith("#"):
                    yield _parse_op(stripped, lineno)

    def backward(self) -> Iterator[Operation]:
        with open(self.path, "rb") as fh:
            for raw in iter_lines_reversed(fh, self.chunk_size):
                stripped = raw.decode("utf-8").strip()
                if stripped and not stripped.startswith("#"):
                    yield _parse_op(stripped, -1)

    def load(self) -> Trace:
        return Trace(tuple(self.forward()), self.u_bound)
