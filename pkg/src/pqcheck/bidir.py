"""Bidirectional two-pass priority-queue checker.

Each pass decomposes the letters read so far into dyadic blocks kept on a
stack: every letter opens a block of size 1 and the two topmost blocks merge
whenever their sizes agree, so at most ``log2(N) + 1`` blocks are live. A
block stores its fingerprint ``h``, the minimum extracted value ``m``
(``+inf`` if it holds no extraction) and its size. Inputs are padded to a
power-of-two length first.

In duplicates mode every block also tracks ``delta`` (inserts minus extracts
folded into ``h``; ``h`` is checked whenever it returns to zero) and ``cnt``
(unmatched copies of ``m`` folded into ``h``), which decides where equal
values go. An extraction of ``a`` also checks every block with ``m == a``:
apart from its ``cnt`` unmatched copies of ``m`` its fingerprint must be
zero. That extension is best-effort: it is tested against the oracle only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import chain
from typing import Iterable, Iterator, Optional

from .reverse import DuplicateInsertError, Rejected
from .trace import EXTRACT, INSERT, Operation, Trace

INF = math.inf
NEG_INF = -math.inf


class Direction(str, enum.Enum):
    LEFT_TO_RIGHT = "LeftToRight"
    RIGHT_TO_LEFT = "RightToLeft"


class BidirSite(str, enum.Enum):
    EXT_MIN_CHECK = "ExtMinCheck"
    FINAL_STACK_CHECK = "FinalStackCheck"
    INELIGIBLE_INSERT = "IneligibleInsert"
    DELTA_CHECK = "DeltaCheck"
    ODD_LENGTH = "OddLength"


@dataclass(slots=True)
class DyadicBlock:
    h: object  # field element (int, or an array of them in census runs)
    m: float   # int value, +inf, or -inf for the sentinel
    size: int
    delta: int = 0
    cnt: int = 0


@dataclass(frozen=True)
class BidirVerdict:
    accepted: bool
    failing_pass: Optional[Direction]
    reject_site: Optional[BidirSite]
    peak_stack_depth: int
    peak_bits: int
    pad_count: int

    def __bool__(self) -> bool:
        return self.accepted


def next_power_of_two(n: int) -> int:
    return 1 << max(n - 1, 0).bit_length()


def padding_ops(u_bound: int, pad_count: int) -> Iterator[Operation]:
    for j in range(pad_count // 2):
        yield Operation(INSERT, u_bound + 1 + j)
        yield Operation(EXTRACT, u_bound + 1 + j)


def padding_ops_reversed(u_bound: int, pad_count: int) -> Iterator[Operation]:
    for j in reversed(range(pad_count // 2)):
        yield Operation(EXTRACT, u_bound + 1 + j)
        yield Operation(INSERT, u_bound + 1 + j)


def pad_trace(t: Trace) -> tuple[Optional[Trace], int]:
    """Append fresh ``ins(a) ext(a)`` pairs up to the next power of two.

    Returns ``(None, 0)`` for odd lengths, which can never be legal.
    """
    n = t.n_len
    if n % 2:
        return None, 0
    pad = next_power_of_two(n) - n if n else 0
    if pad == 0:
        return t, 0
    ops = t.ops + tuple(padding_ops(t.u_bound, pad))
    return Trace(ops, t.u_bound + pad // 2), pad


class OnePass:
    """One streaming pass over a stream of power-of-two length ``n_total``.

    Failed checks raise :class:`Rejected`. With ``record=True`` the pass
    logs every materialized block as ``(offset, size)`` in ``blocks_seen``
    (offsets are 0-based stream positions) and every fold as
    ``(position, op, (offset, size))`` in ``folds``.
    """

    def __init__(self, ctx, direction: Direction, n_total: int,
                 duplicates: bool = False, record: bool = False) -> None:
        self.ctx = ctx
        self.direction = direction
        self.ltr = direction is Direction.LEFT_TO_RIGHT
        self.n_total = n_total
        self.duplicates = duplicates
        self.stack: list[DyadicBlock] = []
        if self.ltr:
            self.stack.append(DyadicBlock(0, NEG_INF, 0))
        self.count = 0
        self.peak_depth = len(self.stack)
        self.blocks_seen: Optional[list[tuple[int, int]]] = [] if record else None
        self.folds: Optional[list] = [] if record else None

    def _check(self, h, site: BidirSite) -> None:
        if h != 0:
            raise Rejected(site)

    def _offset(self, j: int) -> int:
        # 0-based stream offset of stack[j], from the sizes above it
        above = sum(b.size for b in self.stack[j:])
        if self.ltr:
            return self.count - above
        return self.n_total - self.count + above - self.stack[j].size

    def _fold(self, j: int, op: Operation, hv) -> None:
        b = self.stack[j]
        if self.folds is not None:
            pos = self.count if self.ltr else self.n_total - 1 - self.count
            self.folds.append((pos, op, (self._offset(j), b.size)))
        b.h = (b.h + hv) % self.ctx.p
        if self.duplicates:
            ins_ = op.kind == INSERT
            b.delta += 1 if ins_ else -1
            if op.value == b.m:
                # unmatched ins(m) on the forward pass, ext(m) on the backward
                b.cnt += 1 if ins_ == self.ltr else -1
            if b.delta == 0:
                self._check(b.h, BidirSite.DELTA_CHECK)

    def _push(self, block: DyadicBlock) -> None:
        self.stack.append(block)
        self.count += 1
        if len(self.stack) > self.peak_depth:
            self.peak_depth = len(self.stack)
        if self.blocks_seen is not None:
            self.blocks_seen.append(self._top_offset(1))

    def _top_offset(self, size: int) -> tuple[int, int]:
        if self.ltr:
            return self.count - size, size
        return self.n_total - self.count, size

    def _merge(self) -> None:
        s = self.stack
        p = self.ctx.p
        while len(s) >= 2 and s[-1].size == s[-2].size:
            b1 = s.pop()
            b2 = s.pop()
            if b1.m < b2.m:
                cnt = b1.cnt
            elif b2.m < b1.m:
                cnt = b2.cnt
            else:
                cnt = b1.cnt + b2.cnt
            merged = DyadicBlock((b1.h + b2.h) % p, min(b1.m, b2.m), 2 * b1.size,
                                 b1.delta + b2.delta, cnt)
            s.append(merged)
            if self.blocks_seen is not None:
                self.blocks_seen.append(self._top_offset(merged.size))
            if self.duplicates and merged.delta == 0:
                self._check(merged.h, BidirSite.DELTA_CHECK)

    def _hash_m(self, b: DyadicBlock):
        kind = INSERT if self.ltr else EXTRACT
        return self.ctx.hash_op(Operation(kind, int(b.m)))

    def _eligible(self, b: DyadicBlock, a: int, strict: bool) -> bool:
        # a >= m when not strict; a > m when strict, where in duplicates mode
        # a == m still qualifies while unmatched copies of m remain
        if a != b.m:
            return a > b.m
        if not strict:
            return True
        return self.duplicates and b.cnt > 0

    def read(self, op: Operation) -> None:
        s = self.stack
        a = op.value
        hv = self.ctx.hash_op(op)
        if op.kind == INSERT:
            # backward pass with duplicates: ins(m) only joins while ext(m) is unmatched
            strict = self.duplicates and not self.ltr
            j = len(s) - 1
            while j >= 0 and not self._eligible(s[j], a, strict):
                j -= 1
            if j < 0:
                raise Rejected(BidirSite.INELIGIBLE_INSERT)
            self._fold(j, op, hv)
            self._push(DyadicBlock(0, INF, 1))
        else:
            for b in s:
                if b.m > a:
                    self._check(b.h, BidirSite.EXT_MIN_CHECK)
                elif self.duplicates and b.m == a:
                    # only the cnt unmatched copies of m may remain in h
                    self._check((b.h - b.cnt * self._hash_m(b)) % self.ctx.p,
                                BidirSite.EXT_MIN_CHECK)
            if self.ltr:
                j = len(s) - 1
                while not self._eligible(s[j], a, True):
                    j -= 1
                self._fold(j, op, hv)
                self._push(DyadicBlock(0, a, 1))
            else:
                self._push(DyadicBlock(hv, a, 1, -1, 1))
        self._merge()

    def finish(self) -> None:
        s = self.stack
        blocks = s[1:] if self.ltr else s
        if self.ltr:
            self._check(s[0].h, BidirSite.FINAL_STACK_CHECK)
        if self.n_total == 0:
            if blocks:
                raise Rejected(BidirSite.FINAL_STACK_CHECK)
            return
        if len(blocks) != 1 or blocks[0].size != self.n_total:
            raise Rejected(BidirSite.FINAL_STACK_CHECK)
        self._check(blocks[0].h, BidirSite.FINAL_STACK_CHECK)


def one_pass(ops: Iterable[Operation], direction: Direction, ctx, n_total: int,
             duplicates: bool = False, pass_cls=OnePass, **kwargs) -> tuple[OnePass, Optional[BidirSite]]:
    """Run a single pass; returns the pass state and the reject site (or None)."""
    state = pass_cls(ctx, direction, n_total, duplicates, **kwargs)
    try:
        for op in ops:
            state.read(op)
        state.finish()
    except Rejected as r:
        return state, r.site
    return state, None


def block_bits(p: int, u_bound: int, n_len: int, duplicates: bool = False) -> int:
    nb = max(n_len, 1).bit_length()
    bits = p.bit_length() + max(u_bound + n_len, 1).bit_length() + nb
    if duplicates:
        bits += 2 * nb
    return bits


def streams(t, pad: int) -> tuple[Iterator[Operation], Iterator[Operation]]:
    """Forward and backward letter streams of ``t`` with ``pad`` padding letters."""
    fwd = chain(t.forward(), padding_ops(t.u_bound, pad))
    bwd = chain(padding_ops_reversed(t.u_bound, pad), t.backward())
    return fwd, bwd


def _check_bidir(t, ctx, duplicates: bool) -> BidirVerdict:
    n = t.n_len
    if n % 2:
        return BidirVerdict(False, None, BidirSite.ODD_LENGTH, 0, 0, 0)
    if n == 0:
        return BidirVerdict(True, None, None, 0, 0, 0)
    n_total = next_power_of_two(n)
    pad = n_total - n
    per_block = block_bits(ctx.p, t.u_bound, n, duplicates)
    fwd, _ = streams(t, pad)
    state, site = one_pass(fwd, Direction.LEFT_TO_RIGHT, ctx, n_total, duplicates)
    peak = state.peak_depth
    if site is not None:
        return BidirVerdict(False, Direction.LEFT_TO_RIGHT, site, peak, peak * per_block, pad)
    # Second pass starts only after the first one has finished.
    _, bwd = streams(t, pad)
    state, site = one_pass(bwd, Direction.RIGHT_TO_LEFT, ctx, n_total, duplicates)
    peak = max(peak, state.peak_depth)
    failing = Direction.RIGHT_TO_LEFT if site is not None else None
    return BidirVerdict(site is None, failing, site, peak, peak * per_block, pad)


def check_bidir(t, ctx) -> BidirVerdict:
    """Two-pass check of a Trace or TraceFile without repeated inserts."""
    if t.stats().has_duplicates:
        raise DuplicateInsertError("use check_bidir_dup for traces with repeated inserts")
    return _check_bidir(t, ctx, duplicates=False)


def check_bidir_dup(t, ctx) -> BidirVerdict:
    """Two-pass check that tolerates repeated values (best-effort extension)."""
    return _check_bidir(t, ctx, duplicates=True)
