"""One-reverse-pass priority-queue checker.

The stream is read from its last letter to its first and cut into blocks at
every valley (an extraction immediately followed, in stream order, by an
insertion). Each block keeps a fingerprint of its extractions plus their
matching insertions and the minimum extracted value; reliable memory is
one block per valley plus the initial block.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .trace import INSERT, Operation

NEG_INF = -math.inf


class DuplicateInsertError(ValueError):
    """The reverse checker is only defined on traces without repeated inserts."""


class ReverseSite(str, enum.Enum):
    ORDER_CHECK = "OrderCheck"
    BALANCE_CHECK = "BalanceCheck"


class Rejected(Exception):
    def __init__(self, site) -> None:
        super().__init__(site)
        self.site = site


@dataclass(slots=True)
class ValleyBlock:
    h: int
    m: float  # int, or -inf for the initial block
    index: int


@dataclass(frozen=True)
class ReverseVerdict:
    accepted: bool
    reject_site: Optional[ReverseSite]
    peak_blocks: int
    peak_bits: int

    def __bool__(self) -> bool:
        return self.accepted


def block_bits(p: int, u_bound: int, n_len: int) -> int:
    return p.bit_length() + max(u_bound, 1).bit_length() + max(n_len, 1).bit_length()


class ReverseChecker:
    """Incremental checker fed with the stream in reverse order.

    ``feed`` raises :class:`Rejected` on a failed order check; ``finish``
    runs the final balance checks. With ``record=True`` the block index each
    letter was folded into is kept in ``assignments`` (reverse-read order).
    """

    def __init__(self, ctx, record: bool = False) -> None:
        self.ctx = ctx
        self.blocks = [ValleyBlock(0, NEG_INF, 0)]
        self._next: Optional[Operation] = None  # w[t+1]
        self.assignments: Optional[list[tuple[Operation, int]]] = [] if record else None

    @property
    def peak_blocks(self) -> int:
        # Blocks are never discarded, so the current count is the peak.
        return len(self.blocks)

    def _check(self, h, site) -> None:
        if h != 0:
            raise Rejected(site)

    def feed(self, op: Operation) -> None:
        ctx = self.ctx
        blocks = self.blocks
        if op.kind == INSERT:
            a = op.value
            k = len(blocks) - 1
            while blocks[k].m > a:
                k -= 1
            target = blocks[k]
        else:
            nxt = self._next
            if nxt is not None:
                if nxt.kind == INSERT:
                    blocks.append(ValleyBlock(0, op.value, len(blocks)))
                elif not op.value >= nxt.value:
                    raise Rejected(ReverseSite.ORDER_CHECK)
            target = blocks[-1]
        target.h = (target.h + ctx.hash_op(op)) % ctx.p
        if self.assignments is not None:
            self.assignments.append((op, target.index))
        self._next = op

    def finish(self) -> None:
        for b in self.blocks:
            self._check(b.h, ReverseSite.BALANCE_CHECK)


def run_reverse(backward: Iterable[Operation], ctx, u_bound: int, n_len: int,
                checker_cls=ReverseChecker) -> ReverseVerdict:
    checker = checker_cls(ctx)
    site = None
    try:
        for op in backward:
            checker.feed(op)
        checker.finish()
    except Rejected as r:
        site = r.site
    peak = checker.peak_blocks
    return ReverseVerdict(site is None, site, peak, peak * block_bits(ctx.p, u_bound, n_len))


def check_reverse(t, ctx) -> ReverseVerdict:
    """Check ``t`` (a Trace or TraceFile) in one reverse pass.

    Raises :class:`DuplicateInsertError` if some value is inserted twice.
    """
    if t.stats().has_duplicates:
        raise DuplicateInsertError("reverse checker requires distinct inserted values")
    return run_reverse(t.backward(), ctx, t.u_bound, t.n_len)
