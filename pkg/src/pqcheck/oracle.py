"""Exact, full-memory reference checkers.

These keep the whole multiset in memory and serve as ground truth for the
streaming checkers. Failure positions are 1-based stream indices; a
non-empty final multiset is reported at index N.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .trace import INSERT, Operation, Trace


class FailReason(str, enum.Enum):
    EXTRACT_ABSENT = "ExtractAbsent"
    EXTRACT_NOT_MAX = "ExtractNotMax"
    NON_EMPTY_FINAL = "NonEmptyFinal"
    BAD_TIMESTAMP = "BadTimestamp"


@dataclass(frozen=True)
class OracleVerdict:
    accepted: bool
    fail_index: Optional[int] = None
    fail_reason: Optional[FailReason] = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = OracleVerdict(True)


class MultisetState:
    """The current multiset ``M_i``: value -> multiplicity, zeros removed.

    A lazily pruned max-heap keeps ``max()`` logarithmic.
    """

    def __init__(self) -> None:
        self.counts: dict[int, int] = {}
        self._heap: list[int] = []

    def add(self, a: int) -> None:
        if a not in self.counts:
            self.counts[a] = 0
            heapq.heappush(self._heap, -a)
        self.counts[a] += 1

    def remove(self, a: int) -> bool:
        n = self.counts.get(a, 0)
        if n == 0:
            return False
        if n == 1:
            del self.counts[a]
        else:
            self.counts[a] = n - 1
        return True

    def __contains__(self, a: int) -> bool:
        return a in self.counts

    def __len__(self) -> int:
        return sum(self.counts.values())

    def max(self) -> int:
        heap = self._heap
        while -heap[0] not in self.counts:
            heapq.heappop(heap)
        return -heap[0]


def _check(ops: Iterable[Operation], require_max: bool) -> OracleVerdict:
    state = MultisetState()
    i = 0
    for i, op in enumerate(ops, 1):
        if op.kind == INSERT:
            state.add(op.value)
            continue
        if op.value not in state:
            return OracleVerdict(False, i, FailReason.EXTRACT_ABSENT)
        if require_max and op.value != state.max():
            return OracleVerdict(False, i, FailReason.EXTRACT_NOT_MAX)
        state.remove(op.value)
    if state.counts:
        return OracleVerdict(False, i, FailReason.NON_EMPTY_FINAL)
    return ACCEPT


def check_collection(t: Iterable[Operation]) -> OracleVerdict:
    return _check(t, require_max=False)


def check_pq(t: Iterable[Operation]) -> OracleVerdict:
    return _check(t, require_max=True)


def check_pq_ts(t: Trace) -> OracleVerdict:
    """PQ with timestamps: every insert is stamped with its 1-based index and
    every ``ext(a)@s`` consumes an unmatched ``ins(a)@s``."""
    if t.n_len and not t.timestamped:
        raise ValueError("check_pq_ts needs a timestamped trace")
    pq = MultisetState()
    # (value, stamp) -> queue of insert positions, oldest first
    pending: dict[tuple[int, int], deque[int]] = {}
    i = 0
    for i, op in enumerate(t.ops, 1):
        if op.kind == INSERT:
            if op.timestamp != i:
                return OracleVerdict(False, i, FailReason.BAD_TIMESTAMP)
            pq.add(op.value)
            pending.setdefault((op.value, op.timestamp), deque()).append(i)
            continue
        if op.value not in pq:
            return OracleVerdict(False, i, FailReason.EXTRACT_ABSENT)
        slot = pending.get((op.value, op.timestamp))
        if not slot:
            return OracleVerdict(False, i, FailReason.BAD_TIMESTAMP)
        if op.value != pq.max():
            return OracleVerdict(False, i, FailReason.EXTRACT_NOT_MAX)
        slot.popleft()
        pq.remove(op.value)
    if pq.counts:
        return OracleVerdict(False, i, FailReason.NON_EMPTY_FINAL)
    return ACCEPT
