"""Trace generators: legal PQ histories, the RD(m, n) hard instances, traces
with a prescribed number of valleys, and single-fault mutators."""

from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from . import oracle
from .trace import EXTRACT, INSERT, Operation, Trace


@dataclass(frozen=True)
class RdParams:
    """``x[i]`` is the n-bit motif pattern, ``k[i]`` in ``2..n`` the pivot
    rank and ``d[i]`` the pivot bit of motif ``i`` (all 0-based lists; bit
    positions inside ``x[i]`` are 1-based in the formulas)."""

    m: int
    n: int
    x: tuple[tuple[int, ...], ...]
    k: tuple[int, ...]
    d: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 2:
            raise ValueError("need m >= 1 and n >= 2")
        if len(self.x) != self.m or len(self.k) != self.m or len(self.d) != self.m:
            raise ValueError("x, k, d must each have m entries")
        for xi, ki, di in zip(self.x, self.k, self.d):
            if len(xi) != self.n or any(bit not in (0, 1) for bit in xi):
                raise ValueError("each x_i must be n bits")
            if not 2 <= ki <= self.n:
                raise ValueError("k_i must lie in 2..n")
            if di not in (0, 1):
                raise ValueError("d_i must be a bit")

    @classmethod
    def random(cls, m: int, n: int, rng: random.Random,
               error_at: Optional[int] = None) -> "RdParams":
        x = [[rng.randrange(2) for _ in range(n)] for _ in range(m)]
        k = [rng.randint(2, n) for _ in range(m)]
        d = [rng.randrange(2) for _ in range(m)]
        if error_at is not None:
            i = error_at - 1
            if not 0 <= i < m:
                raise ValueError(f"error_at must lie in 1..{m}")
            x[i][k[i] - 1] = 1
            d[i] = 0
        return cls(m, n, tuple(map(tuple, x)), tuple(k), tuple(d))


def weak_index(x: Sequence[int], k: int, d: int) -> int:
    """f(x, k, d) = [d = 0 and x[k] = 1], with 1-based ``k``."""
    return int(d == 0 and x[k - 1] == 1)


def rd_predicate(params: RdParams) -> int:
    """OR of the per-motif predicate: 1 exactly when the instance has an error."""
    return int(any(weak_index(xi, ki, di) for xi, ki, di in zip(params.x, params.k, params.d)))


# Motif 3 is not drawn in the figure; any error-free choice reproduces the
# listed values of motifs 1 and 2 and the final 17, 14, 5, 2 tail.
FIGURE1_PARAMS = RdParams(
    m=3, n=4,
    x=((0, 1, 1, 1), (1, 0, 1, 1), (0, 0, 0, 0)),
    k=(3, 3, 2),
    d=(1, 0, 1),
)


def gen_rd(params: RdParams, timestamped: bool = False) -> Trace:
    m, n = params.m, params.n
    values: list[Operation] = []
    remaining: list[int] = []
    for i in range(1, m + 1):
        xi, ki, di = params.x[i - 1], params.k[i - 1], params.d[i - 1]
        v = [3 * (n * i - j) + 2 * xi[j - 1] for j in range(1, n + 1)]
        a = 3 * (n * i - ki) + 1 + 3 * di
        values.extend(Operation(INSERT, val) for val in v)
        values.append(Operation(INSERT, a))
        for val in sorted(v[: ki - 1] + [a], reverse=True):
            values.append(Operation(EXTRACT, val))
        remaining.extend(v[ki - 1:])
    values.extend(Operation(EXTRACT, val) for val in sorted(remaining, reverse=True))
    u_bound = 3 * m * n
    if not timestamped:
        return Trace(tuple(values), u_bound)
    return Trace(tuple(_stamp(values)), u_bound)


def _stamp(ops: Sequence[Operation]) -> list[Operation]:
    # Extracts carry the stamp of the oldest unmatched insert of that value.
    open_stamps: dict[int, list[int]] = {}
    out = []
    for idx, op in enumerate(ops, 1):
        if op.kind == INSERT:
            open_stamps.setdefault(op.value, []).append(idx)
            out.append(Operation(INSERT, op.value, idx))
        else:
            stack = open_stamps.get(op.value)
            stamp = stack.pop(0) if stack else 0
            out.append(Operation(EXTRACT, op.value, stamp))
    return out


def gen_valid_pq(len_target: int, u_bound: int, allow_duplicates: bool = False,
                 rng_seed: Optional[int] = None, insert_bias: float = 0.5) -> Trace:
    """Random legal PQ history of exactly ``len_target`` letters.

    Each step inserts (a fresh value, or with duplicates any value) or
    extracts the current maximum; the tail drains the queue.
    """
    if len_target < 0 or len_target % 2:
        raise ValueError("len_target must be even and non-negative")
    n_ins = len_target // 2
    if u_bound < 0 or (not allow_duplicates and n_ins > u_bound + 1):
        raise ValueError(f"cannot draw {n_ins} distinct values from [0, {u_bound}]")
    rng = random.Random(rng_seed)
    if allow_duplicates:
        pool = [rng.randint(0, u_bound) for _ in range(n_ins)]
    else:
        pool = rng.sample(range(u_bound + 1), n_ins)
    heap: list[int] = []
    ops = []
    inserted = 0
    for step in range(len_target):
        left = len_target - step
        can_ins = inserted < n_ins and len(heap) + 1 <= left - 1
        if can_ins and (not heap or rng.random() < insert_bias):
            a = pool[inserted]
            inserted += 1
            heapq.heappush(heap, -a)
            ops.append(Operation(INSERT, a))
        else:
            ops.append(Operation(EXTRACT, -heapq.heappop(heap)))
    return Trace(tuple(ops), u_bound)


def gen_with_valleys(r: int, rng_seed: Optional[int] = None, max_run: int = 4) -> Trace:
    """Legal duplicate-free trace with exactly ``r`` valleys.

    Built from ``r + 1`` segments, each a run of inserts followed by a run of
    extract-max; the last segment drains the queue.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    rng = random.Random(rng_seed)
    runs = [rng.randint(1, max_run) for _ in range(r + 1)]
    pool = rng.sample(range(4 * sum(runs) + 1), sum(runs))
    heap: list[int] = []
    ops = []
    nxt = 0
    for seg, run in enumerate(runs):
        for _ in range(run):
            heapq.heappush(heap, -pool[nxt])
            ops.append(Operation(INSERT, pool[nxt]))
            nxt += 1
        take = len(heap) if seg == r else rng.randint(1, len(heap))
        for _ in range(take):
            ops.append(Operation(EXTRACT, -heapq.heappop(heap)))
    return Trace(tuple(ops))


class MutationKind(str, enum.Enum):
    SWAP_EXTRACTS = "SwapExtracts"
    EXTRACT_NON_MAX = "ExtractNonMax"
    EXTRACT_ABSENT = "ExtractAbsent"
    DROP_EXTRACT = "DropExtract"
    DUP_EXTRACT = "DupExtract"


class MutationError(ValueError):
    """The requested mutation does not apply to this trace."""


def _sites(ops: Sequence[Operation], kind: MutationKind, rng: random.Random) -> Iterator:
    """Candidate mutation sites in random order (sampled for pair kinds)."""
    ext_pos = [i for i, op in enumerate(ops) if op.kind == EXTRACT]
    if kind is MutationKind.SWAP_EXTRACTS:
        sites = [i for i in ext_pos if i + 1 < len(ops) and ops[i + 1].kind == EXTRACT
                 and ops[i].value != ops[i + 1].value]
    elif kind is MutationKind.EXTRACT_NON_MAX:
        if len(ext_pos) <= 64:
            sites = [(i, j) for n, i in enumerate(ext_pos) for j in ext_pos[n + 1:]
                     if ops[i].value != ops[j].value]
        else:
            def sampled():
                for _ in range(4 * len(ext_pos)):
                    i, j = sorted(rng.sample(ext_pos, 2))
                    if ops[i].value != ops[j].value:
                        yield i, j
            return sampled()
    else:
        sites = list(ext_pos)
    rng.shuffle(sites)
    return iter(sites)


def _absent_value(ops: Sequence[Operation], site: int, u_bound: int,
                  rng: random.Random) -> Optional[int]:
    live: dict[int, int] = {}
    for op in ops[:site]:
        live[op.value] = live.get(op.value, 0) + (1 if op.kind == INSERT else -1)
    present = {v for v, c in live.items() if c > 0}
    if len(present) > u_bound:
        return None
    while True:
        v = rng.randint(0, u_bound)
        if v not in present:
            return v


def _apply(ops: Sequence[Operation], kind: MutationKind, site, u_bound: int,
           rng: random.Random) -> Optional[list[Operation]]:
    out = list(ops)
    if kind is MutationKind.SWAP_EXTRACTS:
        out[site], out[site + 1] = out[site + 1], out[site]
    elif kind is MutationKind.EXTRACT_NON_MAX:
        i, j = site
        out[i], out[j] = out[j], out[i]
    elif kind is MutationKind.EXTRACT_ABSENT:
        v = _absent_value(ops, site, u_bound, rng)
        if v is None:
            return None
        out[site] = Operation(EXTRACT, v, ops[site].timestamp)
    elif kind is MutationKind.DROP_EXTRACT:
        del out[site]
    else:
        out.insert(site + 1, ops[site])
    return out


def mutate(t: Trace, kind, rng_seed: Optional[int] = None) -> Trace:
    """Inject one fault of the given kind; the result is always oracle-rejected.

    Sites are tried in random order until the mutated trace is illegal.
    """
    kind = MutationKind(kind)
    if not t.n_len:
        raise MutationError("cannot mutate the empty trace")
    rng = random.Random(rng_seed)
    for site in _sites(t.ops, kind, rng):
        out = _apply(t.ops, kind, site, t.u_bound, rng)
        if out is None:
            continue
        mutated = Trace(tuple(out), t.u_bound)
        if not oracle.check_pq(mutated.ops).accepted:
            return mutated
    raise MutationError(f"{kind.value} does not apply to this trace")
