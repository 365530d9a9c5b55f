"""Run reports, exhaustive false-accept census and memory scaling sweeps."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import oracle
from .bidir import (Direction, OnePass, check_bidir, check_bidir_dup, next_power_of_two,
                    one_pass, streams)
from .fingerprint import CENSUS_PRIME_LIMIT, context_for, is_prime
from .generators import gen_valid_pq
from .reverse import DuplicateInsertError, Rejected, ReverseChecker, check_reverse
from .trace import INSERT, Operation, Trace

ORACLE_MODES = ("oracle-pq", "oracle-collection", "oracle-pqts")
STREAM_MODES = ("reverse", "bidir", "bidir-dup")
MODES = ORACLE_MODES + STREAM_MODES

REPORT_SCHEMA = {
    "type": "object",
    "required": ["mode", "N", "U", "p", "alpha", "accepted", "reject_site", "peak_blocks",
                 "peak_bits", "pad_count", "wall_time"],
    "properties": {
        "mode": {"enum": list(MODES)},
        "N": {"type": "integer", "minimum": 0},
        "U": {"type": "integer", "minimum": 0},
        "p": {"type": ["integer", "null"]},
        "alpha": {"type": ["integer", "null"]},
        "seed": {"type": ["integer", "null"]},
        "accepted": {"type": "boolean"},
        "reject_site": {"type": ["string", "null"]},
        "failing_pass": {"type": ["string", "null"]},
        "fail_index": {"type": ["integer", "null"]},
        "peak_blocks": {"type": ["integer", "null"]},
        "peak_bits": {"type": ["integer", "null"]},
        "pad_count": {"type": "integer", "minimum": 0},
        "wall_time": {"type": "number", "minimum": 0},
    },
}


@dataclass
class RunReport:
    """One checker run. ``peak_blocks`` is the block count for the reverse
    checker and the stack depth for the two-pass checker."""

    mode: str
    N: int
    U: int
    p: Optional[int]
    alpha: Optional[int]
    accepted: bool
    reject_site: Optional[str]
    peak_blocks: Optional[int]
    peak_bits: Optional[int]
    pad_count: int = 0
    wall_time: float = 0.0
    seed: Optional[int] = None
    failing_pass: Optional[str] = None
    fail_index: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def derive_seeds(seed: Optional[int], n: int) -> list[int]:
    """Split one seed into ``n`` independent 32-bit child seeds."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def _value(site) -> Optional[str]:
    return None if site is None else site.value


def run_check(t, mode: str, seed: Optional[int] = None, c: int = 1,
              prime: Optional[int] = None, alpha: Optional[int] = None) -> RunReport:
    """Run one checker on a Trace (or a TraceFile for streaming modes)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    start = time.perf_counter()
    n, u = t.n_len, t.u_bound
    if mode in ORACLE_MODES:
        trace = t if isinstance(t, Trace) else t.load()
        if mode == "oracle-pq":
            v = oracle.check_pq(trace.ops)
        elif mode == "oracle-collection":
            v = oracle.check_collection(trace.ops)
        else:
            v = oracle.check_pq_ts(trace)
        return RunReport(mode, n, u, None, None, v.accepted, _value(v.fail_reason), None, None,
                         wall_time=time.perf_counter() - start, fail_index=v.fail_index)
    ctx = context_for(n, u, c, seed, prime=prime, alpha=alpha)
    if mode == "reverse":
        rv = check_reverse(t, ctx)
        report = RunReport(mode, n, u, ctx.p, ctx.alpha, rv.accepted, _value(rv.reject_site),
                           rv.peak_blocks, rv.peak_bits)
    else:
        bv = check_bidir(t, ctx) if mode == "bidir" else check_bidir_dup(t, ctx)
        report = RunReport(mode, n, u, ctx.p, ctx.alpha, bv.accepted, _value(bv.reject_site),
                           bv.peak_stack_depth, bv.peak_bits, bv.pad_count,
                           failing_pass=_value(bv.failing_pass))
    report.seed = seed
    report.wall_time = time.perf_counter() - start
    return report


class CensusContext:
    """Fingerprint context evaluating every ``alpha`` in ``[0, p)`` at once.

    Field elements are int64 vectors indexed by ``alpha``; ``p <= 2**20``
    keeps every product below ``2**40``.
    """

    def __init__(self, p: int) -> None:
        if p > CENSUS_PRIME_LIMIT:
            raise ValueError("census prime must be at most 2^20")
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.alpha = None
        self._alphas = np.arange(p, dtype=np.int64)
        self._powers: dict[int, np.ndarray] = {}

    def power(self, a: int) -> np.ndarray:
        v = self._powers.get(a)
        if v is None:
            p = self.p
            v = np.ones(p, dtype=np.int64)
            base = self._alphas.copy()
            e = a
            while e:
                if e & 1:
                    v = v * base % p
                base = base * base % p
                e >>= 1
            self._powers[a] = v
        return v

    def hash_op(self, op: Operation) -> np.ndarray:
        v = self.power(op.value)
        return v if op.kind == INSERT else (self.p - v) % self.p


class _CensusMixin:
    # Replaces the zero test with a running mask of the alphas still accepting.
    def __init__(self, ctx, *args, **kwargs) -> None:
        super().__init__(ctx, *args, **kwargs)
        self.alive = np.ones(ctx.p, dtype=bool)

    def _check(self, h, site) -> None:
        self.alive &= np.asarray(h) == 0
        if not self.alive.any():
            raise Rejected(site)


class CensusReverseChecker(_CensusMixin, ReverseChecker):
    pass


class CensusOnePass(_CensusMixin, OnePass):
    pass


def accepting_alphas(t, mode: str, ctx: CensusContext) -> np.ndarray:
    """Boolean mask over ``alpha`` of the runs the checker accepts."""
    none = np.zeros(ctx.p, dtype=bool)
    if mode == "reverse":
        if t.stats().has_duplicates:
            raise DuplicateInsertError("reverse checker requires distinct inserted values")
        checker = CensusReverseChecker(ctx)
        try:
            for op in t.backward():
                checker.feed(op)
            checker.finish()
        except Rejected:
            return none
        return checker.alive
    if mode not in ("bidir", "bidir-dup"):
        raise ValueError(f"census not defined for mode {mode!r}")
    dup = mode == "bidir-dup"
    if not dup and t.stats().has_duplicates:
        raise DuplicateInsertError("use bidir-dup for traces with repeated inserts")
    n = t.n_len
    if n % 2:
        return none
    if n == 0:
        return ~none
    n_total = next_power_of_two(n)
    fwd, bwd = streams(t, n_total - n)
    mask = ~none
    for ops, direction in ((fwd, Direction.LEFT_TO_RIGHT), (bwd, Direction.RIGHT_TO_LEFT)):
        state, site = one_pass(ops, direction, ctx, n_total, dup, pass_cls=CensusOnePass)
        if site is not None:
            return none
        mask &= state.alive
    return mask


def soundness_census(t, small_p: int, mode: str) -> tuple[int, int]:
    """Exact number of ``alpha`` in ``[0, small_p)`` for which ``mode``
    accepts the oracle-rejected trace ``t``."""
    trace = t if isinstance(t, Trace) else t.load()
    if oracle.check_pq(trace.ops).accepted:
        raise ValueError("census needs a trace the oracle rejects")
    mask = accepting_alphas(trace, mode, CensusContext(small_p))
    return int(mask.sum()), small_p


def hashed_exponent_max(t: Trace, mode: str) -> int:
    """Largest exponent the checker hashes (padding included for two-pass modes)."""
    top = max((op.value for op in t.ops), default=0)
    if mode.startswith("bidir") and t.n_len % 2 == 0 and t.n_len:
        pad = next_power_of_two(t.n_len) - t.n_len
        if pad:
            top = t.u_bound + pad // 2
    return top


@dataclass
class SweepRow:
    N: int
    runs: int
    mean_peak_bits: float
    max_peak_blocks: int
    bound: Optional[int]
    within_bound: bool
    valleys_match: Optional[bool] = None


def scaling_sweep(mode: str, sizes: Sequence[int], seeds: Iterable[int],
                  c: int = 1) -> list[SweepRow]:
    """Peak checker memory on generated legal traces at each length.

    Two-pass rows compare the peak stack depth with ``log2(N) + 2``; reverse
    rows compare peak blocks with the measured valley count plus one.
    """
    seeds = list(seeds)
    rows = []
    for n in sizes:
        if mode.startswith("bidir") and n & (n - 1):
            raise ValueError(f"two-pass sweep sizes must be powers of two, got {n}")
        bits, peaks = [], []
        valleys_ok = True
        for s in seeds:
            t = gen_valid_pq(n, 2 * n, rng_seed=s)
            rep = run_check(t, mode, seed=s, c=c)
            if not rep.accepted:
                raise RuntimeError(f"{mode} rejected a legal trace (N={n}, seed={s})")
            bits.append(rep.peak_bits)
            peaks.append(rep.peak_blocks)
            if mode == "reverse":
                valleys_ok &= rep.peak_blocks == t.stats().valley_count + 1
        top = max(peaks)
        if mode == "reverse":
            rows.append(SweepRow(n, len(seeds), sum(bits) / len(bits), top, None, valleys_ok,
                                 valleys_ok))
        else:
            bound = int(math.log2(n)) + 2 if n else 2
            rows.append(SweepRow(n, len(seeds), sum(bits) / len(bits), top, bound, top <= bound))
    return rows
