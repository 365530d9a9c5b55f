"""Linear polynomial fingerprints over a prime field.

An insert of ``a`` hashes to ``alpha**a mod p`` and an extract of ``a`` to
its additive inverse, so the fold of any balanced sequence is exactly zero
and the fold of an unbalanced one is a nonzero polynomial in ``alpha``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional

from .trace import INSERT, Operation, compute_stats

# Deterministic witness set, valid for every n < 3.3 * 10**24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_LIMIT = 3317044064679887385961981

# Largest prime-interval lower bound accepted; keeps p below 2**63.
MAX_PRIME_BOUND = 2**62

CENSUS_PRIME_LIMIT = 2**20


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24 (covers all 64-bit inputs)."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    if n >= _MR_LIMIT:
        raise OverflowError("primality witnesses only certified below 3.3e24")
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_interval(n_ref: int, u_ref: int, c: int) -> tuple[int, int]:
    lo = max(2 * u_ref + 1, n_ref ** (c + 1))
    return lo, 2 * lo


def _pick_prime(lo: int, hi: int, rng: random.Random) -> int:
    for _ in range(64):
        cand = rng.randint(lo, hi) | 1
        if cand <= hi and is_prime(cand):
            return cand
    # Sparse interval: scan upward from a random start, wrapping once.
    start = rng.randint(lo, hi)
    for cand in range(start, hi + 1):
        if is_prime(cand):
            return cand
    for cand in range(lo, start):
        if is_prime(cand):
            return cand
    raise ValueError(f"no prime in [{lo}, {hi}]")


@dataclass(frozen=True)
class FingerprintContext:
    """Prime modulus ``p`` and evaluation point ``alpha``.

    ``n_ref``/``u_ref``/``c`` record the sizing parameters. ``u_ref`` also
    bounds the exponents ``hash_op`` accepts; hand-built contexts may leave
    it unset.
    """

    p: int
    alpha: int
    c: int = 1
    n_ref: Optional[int] = None
    u_ref: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        if not 0 <= self.alpha < self.p:
            raise ValueError(f"alpha {self.alpha} outside [0, {self.p - 1}]")

    def hash_op(self, op: Operation) -> int:
        if self.u_ref is not None and op.value > self.u_ref:
            raise ValueError(f"value {op.value} exceeds context exponent bound {self.u_ref}")
        h = pow(self.alpha, op.value, self.p)
        if op.kind == INSERT:
            return h
        return (self.p - h) % self.p

    def bits(self) -> int:
        return self.p.bit_length()


def make_context(n_ref: int, u_ref: int, c: int = 1, rng_seed: Optional[int] = None,
                 *, prime: Optional[int] = None, alpha: Optional[int] = None) -> FingerprintContext:
    """Draw a prime in ``[B, 2B]``, ``B = max(2*u_ref+1, n_ref**(c+1))``, and a
    uniform ``alpha`` in ``[0, p-1]``.

    ``prime`` overrides the interval (census experiments); ``alpha`` pins the
    evaluation point. The same seed always yields the same context.
    """
    if n_ref < 1 or u_ref < 1 or c < 1:
        raise ValueError("n_ref, u_ref and c must all be >= 1")
    rng = random.Random(rng_seed)
    if prime is None:
        lo, hi = prime_interval(n_ref, u_ref, c)
        if lo > MAX_PRIME_BOUND:
            raise OverflowError(f"prime bound {lo} too large for exact 64-bit arithmetic")
        p = _pick_prime(lo, hi, rng)
    else:
        p = prime
    if alpha is None:
        alpha = rng.randrange(p)
    return FingerprintContext(p=p, alpha=alpha, c=c, n_ref=n_ref, u_ref=u_ref, seed=rng_seed)


def context_for(n_len: int, u_bound: int, c: int = 1, rng_seed: Optional[int] = None,
                **overrides) -> FingerprintContext:
    """Context sized for a trace of length ``n_len`` over ``[0, u_bound]``,
    with headroom for padding values up to ``u_bound + n_len``."""
    n_ref = max(n_len, 1)
    return make_context(n_ref, max(u_bound + n_len, 1), c, rng_seed, **overrides)


def hash_op(ctx: FingerprintContext, op: Operation) -> int:
    return ctx.hash_op(op)


def update(h: int, ctx: FingerprintContext, op: Operation) -> int:
    return (h + hash_op(ctx, op)) % ctx.p


def fold(ctx: FingerprintContext, ops: Iterable[Operation]) -> int:
    h = 0
    for op in ops:
        h = update(h, ctx, op)
    return h


def false_accept_census(ops: Iterable[Operation], small_p: int) -> tuple[int, int]:
    """Count the ``alpha`` in ``[0, small_p)`` for which an unbalanced
    sequence folds to zero, by exhaustive evaluation."""
    ops = list(ops)
    if small_p > CENSUS_PRIME_LIMIT:
        raise ValueError("census prime must be at most 2^20")
    if not is_prime(small_p):
        raise ValueError(f"{small_p} is not prime")
    if compute_stats(ops).is_balanced:
        raise ValueError("census is vacuous on a balanced sequence")
    zeros = 0
    for alpha in range(small_p):
        h = 0
        for op in ops:
            v = pow(alpha, op.value, small_p)
            h = (h + v if op.kind == INSERT else h - v) % small_p
        if h == 0:
            zeros += 1
    return zeros, small_p
