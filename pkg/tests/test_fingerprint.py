import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from pqcheck.fingerprint import (FingerprintContext, context_for, false_accept_census, fold,
                                 hash_op, is_prime, make_context, prime_interval, update)
from pqcheck.generators import FIGURE1_PARAMS, gen_rd
from pqcheck.trace import Operation, compute_stats, ext, ins


def sieve(n):
    flags = [True] * (n + 1)
    flags[0] = flags[1] = False
    for i in range(2, int(n ** 0.5) + 1):
        if flags[i]:
            flags[i * i::i] = [False] * len(flags[i * i::i])
    return flags


def trial_division(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_miller_rabin_matches_sieve():
    flags = sieve(200_000)
    assert all(is_prime(n) == flags[n] for n in range(len(flags)))


def test_miller_rabin_known_hard_cases():
    # strong pseudoprimes to several small bases, and large known primes
    for n in (3215031751, 2152302898747, 3474749660383, 341550071728321,
              3825123056546413051, 318665857834031151167461):
        assert not is_prime(n)
    for n in (2**61 - 1, 2**31 - 1, 1_000_000_007, 18446744073709551557):
        assert is_prime(n)


@pytest.mark.parametrize("n_ref,u_ref,lo,hi", [(16, 100, 256, 512), (4, 1, 16, 32)])
def test_prime_interval_examples(n_ref, u_ref, lo, hi):
    assert prime_interval(n_ref, u_ref, 1) == (lo, hi)
    for seed in range(20):
        ctx = make_context(n_ref, u_ref, 1, seed)
        assert lo <= ctx.p <= hi
        assert trial_division(ctx.p)
        assert 0 <= ctx.alpha < ctx.p


def test_prime_interval_random_draws():
    rng = random.Random(5)
    for _ in range(100):
        n_ref, u_ref, c = rng.randint(1, 5000), rng.randint(1, 10**6), rng.randint(1, 2)
        ctx = make_context(n_ref, u_ref, c, rng.randrange(2**32))
        lo = max(2 * u_ref + 1, n_ref ** (c + 1))
        assert lo <= ctx.p <= 2 * lo
        assert trial_division(ctx.p)


def test_same_seed_same_context():
    a = make_context(1000, 5000, 1, 42)
    b = make_context(1000, 5000, 1, 42)
    assert (a.p, a.alpha) == (b.p, b.alpha)


def test_make_context_errors():
    with pytest.raises(OverflowError):
        make_context(2**32, 1, 1, 0)
    with pytest.raises(ValueError):
        make_context(0, 1, 1, 0)
    with pytest.raises(ValueError):
        FingerprintContext(p=15, alpha=2)
    with pytest.raises(ValueError):
        FingerprintContext(p=17, alpha=17)


def test_context_for_has_padding_headroom():
    ctx = context_for(6, 9, rng_seed=1)
    assert ctx.u_ref == 15
    hash_op(ctx, ins(15))
    with pytest.raises(ValueError):
        hash_op(ctx, ins(16))


def test_hash_examples():
    ctx = FingerprintContext(p=17, alpha=3)
    assert hash_op(ctx, ins(4)) == 13
    assert hash_op(ctx, ext(4)) == 4
    assert hash_op(ctx, ins(0)) == 1


@given(st.integers(0, 10**6), st.integers(0, 2**30))
def test_insert_and_extract_cancel(a, seed):
    ctx = make_context(64, 10**6, 1, seed)
    assert (hash_op(ctx, ins(a)) + hash_op(ctx, ext(a))) % ctx.p == 0
    assert update(update(0, ctx, ins(a)), ctx, ext(a)) == 0


op_lists = st.lists(st.builds(Operation, st.sampled_from("ie"), st.integers(0, 40), st.none()),
                    max_size=30)


@given(op_lists, st.integers(0, 2**30))
def test_fold_is_sum_of_hashes(ops, seed):
    ctx = make_context(64, 100, 1, seed)
    assert fold(ctx, ops) == sum(hash_op(ctx, op) for op in ops) % ctx.p


@given(st.permutations(list(range(12))), st.integers(0, 2**30))
def test_balanced_folds_to_zero(order, seed):
    ctx = make_context(64, 100, 1, seed)
    ops = [ins(v) for v in range(12)] + [ext(v) for v in order]
    assert fold(ctx, ops) == 0


def test_figure_first_motif_block_folds_to_zero():
    # first motif: 2,5,8,9 and pivot 7 inserted; 9,8,7 extracted and matched
    t = gen_rd(FIGURE1_PARAMS)
    block = [op for op in t.ops[:8] if op.value in (9, 8, 7)]
    assert len(block) == 6
    for seed in range(10):
        assert fold(context_for(t.n_len, t.u_bound, 1, seed), block) == 0


def test_census_examples():
    # alpha^2 - alpha vanishes at 0 and 1 only
    assert false_accept_census([ins(2), ext(1)], 101) == (2, 101)
    # alpha^1 vanishes at alpha = 0, which the evaluation interval includes
    assert false_accept_census([ins(1)], 101) == (1, 101)


def test_census_preconditions():
    with pytest.raises(ValueError):
        false_accept_census([ins(1), ext(1)], 101)
    with pytest.raises(ValueError):
        false_accept_census([ins(1)], 100)
    with pytest.raises(ValueError):
        false_accept_census([ins(1)], 1048583)


def poly_roots(ops, p):
    # independent count: collect coefficients, then evaluate by Horner's rule
    coeff = {}
    for op in ops:
        coeff[op.value] = coeff.get(op.value, 0) + (1 if op.kind == "i" else -1)
    top = max(coeff)
    roots = 0
    for x in range(p):
        acc = 0
        for e in range(top, -1, -1):
            acc = (acc * x + coeff.get(e, 0)) % p
        roots += acc == 0
    return roots


@given(st.lists(st.builds(Operation, st.sampled_from("ie"), st.integers(0, 12), st.none()),
                min_size=1, max_size=10),
       st.sampled_from([101, 257]))
def test_census_matches_polynomial_and_degree_bound(ops, p):
    assume(not compute_stats(ops).is_balanced)
    count, _ = false_accept_census(ops, p)
    assert count == poly_roots(ops, p)
    assert count <= max(op.value for op in ops)
