import math
import random
from collections import Counter

import numpy as np
import pytest

from pqcheck import oracle
from pqcheck.bidir import (BidirSite, Direction, OnePass, check_bidir, check_bidir_dup,
                           next_power_of_two, one_pass, pad_trace, streams)
from pqcheck.fingerprint import FingerprintContext, context_for, fold
from pqcheck.generators import (FIGURE1_PARAMS, MutationError, MutationKind, gen_rd,
                                gen_valid_pq, mutate)
from pqcheck.metrics import CensusContext, accepting_alphas
from pqcheck.reverse import DuplicateInsertError
from pqcheck.trace import Trace, ext, ins

NESTED = [ins(2), ins(5), ext(5), ext(2)]


def stack_view(state):
    return [(b.h, b.m, b.size) for b in state.stack]


def test_nested_pair_final_stacks():
    ctx = context_for(4, 5, 1, 0)
    fwd, site = one_pass(iter(NESTED), Direction.LEFT_TO_RIGHT, ctx, 4)
    assert site is None
    assert stack_view(fwd) == [(0, -math.inf, 0), (0, 2, 4)]
    bwd, site = one_pass(reversed(NESTED), Direction.RIGHT_TO_LEFT, ctx, 4)
    assert site is None
    assert stack_view(bwd) == [(0, 2, 4)]


def test_wrong_order_rejected_for_almost_all_alphas():
    t = Trace((ins(5), ins(4), ext(4), ext(5)))
    mask = accepting_alphas(t, "bidir", CensusContext(1009))
    assert mask.sum() <= 5


def test_case_two_witness_caught_on_backward_pass():
    # ext(m_B), then ins(a), then ext(b) inside the first half; ext(a) in the second half
    w = [ins(1), ext(1), ins(3), ext(2), ins(2), ext(3), ins(0), ext(0)]
    assert not oracle.check_pq(w).accepted
    p, hits = 1009, 0
    for alpha in range(p):
        ctx = FingerprintContext(p, alpha)
        state, site = one_pass(reversed(w), Direction.RIGHT_TO_LEFT, ctx, 8)
        # rejection happens while reading ext(1), stream position 1
        if site is BidirSite.EXT_MIN_CHECK and 8 - 1 - state.count == 1:
            hits += 1
    assert hits >= p - 3


def test_figure_instance_rejected():
    t = gen_rd(FIGURE1_PARAMS)
    for seed in range(10):
        v = check_bidir(t, context_for(t.n_len, t.u_bound, 1, seed))
        assert not v.accepted and v.pad_count == 2


def test_empty_and_odd():
    ctx = FingerprintContext(17, 3)
    assert check_bidir(Trace(()), ctx).accepted
    v = check_bidir(Trace((ins(1), ext(1), ins(2))), ctx)
    assert not v.accepted and v.reject_site is BidirSite.ODD_LENGTH


def test_backward_pass_rejects_leading_insert():
    ctx = FingerprintContext(17, 3)
    _, site = one_pass(iter([ins(1), ext(1)]), Direction.RIGHT_TO_LEFT, ctx, 2)
    assert site is BidirSite.INELIGIBLE_INSERT


def test_duplicates_need_dup_mode():
    t = Trace((ins(1), ins(1), ext(1), ext(1)))
    with pytest.raises(DuplicateInsertError):
        check_bidir(t, FingerprintContext(17, 3))


def test_padding_examples():
    t4 = Trace(tuple(NESTED))
    assert pad_trace(t4) == (t4, 0)
    t6 = Trace((ins(1), ext(1), ins(2), ext(2), ins(9), ext(9)), 9)
    padded, pad = pad_trace(t6)
    assert pad == 2 and padded.n_len == 8
    assert padded.ops[6:] == (ins(10), ext(10))
    assert pad_trace(Trace((ins(1), ext(1), ins(2)))) == (None, 0)
    assert [next_power_of_two(n) for n in (0, 1, 2, 3, 5, 8, 9)] == [1, 1, 2, 4, 8, 8, 16]


def test_padding_streams_mirror_each_other():
    t = Trace((ins(1), ext(1), ins(2), ext(2), ins(9), ext(9)), 9)
    fwd, bwd = streams(t, 10)
    assert list(bwd) == list(fwd)[::-1]


def random_traces(count, seed, max_pairs=40):
    rng = random.Random(seed)
    for _ in range(count):
        n = 2 * rng.randint(1, max_pairs)
        t = gen_valid_pq(n, 3 * n, rng_seed=rng.randrange(2**32))
        yield t
        kind = rng.choice(list(MutationKind))
        try:
            m = mutate(t, kind, rng.randrange(2**32))
        except MutationError:
            continue
        if not m.stats().has_duplicates and m.n_len % 2 == 0:
            yield m


def test_completeness_on_generated_traces():
    for seed in range(200):
        n = 2 * random.Random(seed).randint(0, 80)
        t = gen_valid_pq(n, 2 * n, rng_seed=seed)
        v = check_bidir(t, context_for(t.n_len, t.u_bound, 1, seed))
        assert v.accepted
        n_pad = next_power_of_two(n) if n else 0
        assert v.pad_count == n_pad - n


class Audited(OnePass):
    """Checks the stack invariants after every letter."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.seen = []

    def read(self, op):
        self.seen.append(op)
        super().read(op)
        live = [b for b in self.stack if b.size > 0]
        sizes = [b.size for b in live]
        assert len(live) <= math.log2(self.n_total) + 1
        assert all(s & (s - 1) == 0 for s in sizes)
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        assert sum(sizes) == self.count
        # merging preserves the fold of everything read so far
        assert sum(b.h for b in self.stack) % self.ctx.p == fold(self.ctx, self.seen)


def audited_run(t, direction, ctx):
    padded, _ = pad_trace(t)
    ops = padded.ops if direction is Direction.LEFT_TO_RIGHT else padded.ops[::-1]
    state, _ = one_pass(ops, direction, ctx, padded.n_len, pass_cls=Audited)
    return state


def test_stack_and_fold_invariants():
    for t in random_traces(60, 11):
        ctx = context_for(t.n_len, t.u_bound, 1, 5)
        for direction in Direction:
            state = audited_run(t, direction, ctx)
            bound = math.log2(state.n_total) + 2
            assert state.peak_depth <= bound


def recorded_blocks(t, ctx):
    padded, _ = pad_trace(t)
    out = {}
    for direction, ops in ((Direction.LEFT_TO_RIGHT, padded.ops),
                           (Direction.RIGHT_TO_LEFT, padded.ops[::-1])):
        state = OnePass(ctx, direction, padded.n_len, record=True)
        for op in ops:
            state.read(op)
        out[direction] = state
    return out


def test_block_symmetry_on_legal_traces():
    for seed in range(40):
        n = 2 * random.Random(seed).randint(1, 50)
        t = gen_valid_pq(n, 2 * n, rng_seed=seed)
        runs = recorded_blocks(t, context_for(t.n_len, t.u_bound, 1, seed))
        fwd = Counter(runs[Direction.LEFT_TO_RIGHT].blocks_seen)
        bwd = Counter(runs[Direction.RIGHT_TO_LEFT].blocks_seen)
        assert fwd == bwd
        # every dyadic block of the padded stream appears exactly once
        n_total = next_power_of_two(n)
        expected = Counter((q * s, s) for k in range(n_total.bit_length())
                           for s in [1 << k] for q in range(n_total // s))
        assert fwd == expected


def test_extract_never_joins_its_own_insert_singleton():
    for seed in range(40):
        n = 2 * random.Random(seed).randint(1, 50)
        t = gen_valid_pq(n, 2 * n, rng_seed=seed)
        padded, _ = pad_trace(t)
        state = recorded_blocks(t, context_for(t.n_len, t.u_bound, 1, seed))[
            Direction.LEFT_TO_RIGHT]
        ins_pos = {op.value: i for i, op in enumerate(padded.ops) if op.kind == "i"}
        for pos, op, target in state.folds:
            if op.kind == "e":
                assert target != (ins_pos[op.value], 1)


def test_census_matches_scalar_runs():
    p = 101
    rng = random.Random(8)
    done = 0
    while done < 10:
        t = gen_valid_pq(8, 12, rng_seed=rng.randrange(10**6))
        m = mutate(t, rng.choice(list(MutationKind)), rng.randrange(10**6))
        if m.stats().has_duplicates:
            continue
        mask = accepting_alphas(m, "bidir", CensusContext(p))
        scalar = [check_bidir(m, FingerprintContext(p, a)).accepted for a in range(p)]
        assert mask.tolist() == scalar
        done += 1


# Duplicates mode

def test_dup_examples():
    ctx = context_for(4, 1, 1, 0)
    assert check_bidir_dup(Trace((ins(1), ins(1), ext(1), ext(1))), ctx).accepted
    bad = Trace((ins(1), ext(1), ext(1), ins(1)))
    assert not oracle.check_pq(bad.ops).accepted
    assert accepting_alphas(bad, "bidir-dup", CensusContext(1009)).sum() <= 3


def test_delta_zero_triggers_check():
    ctx = FingerprintContext(1009, 7)
    state = OnePass(ctx, Direction.LEFT_TO_RIGHT, 4, duplicates=True)
    state.read(ins(3))
    state.read(ext(3))
    sentinel = state.stack[0]
    assert sentinel.delta == 0 and sentinel.h == 0

    class Spy(OnePass):
        calls = []

        def _check(self, h, site):
            self.calls.append(site)
            super()._check(h, site)

    spy = Spy(ctx, Direction.LEFT_TO_RIGHT, 4, duplicates=True)
    spy.read(ins(3))
    spy.read(ext(3))
    assert BidirSite.DELTA_CHECK in spy.calls


def test_dup_mode_on_hidden_larger_value():
    # an equal-minimum block hides an unmatched larger insert
    w = Trace((ins(0), ins(0), ext(0), ins(1), ins(0), ext(0), ext(1), ext(0)))
    assert not oracle.check_pq(w.ops).accepted
    assert accepting_alphas(w, "bidir-dup", CensusContext(1009)).sum() <= 8


def test_dup_mode_completeness_and_soundness_sample():
    ctx = CensusContext(1009)
    rng = random.Random(21)
    for _ in range(150):
        n = 2 * rng.randint(1, 10)
        t = gen_valid_pq(n, rng.randint(1, 3), True, rng.randrange(2**32))
        assert np.all(accepting_alphas(t, "bidir-dup", ctx))
        try:
            m = mutate(t, rng.choice(list(MutationKind)), rng.randrange(2**32))
        except MutationError:
            continue
        count = int(accepting_alphas(m, "bidir-dup", ctx).sum())
        # degree bound over every check performed
        assert count <= 2 * m.n_len * (m.u_bound + m.n_len)


def test_dup_mode_matches_distinct_mode_on_legal_distinct_traces():
    ctx = CensusContext(257)
    for t in random_traces(30, 4, max_pairs=6):
        if oracle.check_pq(t.ops).accepted:
            assert accepting_alphas(t, "bidir", ctx).all()
            assert accepting_alphas(t, "bidir-dup", ctx).all()
