import numpy as np
import pytest

from tvmask.masking import (
    ACTION_KEEP,
    ACTION_MASK,
    ACTION_RANDOM,
    MaskPolicy,
    build_plan,
    corrupt,
    select_ptw,
    select_random,
    target_count,
)
from tvmask.masking import kernels

from conftest import make_sequence


def enumerate_orders(weights, count):
    """All ordered draws of the successive proportional process, with their
    exact probabilities (test oracle for inclusion probabilities)."""
    orders = {}

    def rec(avail, chosen, prob):
        if len(chosen) == count:
            orders[tuple(chosen)] = prob
            return
        total = sum(w for _, w in avail)
        for i, (idx, w) in enumerate(avail):
            if w > 0:
                rec(avail[:i] + avail[i + 1 :], chosen + [idx], prob * w / total)

    rec([(i, w) for i, w in enumerate(weights) if w > 0], [], 1.0)
    return orders


def inclusion_from_orders(orders, n):
    probs = np.zeros(n)
    for order, p in orders.items():
        for idx in order:
            probs[idx] += p
    return probs


def uniforms_for_order(weights, order):
    """Midpoint uniforms that force the kernel to reproduce a given order."""
    w = list(weights)
    us = []
    for idx in order:
        total = sum(w)
        before = sum(w[:idx])
        us.append((before + w[idx] / 2.0) / total)
        w[idx] = 0.0
    return np.array(us)


# ------------------------------------------------------------ target_count

def test_target_count_values():
    assert target_count(0.15, 100) == 15
    assert target_count(0.02, 10) == 1  # minimum-one rule at the cosine floor
    assert target_count(0.0, 100) == 0
    assert target_count(0.5, 0) == 0
    assert target_count(0.999, 10) == 10


def test_target_count_rounding_bound():
    rng = np.random.default_rng(0)
    for _ in range(500):
        ratio = float(rng.uniform(0.01, 0.99))
        n = int(rng.integers(1, 300))
        count = target_count(ratio, n)
        assert abs(count - ratio * n) <= 0.5 + 1e-9 or count == 1


def test_target_count_validation():
    with pytest.raises(ValueError):
        target_count(1.0, 10)
    with pytest.raises(ValueError):
        target_count(-0.1, 10)


# ------------------------------------------------------------ selection

def test_select_random_exhaustive_and_empty():
    seq = make_sequence(n=10, n_special_tail=2)
    rng = np.random.default_rng(0)
    got = select_random(seq, seq.n_maskable, rng)
    expected = np.nonzero(~seq.special_mask)[0]
    np.testing.assert_array_equal(got, expected)
    assert select_random(seq, 0, np.random.default_rng(0)).size == 0
    with pytest.raises(ValueError):
        select_random(seq, seq.n_maskable + 1, np.random.default_rng(0))


def test_select_random_uniform_frequency():
    seq = make_sequence(n=12, n_special_tail=1)  # CLS + SEP special, 10 maskable
    trials = 20000
    counts = np.zeros(12)
    for i in range(trials):
        rng = np.random.default_rng(i)
        counts[select_random(seq, 1, rng)[0]] += 1
    freqs = counts[~seq.special_mask] / trials
    sigma = np.sqrt(0.1 * 0.9 / trials)
    assert np.all(np.abs(freqs - 0.1) < 3.5 * sigma)
    assert counts[seq.special_mask].sum() == 0


def test_select_ptw_reduces_to_uniform_inclusion():
    # exact inclusion probabilities vs full enumeration of sampling orders
    for n, tail in ((6, 2), (8, 2), (9, 3)):
        seq = make_sequence(n=n, n_special_tail=tail, pos_pattern=[0, 1, 2])
        m = seq.n_maskable
        weights_full = np.where(seq.special_mask, 0.0, 0.5)
        for count in range(1, min(m, 4) + 1):
            orders = enumerate_orders(weights_full.tolist(), count)
            inclusion = inclusion_from_orders(orders, n)
            expect = np.where(seq.special_mask, 0.0, count / m)
            np.testing.assert_allclose(inclusion, expect, atol=1e-9)
            assert abs(sum(orders.values()) - 1.0) < 1e-9


def test_kernel_realizes_enumerated_process():
    # drive the kernel down every branch of the enumeration with midpoint
    # uniforms; it must reproduce each order exactly
    weights = [0.5, 0.0, 0.2, 0.9, 0.4]
    orders = enumerate_orders(weights, 3)
    for order in orders:
        us = uniforms_for_order(weights, list(order))
        got = kernels.sample_proportional(np.array(weights), 3, us, use_numba=False)
        assert tuple(got.tolist()) == order


def test_select_ptw_weighted_frequency():
    seq = make_sequence(n=4, n_special_tail=1, pos_pattern=[0, 1, 0, 1])
    # maskable positions: 1 (pos cat 1) and 2 (pos cat 0)
    weights_by_cat = np.array([0.2271, 0.7729, 0.5])
    trials = 20000
    hits = 0
    for i in range(trials):
        rng = np.random.default_rng(i)
        if select_ptw(seq, 1, weights_by_cat, rng)[0] == 1:
            hits += 1
    p = 0.7729 / (0.7729 + 0.2271)
    sigma = np.sqrt(p * (1 - p) / trials)
    assert abs(hits / trials - p) < 3.5 * sigma


def test_select_ptw_exhaustive_ignores_weights():
    seq = make_sequence(n=8, n_special_tail=2, pos_pattern=[0, 1])
    weights = np.array([0.9, 0.1] + [0.5] * 15)
    got = select_ptw(seq, seq.n_maskable, weights, np.random.default_rng(1))
    np.testing.assert_array_equal(got, np.nonzero(~seq.special_mask)[0])


def test_select_ptw_rejects_nonpositive_weights():
    seq = make_sequence(n=6, n_special_tail=2, pos_pattern=[0])
    with pytest.raises(ValueError):
        select_ptw(seq, 1, np.zeros(17), np.random.default_rng(0))


def test_selection_is_sorted_and_deterministic():
    seq = make_sequence(n=32, n_special_tail=4, pos_pattern=[0, 1, 2])
    a = select_random(seq, 9, np.random.default_rng(42))
    b = select_random(seq, 9, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    assert np.all(np.diff(a) > 0)


# ------------------------------------------------------------ corrupt

def test_corrupt_all_mask_policy(letters_vocab):
    seq = make_sequence(n=12, n_special_tail=2, vocab_size=letters_vocab.size)
    indices = select_random(seq, 5, np.random.default_rng(0))
    policy = MaskPolicy(strategy="random", mask_frac=1.0, random_frac=0.0, keep_frac=0.0)
    plan = corrupt(seq, indices, policy, letters_vocab, np.random.default_rng(1))
    assert np.all(plan.corrupted_ids[indices] == letters_vocab.mask_id)
    untouched = np.setdiff1d(np.arange(12), indices)
    np.testing.assert_array_equal(plan.corrupted_ids[untouched], seq.token_ids[untouched])
    np.testing.assert_array_equal(plan.labels, seq.token_ids[indices])


def test_corrupt_proportions(letters_vocab):
    policy = MaskPolicy(strategy="random")
    seq = make_sequence(n=104, n_special_tail=2, vocab_size=letters_vocab.size)
    counts = np.zeros(3)
    trials = 400
    for i in range(trials):
        indices = np.arange(1, 101)
        plan = corrupt(seq, indices, policy, letters_vocab, np.random.default_rng(i))
        counts += np.bincount(plan.actions, minlength=3)
    fracs = counts / counts.sum()
    np.testing.assert_allclose(fracs, [0.8, 0.1, 0.1], atol=0.01)


def test_corrupt_keep_positions_still_in_plan(letters_vocab):
    seq = make_sequence(n=10, n_special_tail=2, vocab_size=letters_vocab.size)
    policy = MaskPolicy(strategy="random", mask_frac=0.0, random_frac=0.0, keep_frac=1.0)
    indices = select_random(seq, 4, np.random.default_rng(0))
    plan = corrupt(seq, indices, policy, letters_vocab, np.random.default_rng(1))
    np.testing.assert_array_equal(plan.indices, indices)
    assert np.all(plan.actions == ACTION_KEEP)
    np.testing.assert_array_equal(plan.corrupted_ids, seq.token_ids)  # untouched input


def test_corrupt_random_draws_nonreserved(letters_vocab):
    seq = make_sequence(n=40, n_special_tail=2, vocab_size=letters_vocab.size)
    policy = MaskPolicy(strategy="random", mask_frac=0.0, random_frac=1.0, keep_frac=0.0)
    indices = select_random(seq, 30, np.random.default_rng(0))
    plan = corrupt(seq, indices, policy, letters_vocab, np.random.default_rng(1))
    assert np.all(plan.corrupted_ids[indices] >= letters_vocab.n_reserved)
    assert np.all(plan.corrupted_ids[indices] < letters_vocab.size)


def test_corrupt_rejects_special(letters_vocab):
    seq = make_sequence(n=10, n_special_tail=2, vocab_size=letters_vocab.size)
    with pytest.raises(ValueError):
        corrupt(seq, np.array([0]), MaskPolicy(), letters_vocab, np.random.default_rng(0))


def test_policy_validation():
    with pytest.raises(ValueError):
        MaskPolicy(strategy="bogus")
    with pytest.raises(ValueError):
        MaskPolicy(mask_frac=0.8, random_frac=0.3, keep_frac=0.1)
    with pytest.raises(ValueError):
        MaskPolicy(mask_frac=-0.1, random_frac=1.0, keep_frac=0.1)


# ------------------------------------------------------------ build_plan

def test_build_plan_deterministic_across_backends(letters_vocab):
    seq = make_sequence(n=24, n_special_tail=3, pos_pattern=[0, 1, 4], vocab_size=letters_vocab.size)
    policy = MaskPolicy(strategy="ptw")
    weights = np.linspace(0.2, 0.8, 17)
    plans = []
    for use_numba in (False, True):
        if use_numba and not kernels.HAS_NUMBA:
            continue
        rng = np.random.default_rng(np.random.SeedSequence([9, 2, 0, 0]))
        plans.append(build_plan(seq, 0.3, policy, letters_vocab, rng,
                                weights_by_category=weights, use_numba=use_numba))
    for plan in plans[1:]:
        np.testing.assert_array_equal(plan.indices, plans[0].indices)
        np.testing.assert_array_equal(plan.actions, plans[0].actions)
        np.testing.assert_array_equal(plan.corrupted_ids, plans[0].corrupted_ids)


def test_build_plan_never_masks_specials(letters_vocab):
    rng_master = np.random.default_rng(3)
    policy = MaskPolicy(strategy="random")
    for _ in range(100):
        n = int(rng_master.integers(8, 40))
        tail = int(rng_master.integers(1, 4))
        seq = make_sequence(n=n, n_special_tail=tail, vocab_size=letters_vocab.size)
        ratio = float(rng_master.uniform(0.01, 0.9))
        plan = build_plan(seq, ratio, policy, letters_vocab,
                          np.random.default_rng(rng_master.integers(1 << 30)))
        assert not np.any(seq.special_mask[plan.indices])
        # budget property, modulo the minimum-one rule
        m = seq.n_maskable
        assert abs(plan.indices.size / m - ratio) <= 0.5 / m or plan.indices.size == 1


def test_build_plan_requires_weights_for_ptw(letters_vocab):
    seq = make_sequence(n=10, n_special_tail=2, vocab_size=letters_vocab.size)
    with pytest.raises(ValueError):
        build_plan(seq, 0.2, MaskPolicy(strategy="ptw"), letters_vocab,
                   np.random.default_rng(0))
