"""Mask-plan construction for one tagged sequence.

A plan records which positions are prediction targets and how each one
is corrupted on the input side: replaced by the mask token, replaced by
a random non-reserved token, or kept as-is (all three still contribute
to the loss). Special positions ([CLS]/[SEP]/[PAD]) are never selected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvmask.masking import kernels

ACTION_MASK = 0
ACTION_RANDOM = 1
ACTION_KEEP = 2
ACTION_NAMES = ("mask", "random", "keep")

_SPLIT_TOL = 1e-12


@dataclass(frozen=True)
class MaskPolicy:
    """How positions are picked and corrupted.

    strategy: "random" (uniform over maskable positions) or "ptw"
    (proportional to the per-category weight vector).
    """

    strategy: str = "random"
    mask_frac: float = 0.8
    random_frac: float = 0.1
    keep_frac: float = 0.1

    def __post_init__(self):
        if self.strategy not in ("random", "ptw"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        fracs = (self.mask_frac, self.random_frac, self.keep_frac)
        if min(fracs) < 0.0:
            raise ValueError("corruption fractions must be non-negative")
        if abs(sum(fracs) - 1.0) > _SPLIT_TOL:
            raise ValueError(f"corruption fractions must sum to 1, got {sum(fracs)}")


@dataclass
class MaskPlan:
    """Masked index set, per-index corruption action, corrupted token ids."""

    indices: np.ndarray        # sorted positions, int64
    actions: np.ndarray        # uint8, aligned with indices
    corrupted_ids: np.ndarray  # full sequence after corruption
    labels: np.ndarray         # original ids at the masked positions


def target_count(ratio: float, n_maskable: int) -> int:
    """Number of positions to mask: round(ratio * n_maskable), at least 1
    while the ratio is nonzero so floor-ratio batches still train."""
    if ratio < 0.0 or ratio >= 1.0:
        raise ValueError(f"ratio must be in [0, 1), got {ratio}")
    if ratio == 0.0 or n_maskable == 0:
        return 0
    count = int(ratio * n_maskable + 0.5)
    return max(count, 1)


def select_random(seq, count: int, rng: np.random.Generator, use_numba=None) -> np.ndarray:
    """Uniform sample without replacement over non-special positions."""
    weights = (~seq.special_mask).astype(np.float64)
    return _select(weights, count, rng, use_numba)


def select_ptw(seq, count: int, weights_by_category: np.ndarray,
               rng: np.random.Generator, use_numba=None) -> np.ndarray:
    """Weighted sample without replacement: position i is drawn with
    probability proportional to the weight of its POS category among the
    positions still available (successive proportional draws)."""
    w = np.asarray(weights_by_category, dtype=np.float64)
    if np.any(w[seq.pos_ids[~seq.special_mask]] <= 0.0):
        raise ValueError("category weights at eligible positions must be > 0")
    weights = np.where(seq.special_mask, 0.0, w[seq.pos_ids])
    return _select(weights, count, rng, use_numba)


def _select(weights: np.ndarray, count: int, rng, use_numba) -> np.ndarray:
    n_eligible = int(np.count_nonzero(weights))
    if count > n_eligible:
        raise ValueError(f"cannot mask {count} of {n_eligible} maskable positions")
    uniforms = rng.random(count)
    picked = kernels.sample_proportional(weights, count, uniforms, use_numba=use_numba)
    picked.sort()
    return picked


def corrupt(seq, indices: np.ndarray, policy: MaskPolicy, vocab,
            rng: np.random.Generator) -> MaskPlan:
    """Assign a corruption action to each selected index and apply it.

    ``vocab`` supplies mask_id, n_reserved and size; random replacements
    draw uniformly from the non-reserved ids.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and np.any(seq.special_mask[indices]):
        raise ValueError("special positions cannot be masked")
    u = rng.random(indices.size)
    random_ids = rng.integers(vocab.n_reserved, vocab.size, size=indices.size, dtype=np.int64)
    actions = np.full(indices.size, ACTION_KEEP, dtype=np.uint8)
    actions[u < policy.mask_frac + policy.random_frac] = ACTION_RANDOM
    actions[u < policy.mask_frac] = ACTION_MASK
    corrupted = np.array(seq.token_ids, dtype=np.int64, copy=True)
    corrupted[indices[actions == ACTION_MASK]] = vocab.mask_id
    corrupted[indices[actions == ACTION_RANDOM]] = random_ids[actions == ACTION_RANDOM]
    labels = np.asarray(seq.token_ids, dtype=np.int64)[indices]
    return MaskPlan(indices=indices, actions=actions, corrupted_ids=corrupted, labels=labels)


def build_plan(seq, ratio: float, policy: MaskPolicy, vocab,
               rng: np.random.Generator, weights_by_category=None,
               use_numba=None) -> MaskPlan:
    """Select positions per the policy's strategy at the given ratio, then corrupt."""
    n_maskable = int(np.count_nonzero(~seq.special_mask))
    count = target_count(ratio, n_maskable)
    if policy.strategy == "ptw":
        if weights_by_category is None:
            raise ValueError("ptw strategy needs a category weight vector")
        indices = select_ptw(seq, count, weights_by_category, rng, use_numba)
    else:
        indices = select_random(seq, count, rng, use_numba)
    return corrupt(seq, indices, policy, vocab, rng)
