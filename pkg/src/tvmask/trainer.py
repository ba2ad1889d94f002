"""Desk-scale MLM training loop.

Closes the feedback loop: schedule -> ratio -> mask plans -> loss ->
per-category tracker -> (for the ptw strategy) next batch's masking
weights. All randomness is derived from (run seed, step, slot) so runs
are bit-reproducible and checkpoint resume continues the exact stream.
"""

from __future__ import annotations

import math
import os
import pickle
from dataclasses import dataclass

import numpy as np

from tvmask.corpus.packing import sequence_view
from tvmask.masking import MaskPolicy, build_plan
from tvmask.model.net import (
    ModelConfig,
    backward_masked,
    dloss_dlogits,
    forward_masked,
    init_params,
    nll_from_logits,
    per_category_losses,
)
from tvmask.model.optim import AdamW, clip_global_norm
from tvmask.postags import GROUPS, UPOS_TAGS
from tvmask.schedule import ScheduleKind, ScheduleSpec, ratio_at
from tvmask.tracker import CategoryLossTracker

# stream tags keeping the seed lineages of batch choice, masking and eval apart
_TAG_BATCH = 1
_TAG_MASK = 2
_TAG_EVAL = 3

CHECKPOINT_VERSION = 1


class TrainAbort(RuntimeError):
    """Loss went non-finite; carries the failing step and last metrics row."""

    def __init__(self, step: int, last_metrics: dict | None):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step
        self.last_metrics = last_metrics


@dataclass
class TrainSettings:
    T: int
    batch_size: int = 16
    seed: int = 0
    base_lr: float = 1e-3
    warmup: int = 100
    lr_shape: ScheduleKind | None = None  # None -> mirror the masking schedule
    loss_mode: str = "per-token-mean"
    beta: float = 0.99
    mu: float = 1.0
    snapshot_every: int = 10
    checkpoint_every: int = 0  # 0 disables periodic checkpoints
    weight_decay: float = 0.01
    clip_norm: float = 1.0


def lr_at(t: int, base_lr: float, warmup: int, T: int, shape: ScheduleKind) -> float:
    """Linear warmup, then a decay whose shape mirrors the masking schedule."""
    if warmup > 0 and t < warmup:
        return base_lr * t / warmup
    if T <= warmup:
        return base_lr
    s = (t - warmup) / (T - warmup)
    s = min(max(s, 0.0), 1.0)
    if shape is ScheduleKind.FIXED:
        factor = 1.0
    elif shape is ScheduleKind.LINEAR:
        factor = 1.0 - s
    elif shape is ScheduleKind.COSINE:
        factor = 0.5 * (1.0 + math.cos(math.pi * s))
    elif shape is ScheduleKind.QUAD_CONCAVE:
        factor = 1.0 - s * s
    elif shape is ScheduleKind.QUAD_CONVEX:
        factor = (1.0 - s) ** 2
    elif shape is ScheduleKind.ASCENDING:
        factor = s
    elif shape is ScheduleKind.ASCEND_THEN_DECAY:
        factor = 2.0 * s if s <= 0.5 else 2.0 - 2.0 * s
    else:  # pragma: no cover
        raise ValueError(f"unhandled shape {shape}")
    return base_lr * factor


@dataclass
class TrainState:
    params: dict
    opt: AdamW
    tracker: CategoryLossTracker
    step: int = 0
    masked_total: int = 0
    run_seed: int = 0


class ListSink:
    """Collects metrics in memory; the CLI uses a file-backed sink instead."""

    def __init__(self):
        self.metrics: list[dict] = []
        self.snapshots: list[dict] = []

    def on_metrics(self, row: dict) -> None:
        self.metrics.append(row)

    def on_snapshots(self, rows: list[dict]) -> None:
        self.snapshots.extend(rows)


def fresh_state(model_cfg: ModelConfig, settings: TrainSettings) -> TrainState:
    params = init_params(model_cfg, settings.seed)
    opt = AdamW(params, weight_decay=settings.weight_decay)
    tracker = CategoryLossTracker(beta=settings.beta, mu=settings.mu)
    return TrainState(params=params, opt=opt, tracker=tracker, step=0,
                      masked_total=0, run_seed=settings.seed)


def _snapshot_rows(tracker: CategoryLossTracker, step: int) -> list[dict]:
    snap = tracker.snapshot()
    return [
        {"step": step, "category_name": UPOS_TAGS[k],
         "cum_loss": float(snap.cum_loss[k]), "weight": float(snap.weights[k])}
        for k in range(len(UPOS_TAGS))
    ]


def make_batch(tokens, pos_ids, special, vocab, ratio, policy, weights, seed, step, batch_size):
    """Pick rows and build one mask plan per row, all from derived seeds.

    Per-slot seeds make plan construction order-independent: building
    plans serially or in parallel yields identical batches.
    """
    n_seq = tokens.shape[0]
    batch_rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_BATCH, step]))
    if n_seq >= batch_size:
        rows = batch_rng.choice(n_seq, size=batch_size, replace=False)
    else:
        rows = batch_rng.integers(0, n_seq, size=batch_size)
    corrupted = np.empty((batch_size, tokens.shape[1]), dtype=np.int64)
    mrows, mcols, labels, mpos = [], [], [], []
    for j, row in enumerate(rows):
        seq = sequence_view(tokens, pos_ids, special, int(row))
        rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_MASK, step, j]))
        plan = build_plan(seq, ratio, policy, vocab, rng, weights_by_category=weights)
        corrupted[j] = plan.corrupted_ids
        mrows.extend([j] * plan.indices.size)
        mcols.extend(plan.indices.tolist())
        labels.extend(plan.labels.tolist())
        mpos.extend(seq.pos_ids[plan.indices].tolist())
    return (rows, corrupted, np.asarray(mrows), np.asarray(mcols),
            np.asarray(labels), np.asarray(mpos))


def train(model_cfg: ModelConfig, tokens, pos_ids, special, vocab,
          schedule_spec: ScheduleSpec, policy: MaskPolicy, settings: TrainSettings,
          sink=None, state: TrainState | None = None, checkpoint_dir=None,
          checkpoint_extra: dict | None = None) -> TrainState:
    """Run (or continue) training to settings.T steps; returns the final state."""
    if state is None:
        state = fresh_state(model_cfg, settings)
    if sink is None:
        sink = ListSink()
    lr_shape = settings.lr_shape if settings.lr_shape is not None else schedule_spec.kind
    pad_id = vocab.pad_id
    last_row: dict | None = None

    for t in range(state.step, settings.T):
        if checkpoint_dir and settings.checkpoint_every and t % settings.checkpoint_every == 0:
            save_checkpoint(checkpoint_path(checkpoint_dir, t), state, model_cfg,
                            extra=checkpoint_extra)
        if settings.snapshot_every and t % settings.snapshot_every == 0:
            sink.on_snapshots(_snapshot_rows(state.tracker, t))

        ratio = ratio_at(schedule_spec, t)
        weights = state.tracker.weights() if policy.strategy == "ptw" else None
        rows, corrupted, mrows, mcols, labels, mpos = make_batch(
            tokens, pos_ids, special, vocab, ratio, policy, weights,
            settings.seed, t, settings.batch_size,
        )
        pad_mask = tokens[rows] == pad_id
        logits, cache = forward_masked(state.params, model_cfg, corrupted, pad_mask, mrows, mcols)
        nll = nll_from_logits(logits, labels)
        loss = float(nll.mean())
        if not math.isfinite(loss):
            raise TrainAbort(t, last_row)
        state.tracker.update(per_category_losses(nll, mpos, mode=settings.loss_mode))
        grads = backward_masked(state.params, model_cfg, cache, dloss_dlogits(logits, labels))
        clip_global_norm(grads, settings.clip_norm)
        lr = lr_at(t, settings.base_lr, settings.warmup, settings.T, lr_shape)
        state.opt.step(state.params, grads, lr)
        for p in state.params.values():
            if not np.isfinite(p).all():
                raise TrainAbort(t, last_row)
        state.step = t + 1
        state.masked_total += int(labels.shape[0])
        last_row = {"step": t, "loss": loss, "ratio": float(ratio), "lr": float(lr),
                    "masked": int(labels.shape[0])}
        sink.on_metrics(last_row)

    if settings.snapshot_every:
        sink.on_snapshots(_snapshot_rows(state.tracker, settings.T))
    if checkpoint_dir:
        save_checkpoint(checkpoint_path(checkpoint_dir, settings.T), state, model_cfg,
                        extra=checkpoint_extra)
    return state


def checkpoint_path(checkpoint_dir, step: int) -> str:
    return os.path.join(checkpoint_dir, f"step_{step:08d}.ckpt")


def save_checkpoint(path, state: TrainState, model_cfg: ModelConfig, extra=None) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    blob = {
        "version": CHECKPOINT_VERSION,
        "model_cfg": model_cfg.__dict__.copy(),
        "step": state.step,
        "masked_total": state.masked_total,
        "run_seed": state.run_seed,
        "params": {k: v.copy() for k, v in state.params.items()},
        "opt": state.opt.state_dict(),
        "tracker": state.tracker.state_dict(),
        "extra": dict(extra or {}),
    }
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        pickle.dump(blob, f, protocol=pickle.HIGHEST_PROTOCOL)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[TrainState, ModelConfig, dict]:
    with open(path, "rb") as f:
        blob = pickle.load(f)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')}")
    model_cfg = ModelConfig(**blob["model_cfg"])
    params = blob["params"]
    opt = AdamW.from_state_dict(params, blob["opt"])
    tracker = CategoryLossTracker.from_state_dict(blob["tracker"])
    state = TrainState(params=params, opt=opt, tracker=tracker, step=int(blob["step"]),
                       masked_total=int(blob["masked_total"]), run_seed=int(blob["run_seed"]))
    return state, model_cfg, blob["extra"]


def eval_mlm(params, model_cfg: ModelConfig, tokens, pos_ids, special, vocab,
             ratio: float = 0.15, seed: int = 0, batch_size: int = 32,
             policy: MaskPolicy | None = None) -> dict:
    """Deterministic masked evaluation on a held-out packed corpus.

    Masks every sequence at the given fixed ratio with seeds derived from
    (seed, row), so repeated calls give identical numbers. Reports mean
    token loss per category plus the function / non-function / other
    group means (means over each group's present categories).
    """
    if policy is None:
        policy = MaskPolicy(strategy="random")
    pad_id = vocab.pad_id
    n = tokens.shape[0]
    sums = np.zeros(len(UPOS_TAGS))
    counts = np.zeros(len(UPOS_TAGS), dtype=np.int64)
    total_nll = 0.0
    total_tokens = 0
    for start in range(0, n, batch_size):
        rows = range(start, min(start + batch_size, n))
        corrupted = np.empty((len(rows), tokens.shape[1]), dtype=np.int64)
        mrows, mcols, labels, mpos = [], [], [], []
        for j, row in enumerate(rows):
            seq = sequence_view(tokens, pos_ids, special, row)
            rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_EVAL, row]))
            plan = build_plan(seq, ratio, policy, vocab, rng)
            corrupted[j] = plan.corrupted_ids
            mrows.extend([j] * plan.indices.size)
            mcols.extend(plan.indices.tolist())
            labels.extend(plan.labels.tolist())
            mpos.extend(seq.pos_ids[plan.indices].tolist())
        pad_mask = tokens[list(rows)] == pad_id
        logits, _ = forward_masked(params, model_cfg, corrupted, pad_mask,
                                   np.asarray(mrows), np.asarray(mcols))
        nll = nll_from_logits(logits, np.asarray(labels))
        np.add.at(sums, np.asarray(mpos), nll)
        np.add.at(counts, np.asarray(mpos), 1)
        total_nll += float(nll.sum())
        total_tokens += nll.shape[0]

    per_category = {
        UPOS_TAGS[k]: (sums[k] / counts[k] if counts[k] else None)
        for k in range(len(UPOS_TAGS))
    }
    groups = {}
    for gname, ids in GROUPS.items():
        vals = [sums[k] / counts[k] for k in ids if counts[k]]
        groups[gname] = float(np.mean(vals)) if vals else None
    return {
        "overall": total_nll / total_tokens,
        "n_masked": total_tokens,
        "per_category": per_category,
        "groups": groups,
    }
