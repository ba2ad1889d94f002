"""Command-line entry point.

Commands: synth (demo corpus), prepare (vocab + packed sequences),
train, export / export-schedule (CSV dumps), eval (per-checkpoint
held-out losses), mask-debug (inspect mask plans as JSON).

Exit codes: 0 success, 1 usage/config error, 2 runtime abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from tvmask import config as cfgmod
from tvmask.config import ConfigError, RunConfig
from tvmask.corpus.packing import load_packed, pack_to_arrays, save_packed, sequence_view
from tvmask.corpus.reader import CorpusFormatError, load_tagged_corpus
from tvmask.corpus.synth import write_corpus
from tvmask.corpus.tokenizer import tokenize_aligned
from tvmask.corpus.vocab import Vocabulary, build_vocab
from tvmask.masking import ACTION_NAMES, MaskPolicy, build_plan
from tvmask.model.net import ModelConfig
from tvmask.postags import UPOS_TAGS
from tvmask.schedule import ScheduleKind, ScheduleSpec, schedule_rows
from tvmask import trainer as trainer_mod
from tvmask.trainer import TrainAbort, TrainSettings, eval_mlm, load_checkpoint, train

log = logging.getLogger("tvmask")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class CliError(Exception):
    """Usage or configuration problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; we reserve that for aborts
        self.print_usage(sys.stderr)
        raise CliError(message)


# ---------------------------------------------------------------- prepare

def cmd_synth(args) -> int:
    n = write_corpus(args.out, args.tokens, args.seed)
    print(f"wrote {n} tokens to {args.out}")
    return EXIT_OK


def cmd_prepare(args) -> int:
    if os.path.exists(os.path.join(args.out, "meta.json")) and not args.force:
        raise CliError(f"{args.out} already contains a prepared corpus (use --force)")
    sentences = list(load_tagged_corpus(args.corpus))
    vocab = build_vocab(iter(sentences), args.vocab_size)
    fragments = (tokenize_aligned(s, vocab) for s in sentences)
    tokens, pos_ids, special = pack_to_arrays(fragments, args.L_seq, vocab)

    os.makedirs(args.out, exist_ok=True)
    vocab.save(os.path.join(args.out, "vocab.txt"))
    counts = np.zeros(len(UPOS_TAGS), dtype=np.int64)
    np.add.at(counts, pos_ids[~special], 1)
    stats = {
        "n_sentences": len(sentences),
        "n_sequences": int(tokens.shape[0]),
        "n_subword_tokens": int((~special).sum()),
        "tokens_per_category": {UPOS_TAGS[k]: int(counts[k]) for k in range(len(UPOS_TAGS))},
    }
    with open(os.path.join(args.out, "stats.json"), "w", encoding="utf-8") as f:
        json.dump(stats, f, indent=2, sort_keys=True)
        f.write("\n")
    meta = {
        "L_seq": args.L_seq,
        "vocab_size": vocab.size,
        "vocab_hash": vocab.content_hash(),
        "n_sequences": int(tokens.shape[0]),
        "source": os.path.abspath(args.corpus),
    }
    save_packed(args.out, tokens, pos_ids, special, meta)
    print(f"prepared {tokens.shape[0]} sequences of length {args.L_seq} "
          f"(vocab {vocab.size}) in {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- train

class JsonlSink:
    """Appends metrics/snapshot rows to the run directory as JSONL."""

    def __init__(self, run_dir, resume_step=None, flush_every=200):
        self._metrics_path = os.path.join(run_dir, "metrics.jsonl")
        self._snapshots_path = os.path.join(run_dir, "snapshots.jsonl")
        if resume_step is not None:
            _truncate_jsonl(self._metrics_path, resume_step)
            _truncate_jsonl(self._snapshots_path, resume_step)
        self._metrics = open(self._metrics_path, "a", encoding="utf-8")
        self._snapshots = open(self._snapshots_path, "a", encoding="utf-8")
        self._flush_every = flush_every
        self._pending = 0

    def on_metrics(self, row):
        self._metrics.write(json.dumps(row) + "\n")
        self._pending += 1
        if self._pending >= self._flush_every:
            self.flush()

    def on_snapshots(self, rows):
        for row in rows:
            self._snapshots.write(json.dumps(row) + "\n")

    def flush(self):
        self._metrics.flush()
        self._snapshots.flush()
        self._pending = 0

    def close(self):
        self.flush()
        self._metrics.close()
        self._snapshots.close()


def _truncate_jsonl(path, resume_step: int) -> None:
    """Drop rows at or after resume_step so the resumed run re-emits them."""
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as f:
        rows = [line for line in f if line.strip() and json.loads(line)["step"] < resume_step]
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(rows)


def _build_run_pieces(cfg: RunConfig):
    """Everything train/eval need, resolved from the config + prepared corpus."""
    prepared = cfg.corpus_prepared
    if not prepared or not os.path.isdir(prepared):
        raise CliError(f"corpus.prepared does not point at a prepared corpus: {prepared!r}")
    tokens, pos_ids, special, meta = load_packed(prepared)
    vocab = Vocabulary.load(os.path.join(prepared, "vocab.txt"))
    if vocab.content_hash() != meta["vocab_hash"]:
        raise CliError(f"vocabulary in {prepared} does not match its meta.json hash")
    model_cfg = ModelConfig(
        layers=cfg.model_layers, hidden_dim=cfg.model_hidden_dim, heads=cfg.model_heads,
        ff_dim=cfg.model_ff_dim, vocab_size=vocab.size, L_seq=int(meta["L_seq"]),
        tied=cfg.model_tied,
    )
    spec = ScheduleSpec(ScheduleKind(cfg.schedule_kind), p=cfg.schedule_p,
                        T=cfg.schedule_T, floor=cfg.schedule_floor)
    split = cfg.mask_corrupt_split
    policy = MaskPolicy(strategy=cfg.mask_strategy, mask_frac=split[0],
                        random_frac=split[1], keep_frac=split[2])
    settings = TrainSettings(
        T=cfg.train_T, batch_size=cfg.train_batch_size, seed=cfg.run_seed,
        base_lr=cfg.lr_base, warmup=cfg.lr_warmup,
        lr_shape=ScheduleKind(cfg.lr_shape) if cfg.lr_shape else None,
        loss_mode=cfg.ptw_loss_mode, beta=cfg.ptw_beta, mu=cfg.ptw_mu,
        snapshot_every=cfg.ptw_snapshot_every, checkpoint_every=cfg.train_checkpoint_every,
    )
    return tokens, pos_ids, special, vocab, meta, model_cfg, spec, policy, settings


def _acquire_lock(run_dir):
    lock_path = os.path.join(run_dir, "lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise CliError(f"run directory {run_dir} is locked by another process") from None
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    return lock_path


def cmd_train(args) -> int:
    try:
        cfg = cfgmod.load(args.config)
    except FileNotFoundError:
        raise CliError(f"config file not found: {args.config}") from None
    # command-line overrides: paths, seed and T only
    if args.corpus:
        cfg.corpus_prepared = args.corpus
    if args.out:
        cfg.run_out = args.out
    if args.seed is not None:
        cfg.run_seed = args.seed
    if args.steps is not None:
        cfg.train_T = args.steps
    cfg = cfg.resolved()
    cfg.validate()
    run_dir = cfg.run_out
    if not run_dir:
        raise CliError("no output directory (set run.out or pass --out)")

    resume_step = None
    if os.path.exists(os.path.join(run_dir, "config.txt")):
        if args.resume:
            resume_step = _latest_checkpoint_step(run_dir)
            if resume_step is None:
                raise CliError(f"{run_dir} has no checkpoint to resume from")
        elif not args.force:
            raise CliError(f"{run_dir} already contains a run (use --force or --resume)")
    os.makedirs(run_dir, exist_ok=True)
    os.makedirs(os.path.join(run_dir, "checkpoints"), exist_ok=True)

    lock = _acquire_lock(run_dir)
    sink = None
    try:
        pieces = _build_run_pieces(cfg)
        tokens, pos_ids, special, vocab, meta, model_cfg, spec, policy, settings = pieces
        cfgmod.save(cfg, os.path.join(run_dir, "config.txt"))
        state = None
        if resume_step is not None:
            state, ckpt_cfg, extra = load_checkpoint(
                trainer_mod.checkpoint_path(os.path.join(run_dir, "checkpoints"), resume_step))
            if extra.get("vocab_hash") != meta["vocab_hash"]:
                raise CliError("checkpoint was trained with a different vocabulary")
            if ckpt_cfg != model_cfg:
                raise CliError("checkpoint model config does not match run config")
        sink = JsonlSink(run_dir, resume_step=resume_step)
        train(model_cfg, tokens, pos_ids, special, vocab, spec, policy, settings,
              sink=sink, state=state,
              checkpoint_dir=os.path.join(run_dir, "checkpoints"),
              checkpoint_extra={"vocab_hash": meta["vocab_hash"]})
    except TrainAbort as err:
        print(f"aborted: {err}", file=sys.stderr)
        if err.last_metrics:
            print(f"last metrics: {json.dumps(err.last_metrics)}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if sink is not None:
            sink.close()
        os.unlink(lock)
    print(f"run complete: {run_dir} ({cfg.train_T} steps)")
    return EXIT_OK


def _latest_checkpoint_step(run_dir) -> int | None:
    ckpt_dir = os.path.join(run_dir, "checkpoints")
    if not os.path.isdir(ckpt_dir):
        return None
    steps = sorted(
        int(name[len("step_"):-len(".ckpt")])
        for name in os.listdir(ckpt_dir)
        if name.startswith("step_") and name.endswith(".ckpt")
    )
    return steps[-1] if steps else None


# ---------------------------------------------------------------- export

def cmd_export_schedule(args) -> int:
    spec = ScheduleSpec(ScheduleKind(args.kind), p=args.p, T=args.steps,
                        floor=args.floor)
    _write_csv(args.out, ["step", "ratio"],
               ((t, repr(r)) for t, r in schedule_rows(spec)))
    return EXIT_OK


def cmd_export(args) -> int:
    run_dir = args.run
    cfg_path = os.path.join(run_dir, "config.txt")
    if not os.path.exists(cfg_path):
        raise CliError(f"not a run directory (no config.txt): {run_dir}")
    if args.what == "schedule":
        cfg = cfgmod.load(cfg_path)
        spec = ScheduleSpec(ScheduleKind(cfg.schedule_kind), p=cfg.schedule_p,
                            T=cfg.schedule_T, floor=cfg.schedule_floor)
        _write_csv(args.out, ["step", "ratio"],
                   ((t, repr(r)) for t, r in schedule_rows(spec)))
        return EXIT_OK
    snapshots_path = os.path.join(run_dir, "snapshots.jsonl")
    if not os.path.exists(snapshots_path):
        raise CliError(f"run has no snapshots.jsonl: {run_dir}")
    column = "cum_loss" if args.what == "losses" else "weight"
    def rows():
        with open(snapshots_path, encoding="utf-8") as f:
            for line in f:
                row = json.loads(line)
                yield row["step"], row["category_name"], repr(row[column])
    _write_csv(args.out, ["step", "category", column], rows())
    return EXIT_OK


def _write_csv(out_path, header, rows) -> None:
    sink = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
    try:
        sink.write(",".join(header) + "\n")
        for row in rows:
            sink.write(",".join(str(v) for v in row) + "\n")
    finally:
        if out_path:
            sink.close()


# ---------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    run_dir = args.run
    cfg_path = os.path.join(run_dir, "config.txt")
    if not os.path.exists(cfg_path):
        raise CliError(f"not a run directory (no config.txt): {run_dir}")
    cfg = cfgmod.load(cfg_path)
    prepared = cfg.corpus_prepared
    vocab = Vocabulary.load(os.path.join(prepared, "vocab.txt"))
    _, _, _, meta = load_packed(prepared)

    sentences = list(load_tagged_corpus(args.heldout))
    fragments = (tokenize_aligned(s, vocab) for s in sentences)
    tokens, pos_ids, special = pack_to_arrays(fragments, int(meta["L_seq"]), vocab)

    if args.checkpoint == "all":
        steps = _all_checkpoint_steps(run_dir)
    elif args.checkpoint == "latest":
        latest = _latest_checkpoint_step(run_dir)
        steps = [latest] if latest is not None else []
    else:
        steps = [int(args.checkpoint)]
    if not steps:
        raise CliError(f"no checkpoints found in {run_dir}")

    report = {"run": os.path.abspath(run_dir), "heldout": os.path.abspath(args.heldout),
              "ratio": args.ratio, "seed": args.seed, "checkpoints": []}
    for step in steps:
        path = trainer_mod.checkpoint_path(os.path.join(run_dir, "checkpoints"), step)
        if not os.path.exists(path):
            raise CliError(f"checkpoint not found: {path}")
        state, model_cfg, extra = load_checkpoint(path)
        if extra.get("vocab_hash") != vocab.content_hash():
            raise CliError(f"checkpoint {step} was trained with a different vocabulary")
        result = eval_mlm(state.params, model_cfg, tokens, pos_ids, special, vocab,
                          ratio=args.ratio, seed=args.seed)
        result["step"] = step
        report["checkpoints"].append(result)
        g = result["groups"]
        print(f"step {step}: overall {result['overall']:.4f}  "
              f"function {g['function']:.4f}  non_function {g['non_function']:.4f}")
    out = args.out or os.path.join(run_dir, "eval_report.json")
    with open(out, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"report written to {out}")
    return EXIT_OK


def _all_checkpoint_steps(run_dir) -> list[int]:
    ckpt_dir = os.path.join(run_dir, "checkpoints")
    if not os.path.isdir(ckpt_dir):
        return []
    return sorted(
        int(name[len("step_"):-len(".ckpt")])
        for name in os.listdir(ckpt_dir)
        if name.startswith("step_") and name.endswith(".ckpt")
    )


# ---------------------------------------------------------------- debug

def cmd_mask_debug(args) -> int:
    tokens, pos_ids, special, meta = load_packed(args.prepared)
    vocab = Vocabulary.load(os.path.join(args.prepared, "vocab.txt"))
    policy = MaskPolicy(strategy=args.strategy)
    weights = None
    if args.strategy == "ptw":
        weights = np.full(len(UPOS_TAGS), 0.5)
    plans = []
    for row in (int(r) for r in args.rows.split(",")):
        seq = sequence_view(tokens, pos_ids, special, row)
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 2, 0, row]))
        plan = build_plan(seq, args.ratio, policy, vocab, rng, weights_by_category=weights)
        plans.append({
            "sequence": row,
            "masked_indices": plan.indices.tolist(),
            "actions": [ACTION_NAMES[a] for a in plan.actions],
            "labels": plan.labels.tolist(),
        })
    json.dump(plans, sys.stdout, indent=2)
    print()
    return EXIT_OK


# ---------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="tvmask", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic tagged corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--tokens", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", help="build vocabulary and packed sequences")
    p.add_argument("--corpus", required=True, help="tagged text: FORM<TAB>UPOS lines")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=8192)
    p.add_argument("--L-seq", dest="L_seq", type=int, default=128)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="run MLM training from a config file")
    p.add_argument("config")
    p.add_argument("--out", help="run directory (overrides run.out)")
    p.add_argument("--corpus", help="prepared corpus dir (overrides corpus.prepared)")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, help="total steps T (overrides train.T)")
    p.add_argument("--resume", action="store_true", help="continue from the last checkpoint")
    p.add_argument("--force", action="store_true", help="overwrite an existing run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-schedule", help="dump (step, ratio) pairs as CSV")
    p.add_argument("--kind", required=True, choices=[k.value for k in ScheduleKind])
    p.add_argument("--p", type=float, default=0.15)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_export_schedule)

    p = sub.add_parser("export", help="dump run artifacts as tidy CSV")
    p.add_argument("--run", required=True)
    p.add_argument("--what", required=True, choices=["schedule", "losses", "weights"])
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("eval", help="held-out MLM evaluation per checkpoint")
    p.add_argument("--run", required=True)
    p.add_argument("--heldout", required=True, help="tagged text file")
    p.add_argument("--checkpoint", default="all", help="step number, 'all' or 'latest'")
    p.add_argument("--ratio", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (default <run>/eval_report.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mask-debug", help="dump mask plans as JSON")
    p.add_argument("--prepared", required=True)
    p.add_argument("--rows", default="0")
    p.add_argument("--ratio", type=float, default=0.15)
    p.add_argument("--strategy", default="random", choices=["random", "ptw"])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mask_debug)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, CorpusFormatError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
