"""Run configuration: flat "section.key = value" text files.

One file fully determines a run; the resolved config (every key
explicit) is copied into the run directory so any artifact can be
regenerated from (inputs, config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from tvmask.schedule import ScheduleKind, default_floor


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus_prepared: str = ""
    schedule_kind: str = "fixed"
    schedule_p: float = 0.15
    schedule_T: int = 0          # 0 -> use train_T
    schedule_floor: float = -1.0  # negative -> kind default
    ptw_beta: float = 0.99
    ptw_mu: float = 1.0
    ptw_loss_mode: str = "per-token-mean"
    ptw_snapshot_every: int = 10
    mask_strategy: str = "random"
    mask_corrupt_split: tuple = (0.8, 0.1, 0.1)
    model_layers: int = 2
    model_hidden_dim: int = 128
    model_heads: int = 2
    model_ff_dim: int = 512
    model_tied: bool = True
    lr_base: float = 1e-3
    lr_warmup: int = 100
    lr_shape: str = ""           # empty -> mirror schedule.kind
    train_T: int = 2000
    train_batch_size: int = 16
    train_checkpoint_every: int = 500
    run_seed: int = 1234
    run_out: str = ""

    def resolved(self) -> "RunConfig":
        """Fill the derived defaults so every key has a concrete value."""
        out = RunConfig(**{f.name: getattr(self, f.name) for f in fields(self)})
        if out.schedule_T == 0:
            out.schedule_T = out.train_T
        if out.schedule_floor < 0:
            out.schedule_floor = default_floor(ScheduleKind(out.schedule_kind))
        if not out.lr_shape:
            out.lr_shape = out.schedule_kind
        return out

    def validate(self) -> None:
        if self.schedule_kind not in {k.value for k in ScheduleKind}:
            raise ConfigError(f"unknown schedule.kind {self.schedule_kind!r}")
        if self.lr_shape and self.lr_shape not in {k.value for k in ScheduleKind}:
            raise ConfigError(f"unknown lr.shape {self.lr_shape!r}")
        if self.mask_strategy not in ("random", "ptw"):
            raise ConfigError(f"unknown mask.strategy {self.mask_strategy!r}")
        if self.ptw_loss_mode not in ("per-token-mean", "batch-share"):
            raise ConfigError(f"unknown ptw.loss_mode {self.ptw_loss_mode!r}")
        if len(self.mask_corrupt_split) != 3:
            raise ConfigError("mask.corrupt_split needs three comma-separated fractions")
        if self.train_T < 0 or self.train_batch_size < 1:
            raise ConfigError("train.T must be >= 0 and train.batch_size >= 1")


_KEY_TO_FIELD = {
    "corpus.prepared": "corpus_prepared",
    "schedule.kind": "schedule_kind",
    "schedule.p": "schedule_p",
    "schedule.T": "schedule_T",
    "schedule.floor": "schedule_floor",
    "ptw.beta": "ptw_beta",
    "ptw.mu": "ptw_mu",
    "ptw.loss_mode": "ptw_loss_mode",
    "ptw.snapshot_every": "ptw_snapshot_every",
    "mask.strategy": "mask_strategy",
    "mask.corrupt_split": "mask_corrupt_split",
    "model.layers": "model_layers",
    "model.hidden_dim": "model_hidden_dim",
    "model.heads": "model_heads",
    "model.ff_dim": "model_ff_dim",
    "model.tied": "model_tied",
    "lr.base": "lr_base",
    "lr.warmup": "lr_warmup",
    "lr.shape": "lr_shape",
    "train.T": "train_T",
    "train.batch_size": "train_batch_size",
    "train.checkpoint_every": "train_checkpoint_every",
    "run.seed": "run_seed",
    "run.out": "run_out",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(field_type, raw: str):
    if field_type is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    if field_type is tuple:
        return tuple(float(part) for part in raw.split(","))
    return raw


def to_text(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        key = _FIELD_TO_KEY[f.name]
        lines.append(f"{key} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> RunConfig:
    cfg = RunConfig()
    concrete = {f.name: type(getattr(cfg, f.name)) for f in fields(cfg)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        name = _KEY_TO_FIELD[key]
        setattr(cfg, name, _parse_value(concrete[name], raw))
    return cfg


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        cfg = from_text(f.read())
    cfg.validate()
    return cfg


def save(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_text(cfg))
