"""Masking-ratio schedules.

All schedules map a training step t in [0, T] to the masking ratio used
for that step's batches. Decaying kinds start at twice the base ratio p
and end at (or near) zero, so the mean ratio over a full run stays close
to p and a decayed run masks about as many tokens as a fixed-p run.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass

_ONE_EXCLUSIVE = math.nextafter(1.0, 0.0)  # ratio 1.0 would leave no context


class ScheduleKind(enum.Enum):
    FIXED = "fixed"
    LINEAR = "linear"
    COSINE = "cosine"
    QUAD_CONCAVE = "quad_concave"  # 2p * (1 - (t/T)^2), fast late decay
    QUAD_CONVEX = "quad_convex"    # 2p * (1 - t/T)^2, fast early decay
    ASCENDING = "ascending"
    ASCEND_THEN_DECAY = "ascend_then_decay"


DECAY_KINDS = frozenset(
    {ScheduleKind.LINEAR, ScheduleKind.COSINE, ScheduleKind.QUAD_CONCAVE, ScheduleKind.QUAD_CONVEX}
)


def default_floor(kind: ScheduleKind) -> float:
    """Cosine keeps a 0.02 floor so late-stage batches still carry masked tokens."""
    return 0.02 if kind is ScheduleKind.COSINE else 0.0


@dataclass(frozen=True)
class ScheduleSpec:
    """Schedule family member: kind, base ratio p, horizon T, minimum ratio."""

    kind: ScheduleKind
    p: float = 0.15
    T: int = 1
    floor: float | None = None  # None -> kind default

    def __post_init__(self):
        if not 0.0 < self.p <= 0.5:
            raise ValueError(f"base ratio p must be in (0, 0.5], got {self.p}")
        if self.T < 1:
            raise ValueError(f"total steps T must be >= 1, got {self.T}")
        if self.floor is None:
            object.__setattr__(self, "floor", default_floor(self.kind))
        if not 0.0 <= self.floor < 2.0 * self.p:
            raise ValueError(f"floor must be in [0, 2p), got {self.floor}")


def ratio_at(spec: ScheduleSpec, t: int) -> float:
    """Masking ratio at step t, clamped to [spec.floor, 1).

    t may equal T (final checkpoint boundary); anything outside [0, T]
    is an error.
    """
    if t < 0 or t > spec.T:
        raise ValueError(f"step {t} outside [0, {spec.T}]")
    p, T = spec.p, spec.T
    kind = spec.kind
    if kind is ScheduleKind.FIXED:
        raw = p
    elif kind is ScheduleKind.LINEAR:
        raw = (1.0 - t / T) * 2.0 * p
    elif kind is ScheduleKind.COSINE:
        raw = (1.0 + math.cos(math.pi * t / T)) * p + 0.02
    elif kind is ScheduleKind.QUAD_CONCAVE:
        raw = 2.0 * p * (1.0 - (t / T) ** 2)
    elif kind is ScheduleKind.QUAD_CONVEX:
        raw = 2.0 * p * (1.0 - t / T) ** 2
    elif kind is ScheduleKind.ASCENDING:
        raw = (t / T) * 2.0 * p
    elif kind is ScheduleKind.ASCEND_THEN_DECAY:
        if 2 * t <= T:
            raw = 2.0 * p * (2.0 * t / T)
        else:
            raw = 2.0 * p * (2.0 - 2.0 * t / T)
    else:  # pragma: no cover
        raise ValueError(f"unhandled schedule kind {kind}")
    if raw < spec.floor:
        return spec.floor
    if raw >= 1.0:
        return _ONE_EXCLUSIVE
    return raw


def expected_mass(spec: ScheduleSpec) -> float:
    """Mean ratio over steps 0..T-1, i.e. the token budget per maskable token."""
    # statistics.mean accumulates exactly, so a constant schedule averages
    # to exactly p instead of picking up float summation drift
    return statistics.mean(ratio_at(spec, t) for t in range(spec.T))


def schedule_rows(spec: ScheduleSpec):
    """(t, ratio) pairs for t = 0..T inclusive, for CSV export / plotting."""
    for t in range(spec.T + 1):
        yield t, ratio_at(spec, t)
