from tvmask.masking.plan import (
    ACTION_KEEP,
    ACTION_MASK,
    ACTION_NAMES,
    ACTION_RANDOM,
    MaskPlan,
    MaskPolicy,
    build_plan,
    corrupt,
    select_ptw,
    select_random,
    target_count,
)

__all__ = [
    "ACTION_MASK",
    "ACTION_RANDOM",
    "ACTION_KEEP",
    "ACTION_NAMES",
    "MaskPlan",
    "MaskPolicy",
    "target_count",
    "select_random",
    "select_ptw",
    "corrupt",
    "build_plan",
]
