"""Pairing plans: which axis pairs rotate together at which stage.

A plan for dimension d is a binary reduction tree rooted at axis 0.
Stage r (1-based) pairs (i, i + 2**(r-1)) for every i divisible by 2**r,
skipping pairs whose second index falls outside the dimension.  This
yields exactly d - 1 pairs in ceil(log2 d) stages for every d >= 2, and
within a stage no axis appears twice, so all pairs of a stage can be
rotated simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class RotationPair:
    i: int
    j: int
    stage: int  # 1-based stage index
    slot: int   # position within the stage


@dataclass(frozen=True, eq=False)
class RotationPlan:
    d: int
    stages: tuple[tuple[RotationPair, ...], ...]
    # flattened stage-major views used by the kernels
    pair_i: np.ndarray = field(repr=False)
    pair_j: np.ndarray = field(repr=False)
    stage_starts: np.ndarray = field(repr=False)

    @property
    def total_pairs(self) -> int:
        return int(self.pair_i.shape[0])

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def pairs(self) -> list[RotationPair]:
        """All pairs in stage-major order (the parameter order)."""
        return [p for stage in self.stages for p in stage]


def build_plan(d: int) -> RotationPlan:
    """Build the staged pairing plan for dimension d.

    Deterministic for a given d.  Raises DimensionError for d < 2.
    """
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise DimensionError(f"dimension must be an integer, got {d!r}")
    if d < 2:
        raise DimensionError(f"dimension must be >= 2, got {d}")

    num_stages = math.ceil(math.log2(d))
    stages = []
    for r in range(1, num_stages + 1):
        half = 1 << (r - 1)
        stage = []
        for slot, i in enumerate(range(0, d, 1 << r)):
            j = i + half
            if j < d:
                stage.append(RotationPair(i=i, j=j, stage=r, slot=slot))
        stages.append(tuple(stage))

    flat = [p for stage in stages for p in stage]
    pair_i = np.array([p.i for p in flat], dtype=np.intp)
    pair_j = np.array([p.j for p in flat], dtype=np.intp)
    starts = np.zeros(num_stages + 1, dtype=np.intp)
    for r, stage in enumerate(stages):
        starts[r + 1] = starts[r] + len(stage)

    assert int(starts[-1]) == d - 1
    return RotationPlan(
        d=int(d),
        stages=tuple(stages),
        pair_i=pair_i,
        pair_j=pair_j,
        stage_starts=starts,
    )
