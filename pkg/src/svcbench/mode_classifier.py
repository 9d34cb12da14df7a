"""Macroblock classification and the per-class decision plan.

A block's activity is summarised by (SOD, DCOG) against the co-located
reference block; the class maps to a search range and the subset of
partition modes worth evaluating.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Mode(Enum):
    SKIP = "SKIP"
    INTER_16x16 = "16x16"
    INTER_16x8 = "16x8"
    INTER_8x16 = "8x16"
    INTER_8x8 = "8x8"
    INTER_8x4 = "8x4"
    INTER_4x8 = "4x8"
    INTER_4x4 = "4x4"
    INTRA = "INTRA"
    INTER_LAYER = "IL"

    def __str__(self):
        return self.value


INTER_MODES = (
    Mode.INTER_16x16,
    Mode.INTER_16x8,
    Mode.INTER_8x16,
    Mode.INTER_8x8,
    Mode.INTER_8x4,
    Mode.INTER_4x8,
    Mode.INTER_4x4,
)

# partition geometry (width, height) per inter mode
PARTITION_SHAPE = {
    Mode.INTER_16x16: (16, 16),
    Mode.INTER_16x8: (16, 8),
    Mode.INTER_8x16: (8, 16),
    Mode.INTER_8x8: (8, 8),
    Mode.INTER_8x4: (8, 4),
    Mode.INTER_4x8: (4, 8),
    Mode.INTER_4x4: (4, 4),
}

# fixed signalling index per mode (ue-coded); cheap modes come first
MODE_INDEX = {
    Mode.INTER_16x16: 0,
    Mode.INTER_16x8: 1,
    Mode.INTER_8x16: 2,
    Mode.INTER_8x8: 3,
    Mode.INTER_8x4: 4,
    Mode.INTER_4x8: 5,
    Mode.INTER_4x4: 6,
    Mode.INTRA: 7,
}


class MbClass(Enum):
    C1 = 1
    C2 = 2
    C3 = 3
    C4 = 4

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Thresholds:
    """QP multipliers for the three SOD/DCOG tiers (k for SOD, d for DCOG)."""

    k1: float = 4.0
    k2: float = 10.0
    k3: float = 20.0
    d1: float = 0.5
    d2: float = 1.5
    d3: float = 3.0

    def __post_init__(self):
        if not (0 < self.k1 < self.k2 < self.k3):
            raise ValueError("thresholds must satisfy 0 < k1 < k2 < k3")
        if not (0 < self.d1 < self.d2 < self.d3):
            raise ValueError("thresholds must satisfy 0 < d1 < d2 < d3")


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class DecisionPlan:
    mb_class: MbClass
    search_range: int
    modes: tuple


def classify_mb(sod: int, dcog: float, qp: int, t: Thresholds = DEFAULT_THRESHOLDS) -> MbClass:
    """Tiered (SOD, DCOG) thresholding; both conditions of a tier must hold."""
    if not 0 <= qp <= 51:
        raise ValueError(f"qp {qp} outside [0, 51]")
    if sod <= qp * t.k1 and dcog <= qp * t.d1:
        return MbClass.C1
    if sod <= qp * t.k2 and dcog <= qp * t.d2:
        return MbClass.C2
    if sod <= qp * t.k3 and dcog <= qp * t.d3:
        return MbClass.C3
    return MbClass.C4


_PLANS = {
    MbClass.C1: DecisionPlan(MbClass.C1, 2, (Mode.SKIP, Mode.INTER_16x16)),
    MbClass.C2: DecisionPlan(
        MbClass.C2,
        4,
        (Mode.INTER_16x16, Mode.INTER_16x8, Mode.INTER_8x16, Mode.INTER_8x8),
    ),
    MbClass.C3: DecisionPlan(MbClass.C3, 8, INTER_MODES),
    MbClass.C4: DecisionPlan(MbClass.C4, 32, (Mode.SKIP,) + INTER_MODES + (Mode.INTRA,)),
}


def plan_for_class(mb_class: MbClass) -> DecisionPlan:
    """Search range and mode subset for a class; C4 is the exhaustive plan."""
    return _PLANS[mb_class]


# The exhaustive strategy uses the C4 plan for every macroblock.
BASELINE_PLAN = _PLANS[MbClass.C4]
