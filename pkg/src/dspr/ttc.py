"""Inverse time-to-collision baseline sharing the 40-slot vector contract."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import N_SLOTS, Frame, nearest_objects

DEFAULT_CAP = 10.0   # 1/s, upper bound on reported 1/TTC
DEFAULT_D_MIN = 0.1  # m, range floor


@dataclass(frozen=True)
class TtcVector:
    """Per-slot inverse time-to-collision; 0 when a pair is not closing."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (N_SLOTS,):
            raise ValueError(f"ttc vector must have shape ({N_SLOTS},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("ttc vector contains non-finite values")
        if (values < 0).any():
            raise ValueError("ttc vector contains negative values")
        object.__setattr__(self, "values", values)


def inverse_ttc_vector(frame: Frame, cap: float = DEFAULT_CAP,
                       d_min: float = DEFAULT_D_MIN) -> TtcVector:
    """Slot-ordered 1/TTC row for a frame.

    TTC is range over closing rate along the ego-to-object line; pairs that
    are not closing contribute 0 and each value is capped to keep the row
    finite at near-zero range.
    """
    slots = nearest_objects(frame)
    values = np.zeros(N_SLOTS)
    ex, ey = frame.ego.position
    evx, evy = frame.ego.velocity
    for i, obj in enumerate(slots):
        if obj is None:
            continue
        dx = obj.state.position[0] - ex
        dy = obj.state.position[1] - ey
        rng = max(math.hypot(dx, dy), d_min)
        # Closing rate is minus the projection of the relative velocity on
        # the ego-to-object direction.
        closing = -((obj.state.velocity[0] - evx) * dx
                    + (obj.state.velocity[1] - evy) * dy) / rng
        if closing <= 0.0:
            continue
        values[i] = min(closing / rng, cap)
    return TtcVector(values)
