"""Receiver attenuation schedule and random per-pulse assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AttenuationSchedule:
    """Ordered attenuation ratios ``r_0 < ... < r_{K-1} <= 1``.

    The last (least attenuated) group is the key group.

    Parameters
    ----------
    ratios : tuple of float
        Nominal intensity transmissions, strictly increasing in [0, 1].
    weights : tuple of float, optional
        Selection probabilities. Uniform when omitted.
    bias : tuple of float, optional
        Multiplicative systematic error per level: the physically applied
        ratio is ``r_i * (1 + bias_i)`` while the analysis keeps using the
        nominal ``r_i``. Zero when omitted.
    """

    ratios: tuple
    weights: tuple | None = None
    bias: tuple | None = field(default=None)

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratios)
        object.__setattr__(self, "ratios", r)
        if len(r) < 3:
            raise ValueError(f"need at least 3 attenuation ratios, got {len(r)}")
        if any(not 0.0 <= x <= 1.0 for x in r):
            raise ValueError("attenuation ratios must lie in [0, 1]")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("attenuation ratios must be strictly increasing")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(r) or any(x <= 0 for x in w):
                raise ValueError("weights must be positive, one per ratio")
            total = sum(w)
            object.__setattr__(self, "weights", tuple(x / total for x in w))
        if self.bias is not None:
            b = tuple(float(x) for x in self.bias)
            if len(b) != len(r):
                raise ValueError("bias must have one entry per ratio")
            if any(ri * (1 + bi) < 0 or ri * (1 + bi) > 1 for ri, bi in zip(r, b)):
                raise ValueError("biased ratios must stay within [0, 1]")
            object.__setattr__(self, "bias", b)

    @property
    def k(self) -> int:
        return len(self.ratios)

    @property
    def key_group_index(self) -> int:
        return self.k - 1

    @property
    def applied_ratios(self) -> np.ndarray:
        r = np.asarray(self.ratios)
        if self.bias is None:
            return r
        return r * (1.0 + np.asarray(self.bias))

    @property
    def probabilities(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.k, 1.0 / self.k)
        return np.asarray(self.weights)

    def parameter_estimation_fraction(self) -> float:
        """Expected share of pulses outside the key group."""
        if self.weights is None:
            return (self.k - 1) / self.k
        return 1.0 - self.weights[-1]

    def dynamic_range_db(self) -> float:
        """``10 log10(r_max / r_min)``; infinite if ``r_0 == 0``."""
        if self.ratios[0] == 0:
            return math.inf
        return 10.0 * math.log10(self.ratios[-1] / self.ratios[0])


def build_geometric_schedule(k: int = 16, step: float = 0.7, top: float = 1.0) -> AttenuationSchedule:
    """Geometric ladder ``r_i = top * step**(k - 1 - i)``.

    >>> build_geometric_schedule(3, 0.5, 1.0).ratios
    (0.25, 0.5, 1.0)
    """
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k}")
    if not 0.0 < step < 1.0:
        raise ValueError(f"step must be in (0, 1), got {step}")
    if not 0.0 < top <= 1.0:
        raise ValueError(f"top must be in (0, 1], got {top}")
    k = int(k)
    return AttenuationSchedule(tuple(top * step ** (k - 1 - i) for i in range(k)))


def assign_random(schedule: AttenuationSchedule, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an attenuation index for each of ``count`` pulses.

    Draws are independent of everything else in the run; with default weights
    each group is equally likely.
    """
    if count < schedule.k:
        raise ValueError(f"count must be >= K = {schedule.k}, got {count}")
    dtype = np.int8 if schedule.k <= 127 else np.int32
    if schedule.weights is None:
        return rng.integers(0, schedule.k, size=count, dtype=dtype)
    return rng.choice(schedule.k, size=count, p=schedule.probabilities).astype(dtype)
