"""Pulse-level simulation of a GG02 link with receiver-side attenuation.

Per pulse, in shot-noise amplitude units (sqrt SNU)::

    field    = alice + z                    z ~ N(0, eps_mod)
    channel  = sqrt(t) * field  [+ resend noise]
    detector = sqrt(r * eta) * channel + n  n ~ N(0, 1 + v_el)  [+ injection]
    output   = detector  [clipped]
    volts    = sqrt(gain_v2) * output

Pulses alternate X, P, X, P, ...; each quadrature is an independent stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import rng as rngs
from .attacks import (apply_intercept_resend, apply_saturation,
                      apply_wavelength_injection, split_attack)
from .estimator import GroupMoments, GroupStats
from .params import QUADRATURES, PulseRecord, SystemParams
from .schedule import AttenuationSchedule, assign_random


def draw_alice_symbols(params: SystemParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Gaussian symbols with variance ``v_a``."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return math.sqrt(params.v_a) * rng.standard_normal(count)


def _detector_snu(params, alice, ratio, attack, physics, attack_rng):
    """Detector output for one group, shot-noise amplitude units."""
    ir, wl, sat = split_attack(attack)
    n = alice.shape[0]
    z = physics.normal(0.0, math.sqrt(params.eps_mod), n)
    noise = physics.normal(0.0, math.sqrt(1.0 + params.v_el), n)

    channel = math.sqrt(params.t_channel) * (alice + z)
    if ir is not None:
        channel = apply_intercept_resend(ir.mu, channel, attack_rng)
    out = math.sqrt(ratio * params.eta) * channel + noise
    if wl is not None:
        out += apply_wavelength_injection(wl, ratio, attack_rng, n)
    if sat is not None:
        out = apply_saturation(sat.alpha, math.sqrt(ratio) * sat.delta, out)
    return out


def simulate_pulse(params: SystemParams, alice_value, r: float, rng: np.random.Generator):
    """Honest detector output in volts for Alice value(s) at ratio ``r``."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"attenuation ratio must be in [0, 1], got {r}")
    a = np.atleast_1d(np.asarray(alice_value, dtype=float))
    out = math.sqrt(params.gain_v2) * _detector_snu(params, a, r, None, rng, None)
    return out[0] if np.ndim(alice_value) == 0 else out


@dataclass
class PulseTrace:
    """Columnar pulse records for a block (both quadratures)."""

    index: np.ndarray
    quadrature: np.ndarray      # 0 = X, 1 = P
    atten_index: np.ndarray
    alice_value: np.ndarray
    bob_value_volts: np.ndarray

    def __len__(self):
        return self.index.shape[0]

    def records(self) -> Iterator[PulseRecord]:
        for i, q, k, a, b in zip(self.index, self.quadrature, self.atten_index,
                                 self.alice_value, self.bob_value_volts):
            yield PulseRecord(int(i), QUADRATURES[q], int(k), float(a), float(b))

    def select(self, quadrature: str):
        """``(atten_index, alice, bob)`` arrays for one quadrature, in pulse order."""
        m = self.quadrature == rngs.quadrature_id(quadrature)
        return self.atten_index[m], self.alice_value[m], self.bob_value_volts[m]

    def design_matrix(self, quadrature: str) -> np.ndarray:
        """Rows of ``(atten_index, alice_value, bob_value_volts)`` for ShotNoiseGate."""
        k, a, b = self.select(quadrature)
        return np.column_stack([k.astype(float), a, b])


def _iter_groups(params, schedule, attack, quadrature):
    """Yield ``(atten_index, positions, alice, bob_volts)`` for one quadrature."""
    count = schedule.k * params.n_per_group
    alice = draw_alice_symbols(params, count, rngs.alice_stream(params.seed, quadrature))
    assign = assign_random(schedule, count, rngs.assign_stream(params.seed, quadrature))
    order = np.argsort(assign, kind="stable")
    counts = np.bincount(assign, minlength=schedule.k)
    gain = math.sqrt(params.gain_v2)
    applied = schedule.applied_ratios
    start = 0
    for k in range(schedule.k):
        pos = order[start:start + counts[k]]
        start += counts[k]
        physics, attack_rng = rngs.group_streams(params.seed, quadrature, k)
        a = alice[pos]
        bob = gain * _detector_snu(params, a, float(applied[k]), attack, physics, attack_rng)
        yield k, pos, a, bob, assign


def simulate_block(params: SystemParams, schedule: AttenuationSchedule, attack=None) -> PulseTrace:
    """Simulate ``K * n_per_group`` pulses per quadrature, interleaved X/P."""
    per_q = schedule.k * params.n_per_group
    total = 2 * per_q
    index = np.arange(total, dtype=np.int64)
    quad = (index % 2).astype(np.uint8)
    atten = np.empty(total, dtype=np.int8 if schedule.k <= 127 else np.int32)
    alice = np.empty(total)
    bob = np.empty(total)
    for qi, q in enumerate(QUADRATURES):
        local_bob = np.empty(per_q)
        local_alice = np.empty(per_q)
        assign = None
        for k, pos, a, b, assign in _iter_groups(params, schedule, attack, q):
            local_alice[pos] = a
            local_bob[pos] = b
        atten[qi::2] = assign
        alice[qi::2] = local_alice
        bob[qi::2] = local_bob
    return PulseTrace(index, quad, atten, alice, bob)


def simulate_stats(params: SystemParams, schedule: AttenuationSchedule, attack=None) -> dict:
    """Per-quadrature GroupStats (volts squared) without materialising the trace.

    Produces exactly the statistics :func:`simulate_block` followed by
    :func:`~cvqkd_shotnoise.estimator.group_stats` would, but holds only one
    quadrature's symbols in memory at a time.
    """
    out = {}
    for q in QUADRATURES:
        stats = []
        for k, pos, a, b, _ in _iter_groups(params, schedule, attack, q):
            ratio = schedule.ratios[k]
            s, nv, _ = GroupMoments.from_arrays(a, b).project(bypass=ratio == 0)
            stats.append(GroupStats(k, q, int(pos.shape[0]), s, nv, "V2", float(ratio)))
        out[q] = stats
    return out
