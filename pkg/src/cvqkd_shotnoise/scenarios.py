"""Preset runs: honest calibration and the attack regimes.

The honest preset keeps the measured technical-noise slope (2.07e-3 SNU per
SNU) with a key-group signal of about 48 SNU, large enough that the affine
law is resolved with 1e6 pulses per group. Attack presets use a lossless
line (T = 1) and unit efficiency so that ``v_a`` is the signal variance
``V_B`` seen by the unattenuated detector.
"""

from __future__ import annotations

import math

from .attacks import Composite, InterceptResend, Saturation, calibrate_wavelength_mask
from .estimator import R2_MIN, RESIDUAL_MAX_SNU
from .params import SystemParams
from .schedule import build_geometric_schedule

TECHNICAL_SLOPE = 2.07e-3
REFERENCE_GROUP_SIZE = 500_000_000


def desk_thresholds(n_per_group: int, n_reference: int = REFERENCE_GROUP_SIZE) -> dict:
    """Gate thresholds with the residual budget rescaled to the run's group size.

    The budget tracks the ``sqrt(2/N)`` statistical error of a variance
    estimate, so it grows as ``sqrt(n_reference / n_per_group)``.
    """
    scale = math.sqrt(n_reference / n_per_group)
    return {"r2_min": R2_MIN, "residual_max_snu": RESIDUAL_MAX_SNU * scale, "atten_r2_min": R2_MIN}


def honest_params(seed: int = 0, n_per_group: int = 1_000_000, v_a: float = 150.0) -> SystemParams:
    return SystemParams(v_a=v_a, eps_mod=TECHNICAL_SLOPE * v_a, seed=seed, n_per_group=n_per_group)


def attack_params(v_b: float, seed: int = 0, n_per_group: int = 1_000_000) -> SystemParams:
    return SystemParams(v_a=v_b, t_channel=1.0, eta=1.0, eps_mod=TECHNICAL_SLOPE * v_b,
                        v_el=0.01, seed=seed, n_per_group=n_per_group)


def saturation_attack(alpha: float = 4.0, delta: float = 4.0, mu: float = 1.0) -> Composite:
    return Composite((InterceptResend(mu), Saturation(alpha, delta)))


def intercept_resend_attack(mu: float = 1.0) -> InterceptResend:
    return InterceptResend(mu)


def wavelength_mask_attack(params: SystemParams, schedule=None, mu: float = 1.0) -> Composite:
    schedule = schedule or build_geometric_schedule()
    return Composite((InterceptResend(mu), calibrate_wavelength_mask(params, schedule, mu)))
