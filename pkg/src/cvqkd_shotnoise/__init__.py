"""Shot-noise calibration with a built-in linearity gate for CV-QKD receivers.

Simulates homodyne measurements under a schedule of signal attenuations,
estimates shot noise from the affine noise-vs-signal law and rejects blocks
whose statistics depart from it (detector saturation, wavelength injection).
"""

__version__ = "0.1.0"

from .params import SystemParams, QUADRATURES  # noqa: E402
from .schedule import AttenuationSchedule, build_geometric_schedule, assign_random  # noqa: E402
from .attacks import (Composite, InterceptResend, Saturation,  # noqa: E402
                      WavelengthInjection, calibrate_wavelength_mask, max_hidden_slope)
from .estimator import (GateVerdict, GroupStats, ShotNoiseGate, estimator_sigma,  # noqa: E402
                        fit_affine, gate, gate_block, project_signal_noise)
from .simulate import simulate_block, simulate_pulse, simulate_stats  # noqa: E402
from .keyrate import (collective_key_rate, modulation_for_snr,  # noqa: E402
                      refer_excess_noise_to_alice)

__all__ = [
    "__version__", "SystemParams", "QUADRATURES", "AttenuationSchedule",
    "build_geometric_schedule", "assign_random", "Composite", "InterceptResend",
    "Saturation", "WavelengthInjection", "calibrate_wavelength_mask", "max_hidden_slope",
    "GateVerdict", "GroupStats", "ShotNoiseGate", "estimator_sigma", "fit_affine", "gate",
    "gate_block", "project_signal_noise", "simulate_block", "simulate_pulse", "simulate_stats",
    "collective_key_rate", "modulation_for_snr", "refer_excess_noise_to_alice",
]
