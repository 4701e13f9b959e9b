"""System configuration and per-pulse record types.

All variances are in shot-noise units (SNU) except ``gain_v2``, which converts
one SNU of variance to volts squared at the detector output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

QUADRATURES = ("X", "P")


@dataclass(frozen=True)
class SystemParams:
    """Alice, channel and detector configuration.

    Parameters
    ----------
    v_a : float
        Alice modulation variance, SNU.
    t_channel : float
        Channel intensity transmission in [0, 1].
    eta : float
        Receiver detection efficiency in (0, 1].
    eps_mod : float
        Modulation-imperfection noise referred to Alice's output, SNU. It is
        attenuated together with the signal, so it sets the noise-vs-signal
        slope ``eps_mod / v_a``.
    v_el : float
        Electronic noise variance, SNU.
    gain_v2 : float
        Volts squared per SNU.
    n_per_group : int
        Nominal pulses per (attenuation, quadrature) group.
    seed : int
        Master RNG seed (64-bit).
    allow_degenerate : bool
        Permit ``v_a == 0``. Only meant for tests.
    """

    v_a: float = 150.0
    t_channel: float = 1.0
    eta: float = 0.322
    eps_mod: float = 2.07e-3 * 150.0
    v_el: float = 0.01
    gain_v2: float = 0.78316
    n_per_group: int = 1_000_000
    seed: int = 0
    allow_degenerate: bool = False

    def __post_init__(self):
        errors = []
        if not (self.v_a > 0 or (self.allow_degenerate and self.v_a == 0)):
            errors.append(f"v_a must be > 0, got {self.v_a}")
        if not 0.0 <= self.t_channel <= 1.0:
            errors.append(f"t_channel must be in [0, 1], got {self.t_channel}")
        if not 0.0 < self.eta <= 1.0:
            errors.append(f"eta must be in (0, 1], got {self.eta}")
        if not self.eps_mod >= 0:
            errors.append(f"eps_mod must be >= 0, got {self.eps_mod}")
        if not self.v_el >= 0:
            errors.append(f"v_el must be >= 0, got {self.v_el}")
        if not self.gain_v2 > 0:
            errors.append(f"gain_v2 must be > 0, got {self.gain_v2}")
        if int(self.n_per_group) != self.n_per_group or self.n_per_group < 2:
            errors.append(f"n_per_group must be an integer >= 2, got {self.n_per_group}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            errors.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def excess_slope(self) -> float:
        """Noise-vs-signal slope of the honest model (SNU per SNU)."""
        if self.v_a == 0:
            return 0.0
        return self.eps_mod / self.v_a

    @property
    def shot_noise_v2(self) -> float:
        """Expected zero-signal noise in volts squared (shot plus electronic)."""
        return self.gain_v2 * (1.0 + self.v_el)

    def signal_variance(self, ratio: float) -> float:
        """Expected group signal variance at attenuation ``ratio``, SNU."""
        return ratio * self.eta * self.t_channel * self.v_a

    def noise_variance(self, ratio: float) -> float:
        """Expected honest group noise variance at attenuation ``ratio``, SNU."""
        return 1.0 + self.v_el + self.excess_slope * self.signal_variance(ratio)

    def with_(self, **changes) -> "SystemParams":
        d = asdict(self)
        d.update(changes)
        return SystemParams(**d)


class PulseRecord(NamedTuple):
    """One detected pulse."""

    index: int
    quadrature: str
    atten_index: int
    alice_value: float
    bob_value_volts: float


def sqrt_gain(params: SystemParams) -> float:
    return math.sqrt(params.gain_v2)
