"""Conservative excess-noise referral and asymptotic collective key rate.

The rate is the standard GG02 homodyne, reverse-reconciliation bound against
Gaussian collective attacks with the detector's inefficiency and electronic
noise trusted. Variances are in SNU; ``xi`` is excess noise referred to the
channel input (Alice's side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOSS_DB_PER_KM = 0.2


class UnphysicalStateError(ValueError):
    code = "UNPHYSICAL_STATE"


@dataclass(frozen=True)
class LinkParams:
    length_km: float = 80.5
    loss_db_per_km: float = LOSS_DB_PER_KM
    eta: float = 0.322
    v_el: float = 0.01
    beta: float = 0.948
    snr_target: float = 0.075
    slope_margin: float = 1e-3

    def __post_init__(self):
        for name in ("length_km", "loss_db_per_km", "eta", "beta", "snr_target"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("v_el", "slope_margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.beta > 1 or self.eta > 1:
            raise ValueError("beta and eta must not exceed 1")

    @property
    def transmission(self) -> float:
        return channel_transmission(self.length_km, self.loss_db_per_km)


def channel_transmission(length_km: float, loss_db_per_km: float = LOSS_DB_PER_KM) -> float:
    return 10.0 ** (-loss_db_per_km * length_km / 10.0)


def refer_excess_noise_to_alice(xi_bob: float, length_km: float, eta: float) -> float:
    """Undo fibre loss (0.2 dB/km) and detector efficiency: ``xi_bob * 10^(0.02 L) / eta``."""
    if xi_bob < 0 or length_km < 0 or not eta > 0:
        raise ValueError("xi_bob and length_km must be >= 0 and eta > 0")
    return xi_bob * 10.0 ** (LOSS_DB_PER_KM * length_km / 10.0) / eta


def conservative_xi_bob(measured_slope: float, slope_margin: float, signal_var_bob: float) -> float:
    """Excess noise at Bob from the measured slope plus a safety margin."""
    if measured_slope < 0 or slope_margin < 0 or signal_var_bob < 0:
        raise ValueError("inputs must be non-negative")
    return (measured_slope + slope_margin) * signal_var_bob


def modulation_for_snr(snr_target: float, t_channel: float, eta: float, v_el: float) -> float:
    """Alice variance giving ``snr = T eta V_A / (1 + v_el)`` at Bob."""
    if not t_channel > 0 or not eta > 0:
        raise ValueError("transmission and efficiency must be positive")
    if snr_target < 0 or v_el < 0:
        raise ValueError("snr_target and v_el must be non-negative")
    return snr_target * (1.0 + v_el) / (t_channel * eta)


def _g(nu: float) -> float:
    """Von Neumann entropy (bits) of a thermal state with symplectic eigenvalue ``nu``."""
    x = (nu - 1.0) / 2.0
    if x <= 1e-15:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def _noise_terms(t_channel, eta, v_el, xi):
    chi_line = 1.0 / t_channel - 1.0 + xi
    chi_hom = (1.0 - eta) / eta + v_el / eta
    return chi_line, chi_hom, chi_line + chi_hom / t_channel


def mutual_information_snr(v_a, t_channel, eta, v_el, xi) -> float:
    """``I_AB`` from the signal-to-noise ratio at Bob (Shannon formula)."""
    snr = t_channel * eta * v_a / (1.0 + v_el + t_channel * eta * xi)
    return 0.5 * math.log2(1.0 + snr)


def covariance_matrix(v_a, t_channel, eta, v_el, xi) -> np.ndarray:
    """Entanglement-based ``gamma_AB`` (before detector noise), SNU."""
    v = v_a + 1.0
    chi_line = 1.0 / t_channel - 1.0 + xi
    a = v
    b = t_channel * (v + chi_line)
    c = math.sqrt(t_channel * (v * v - 1.0))
    z = np.diag([1.0, -1.0])
    i2 = np.eye(2)
    return np.block([[a * i2, c * z], [c * z, b * i2]])


def mutual_information_cm(v_a, t_channel, eta, v_el, xi) -> float:
    """``I_AB`` from the covariance matrix: ``log2(V_B / V_B|A) / 2`` with detector noise.

    Alice's coherent-state preparation is equivalent to heterodyning mode A,
    hence the conditional variance ``b - c^2 / (a + 1)``.
    """
    gamma = covariance_matrix(v_a, t_channel, eta, v_el, xi)
    a, c, b = gamma[0, 0], gamma[0, 2], gamma[2, 2]
    det_noise = (1.0 - eta) + v_el
    v_b = eta * b + det_noise
    v_b_given_a = eta * (b - c * c / (a + 1.0)) + det_noise
    return 0.5 * math.log2(v_b / v_b_given_a)


def holevo_bob_eve(v_a, t_channel, eta, v_el, xi) -> float:
    """Holevo information between Bob's data and Eve (reverse reconciliation)."""
    v = v_a + 1.0
    chi_line, chi_hom, chi_tot = _noise_terms(t_channel, eta, v_el, xi)
    A = v * v * (1 - 2 * t_channel) + 2 * t_channel + t_channel ** 2 * (v + chi_line) ** 2
    B = t_channel ** 2 * (v * chi_line + 1) ** 2
    C = (v * math.sqrt(B) + t_channel * (v + chi_line) + A * chi_hom) / (t_channel * (v + chi_tot))
    D = math.sqrt(B) * (v + math.sqrt(B) * chi_hom) / (t_channel * (v + chi_tot))
    nus = []
    for p, q in ((A, B), (C, D)):
        disc = p * p - 4 * q
        if disc < -1e-12 * p * p:
            raise UnphysicalStateError("negative discriminant in symplectic spectrum")
        root = math.sqrt(max(disc, 0.0))
        nus.append(math.sqrt((p + root) / 2))
        nus.append(math.sqrt(max((p - root) / 2, 0.0)))
    if min(nus) < 1.0 - 1e-9:
        raise UnphysicalStateError(f"symplectic eigenvalue below 1: {min(nus)}")
    l1, l2, l3, l4 = nus
    return _g(l1) + _g(l2) - _g(l3) - _g(l4)


def collective_key_rate(v_a: float, t_channel: float, eta: float, v_el: float,
                        xi_alice: float, beta: float) -> float:
    """``max(0, beta I_AB - chi_BE)`` in bits per symbol."""
    if not (v_a >= 0 and 0 < t_channel <= 1 and 0 < eta <= 1 and v_el >= 0
            and xi_alice >= 0 and 0 <= beta <= 1):
        raise UnphysicalStateError("parameters outside the physical range")
    if v_a == 0 or beta == 0:
        return 0.0
    i_ab = mutual_information_snr(v_a, t_channel, eta, v_el, xi_alice)
    chi = holevo_bob_eve(v_a, t_channel, eta, v_el, xi_alice)
    return max(0.0, beta * i_ab - chi)


def conservative_rate(link: LinkParams, measured_slope: float, xi_override: float | None = None):
    """Full chain: slope + margin -> Bob excess noise -> Alice -> rate.

    Returns a dict with every intermediate value.
    """
    t = link.transmission
    v_a = modulation_for_snr(link.snr_target, t, link.eta, link.v_el)
    signal_bob = t * link.eta * v_a
    xi_bob = conservative_xi_bob(measured_slope, link.slope_margin, signal_bob)
    xi_alice = refer_excess_noise_to_alice(xi_bob, link.length_km, link.eta) \
        if link.loss_db_per_km == LOSS_DB_PER_KM else xi_bob / (t * link.eta)
    if xi_override is not None:
        xi_alice = xi_override
    rate = collective_key_rate(v_a, t, link.eta, link.v_el, xi_alice, link.beta)
    return {
        "length_km": link.length_km,
        "transmission": t,
        "v_a_snu": v_a,
        "signal_var_bob_snu": signal_bob,
        "measured_slope": measured_slope,
        "slope_margin": link.slope_margin,
        "xi_bob_snu": xi_bob,
        "xi_alice_snu": xi_alice,
        "beta": link.beta,
        "key_rate_bits_per_symbol": rate,
    }
