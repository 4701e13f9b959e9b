"""Attack models injected into the simulated pulse stream.

Injection points are fixed: intercept-and-resend acts on the channel output
(before Bob's attenuator), wavelength injection adds to the detector input and
saturation clips the detector output. A composite attack always applies them
in that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog

from .estimator import fit_affine

#: Excess noise of a full intercept-and-resend attack at Bob's input, SNU.
INTERCEPT_RESEND_NOISE = 2.0


@dataclass(frozen=True)
class InterceptResend:
    """Eve measures a fraction ``mu`` of the pulses and resends them."""

    mu: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"intercept-resend fraction must be in [0, 1], got {self.mu}")


@dataclass(frozen=True)
class Saturation:
    """Displace Bob's states by ``delta`` so the detector clips at ``+-alpha``.

    Both values are in shot-noise standard deviations. ``delta`` is the
    displacement seen by the detector on the unattenuated path; Bob's
    attenuator scales it by ``sqrt(r)`` like any other optical amplitude.
    """

    alpha: float = 4.0
    delta: float = 4.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"saturation alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class WavelengthInjection:
    """Attenuation-dependent noise ``v(r) = c2 r^2 + c1 r + c0`` (SNU).

    The polynomial must have its minimum at ``r = 1`` and stay non-negative,
    which pins ``c1 = -2 c2`` with ``c2 > 0`` and ``c0 >= c2``. All-zero
    coefficients describe the null attack.
    """

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.c0 == self.c1 == self.c2 == 0.0:
            return
        if not self.c2 > 0:
            raise ValueError(f"wavelength c2 must be > 0, got {self.c2}")
        if not math.isclose(self.c1, -2.0 * self.c2, rel_tol=1e-9, abs_tol=1e-15):
            raise ValueError(f"wavelength c1 must equal -2*c2 = {-2 * self.c2}, got {self.c1}")
        if self.c0 < self.c2 * (1 - 1e-12):
            raise ValueError(f"wavelength c0 must be >= c2 = {self.c2}, got {self.c0}")

    @classmethod
    def from_shape(cls, c2: float, floor: float = 0.0) -> "WavelengthInjection":
        """Polynomial ``c2 (1 - r)^2 + floor``."""
        return cls(c0=c2 + floor, c1=-2.0 * c2, c2=c2)

    def variance(self, r):
        return self.c2 * np.square(r) + self.c1 * np.asarray(r) + self.c0


@dataclass(frozen=True)
class Composite:
    attacks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        attacks = tuple(self.attacks)
        object.__setattr__(self, "attacks", attacks)
        kinds = [type(a) for a in attacks]
        for a in attacks:
            if not isinstance(a, (InterceptResend, Saturation, WavelengthInjection)):
                raise ValueError(f"unsupported attack component {a!r}")
        if len(set(kinds)) != len(kinds):
            raise ValueError("a composite attack may hold at most one attack of each kind")


AttackConfig = InterceptResend | Saturation | WavelengthInjection | Composite


def split_attack(attack):
    """Return ``(intercept_resend, wavelength, saturation)``, ``None`` when absent."""
    if attack is None:
        parts = ()
    elif isinstance(attack, Composite):
        parts = attack.attacks
    else:
        parts = (attack,)
    found = {InterceptResend: None, WavelengthInjection: None, Saturation: None}
    for a in parts:
        found[type(a)] = a
    return found[InterceptResend], found[WavelengthInjection], found[Saturation]


def apply_intercept_resend(mu: float, channel_output, rng: np.random.Generator):
    """Add resend noise (2 SNU) to a fraction ``mu`` of channel-output amplitudes."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must be in [0, 1], got {mu}")
    x = np.asarray(channel_output, dtype=float)
    if mu == 0:
        return x.copy()
    noise = rng.normal(0.0, math.sqrt(INTERCEPT_RESEND_NOISE), size=x.shape)
    if mu < 1:
        noise *= rng.random(size=x.shape) < mu
    return x + noise


def apply_saturation(alpha: float, delta: float, detector_output_snu):
    """Clip ``x + delta`` to ``[-alpha, alpha]`` (shot-noise std units)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    return np.clip(np.asarray(detector_output_snu, dtype=float) + delta, -alpha, alpha)


def apply_wavelength_injection(coeffs: WavelengthInjection, r: float, rng: np.random.Generator, size):
    """Random-sign term of magnitude ``sqrt(v(r))`` for each of ``size`` pulses."""
    v = float(coeffs.variance(r))
    if v <= 0:
        return np.zeros(size)
    signs = rng.integers(0, 2, size=size) * 2.0 - 1.0
    return math.sqrt(v) * signs


def _expected_noise(ratios, params, mu):
    r = np.asarray(ratios, dtype=float)
    excess = r * params.eta * (params.t_channel * params.eps_mod + INTERCEPT_RESEND_NOISE * mu)
    return 1.0 + params.v_el + excess


def calibrate_wavelength_mask(params, schedule, mu: float = 1.0, c0_max: float = 10.0,
                              n_check: int = 1001) -> WavelengthInjection:
    """Coefficients that best hide an intercept-and-resend attack.

    Minimises the fitted noise-vs-signal slope over ``(c0, c2)`` subject to
    ``v(r) >= 0`` and to the expected noise staying non-decreasing in ``r``
    on ``[0, 1]``: an injected term steep enough to make the noise fall while
    the signal grows would be unphysical. Slope and constraints are linear in
    the coefficients, so this is a small linear program.
    """
    ratios = np.asarray(schedule.ratios)
    s = np.array([params.signal_variance(r) for r in ratios])
    quad = (1.0 - ratios) ** 2
    quad_slope = fit_affine(s, quad).slope  # d(fitted slope)/d(c2)

    grid = np.linspace(0.0, 1.0, n_check)
    base = _expected_noise(grid, params, mu)
    dq = np.diff((1.0 - grid) ** 2)        # negative: quad term decreases with r
    dbase = np.diff(base)
    # base' + c2 * dq >= 0  ->  -dq * c2 <= dbase
    a_ub = [[0.0, -d] for d in dq] + [[-1.0, 1.0]]   # last row: c2 - c0 <= 0
    b_ub = list(dbase) + [0.0]
    res = linprog(c=[1e-9, quad_slope], A_ub=a_ub, b_ub=b_ub,
                  bounds=[(0.0, c0_max), (0.0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"wavelength calibration failed: {res.message}")
    c0, c2 = (float(v) for v in res.x)
    if c2 <= 0:
        return WavelengthInjection()
    return WavelengthInjection(c0=max(c0, c2), c1=-2.0 * c2, c2=c2)


def max_hidden_slope(ratios, signal_top: float, residual_budget: float, *,
                     base_slope: float = 2.07e-3, v_el: float = 0.01,
                     c2_max: float = 10.0, max_inflation: float = 0.0,
                     n_inflation: int = 11) -> float:
    """Largest slope reduction a wavelength attack can buy within a residual budget.

    The honest curve is ``n = 1 + v_el + base_slope * s`` with ``s = signal_top
    * r`` over ``ratios``. For each candidate floor ``c0 - c2`` in
    ``[0, max_inflation]`` the curvature ``c2`` is pushed (by root finding) to
    the point where the largest affine-fit residual, in units of the fitted
    intercept, reaches ``residual_budget``. Returns the hidden slope in SNU
    of noise per SNU of signal.
    """
    if residual_budget < 0:
        raise ValueError(f"residual_budget must be >= 0, got {residual_budget}")
    if residual_budget == 0:
        return 0.0
    r = np.asarray(ratios, dtype=float)
    s = signal_top * r
    honest = 1.0 + v_el + base_slope * s
    honest_slope = fit_affine(s, honest).slope

    def evaluate(c2, floor):
        fit = fit_affine(s, honest + c2 * (1.0 - r) ** 2 + floor)
        return fit, fit.max_abs_residual / fit.intercept

    floors = np.linspace(0.0, max_inflation, n_inflation) if max_inflation > 0 else [0.0]
    best = 0.0
    for floor in floors:
        if evaluate(c2_max, floor)[1] <= residual_budget:
            c2 = c2_max
        else:
            c2 = brentq(lambda c: evaluate(c, floor)[1] - residual_budget, 0.0, c2_max,
                        xtol=1e-14, rtol=1e-12)
        fit, _ = evaluate(c2, floor)
        best = max(best, honest_slope - fit.slope)
    return best
