"""Closed-form expectations for group statistics.

Independent of the Monte Carlo path: conditional on Alice's symbol the
detector output is a small Gaussian mixture (resend or not, injection sign),
whose clipped moments are known in closed form; the symbol itself is
integrated out by Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr

from .attacks import INTERCEPT_RESEND_NOISE, split_attack

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _pdf(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def clipped_normal_moments(mu, sigma, alpha):
    """First two raw moments of ``clip(X, -alpha, alpha)``, ``X ~ N(mu, sigma^2)``.

    Returns ``(E[Y], E[Y^2])``; broadcasts over ``mu`` and ``sigma``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if math.isinf(alpha):
        return mu + 0.0 * sigma, mu * mu + sigma * sigma
    lo = (-alpha - mu) / sigma
    hi = (alpha - mu) / sigma
    p_lo = ndtr(lo)
    p_hi = ndtr(-hi)
    p_in = 1.0 - p_lo - p_hi
    f_lo = _pdf(lo)
    f_hi = _pdf(hi)
    # E[X 1{in}] and E[X^2 1{in}] for the untruncated normal
    m1_in = mu * p_in + sigma * (f_lo - f_hi)
    m2_in = (mu * mu + sigma * sigma) * p_in + 2 * mu * sigma * (f_lo - f_hi) \
        + sigma * sigma * (lo * f_lo - hi * f_hi)
    m1 = alpha * (p_hi - p_lo) + m1_in
    m2 = alpha * alpha * (p_lo + p_hi) + m2_in
    return m1, m2


def clipped_normal_variance(mu, sigma, alpha):
    m1, m2 = clipped_normal_moments(mu, sigma, alpha)
    return m2 - m1 * m1


def expected_group_stats(params, ratio: float, attack=None, n_nodes: int = 161):
    """Expected ``(signal_var, noise_var)`` in SNU for one group.

    Uses the same conventions as the estimator: centered projection of Bob's
    output on Alice's symbol, population variances.
    """
    ir, wl, sat = split_attack(attack)
    gain = ratio * params.eta
    base_var = 1.0 + params.v_el + gain * params.t_channel * params.eps_mod
    components = [(1.0, 0.0, base_var)]          # (weight, mean shift, variance)
    if ir is not None and ir.mu > 0:
        resend = base_var + gain * INTERCEPT_RESEND_NOISE
        components = [(1.0 - ir.mu, 0.0, base_var), (ir.mu, 0.0, resend)]
        components = [c for c in components if c[0] > 0]
    if wl is not None:
        w = math.sqrt(max(float(wl.variance(ratio)), 0.0))
        if w > 0:
            components = [(p * 0.5, m + sgn * w, v) for p, m, v in components for sgn in (-1, 1)]
    alpha = math.inf
    offset = 0.0
    if sat is not None:
        alpha = sat.alpha
        offset = math.sqrt(ratio) * sat.delta

    nodes, weights = hermegauss(n_nodes)
    weights = weights / weights.sum()
    a = math.sqrt(params.v_a) * nodes
    mean_det = math.sqrt(gain * params.t_channel) * a + offset
    m1 = np.zeros_like(a)
    m2 = np.zeros_like(a)
    for p, shift, var in components:
        c1, c2 = clipped_normal_moments(mean_det + shift, math.sqrt(var), alpha)
        m1 += p * c1
        m2 += p * c2
    ey = weights @ m1
    var_y = weights @ m2 - ey * ey
    if params.v_a == 0:
        return 0.0, float(var_y)
    cov = weights @ (a * m1)
    signal = cov * cov / params.v_a
    return float(signal), float(var_y - signal)


def expected_curves(params, schedule, attack=None):
    """Expected ``(s, n)`` arrays (SNU) over a schedule's applied ratios."""
    pts = [expected_group_stats(params, float(r), attack) for r in schedule.applied_ratios]
    s, n = np.array(pts).T
    return s, n
