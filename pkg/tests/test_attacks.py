import numpy as np
import pytest

from cvqkd_shotnoise.analytic import expected_curves
from cvqkd_shotnoise.attacks import (Composite, InterceptResend, Saturation, WavelengthInjection,
                                     apply_intercept_resend, apply_saturation,
                                     apply_wavelength_injection, calibrate_wavelength_mask,
                                     max_hidden_slope, split_attack)
from cvqkd_shotnoise.estimator import estimator_sigma, fit_affine
from cvqkd_shotnoise.scenarios import attack_params, honest_params
from cvqkd_shotnoise.schedule import build_geometric_schedule
from cvqkd_shotnoise.simulate import simulate_stats

GEO = build_geometric_schedule()


def test_saturation_clips_after_offset():
    out = apply_saturation(4.0, 4.0, np.array([-9.0, -1.0, 0.0, 0.5, 3.0]))
    np.testing.assert_array_equal(out, [-4.0, 3.0, 4.0, 4.0, 4.0])
    with pytest.raises(ValueError):
        apply_saturation(0.0, 1.0, [0.0])


def test_saturation_with_huge_alpha_is_a_shift():
    x = np.random.default_rng(0).normal(size=1000)
    np.testing.assert_array_equal(apply_saturation(1e300, 0.0, x), x)


def test_intercept_resend_identity_and_noise():
    x = np.arange(5.0)
    np.testing.assert_array_equal(apply_intercept_resend(0.0, x, np.random.default_rng(0)), x)
    y = apply_intercept_resend(1.0, np.zeros(400_000), np.random.default_rng(1))
    assert np.var(y) == pytest.approx(2.0, rel=5 * estimator_sigma(y.size))
    half = apply_intercept_resend(0.5, np.zeros(400_000), np.random.default_rng(2))
    assert np.var(half) == pytest.approx(1.0, rel=0.02)
    with pytest.raises(ValueError):
        apply_intercept_resend(1.5, x, np.random.default_rng(0))


def test_intercept_resend_raises_group_noise_by_two_snu():
    p = attack_params(20.0, seed=3, n_per_group=200_000)
    sched = build_geometric_schedule(4, 0.5, 1.0)
    st = simulate_stats(p, sched, InterceptResend(1.0))["X"][-1]
    expected = 1 + p.v_el + p.excess_slope * p.signal_variance(1.0) + 2.0
    assert st.n_var / p.gain_v2 == pytest.approx(expected, rel=5 * estimator_sigma(st.n))


def test_wavelength_null_and_minimum():
    null = WavelengthInjection()
    assert float(null.variance(0.3)) == 0.0
    assert not np.any(apply_wavelength_injection(null, 0.3, np.random.default_rng(0), 10))
    wl = WavelengthInjection.from_shape(2.0, floor=0.5)
    assert float(wl.variance(1.0)) == pytest.approx(0.5)
    assert float(wl.variance(0.0)) == pytest.approx(2.5)
    v = apply_wavelength_injection(wl, 0.0, np.random.default_rng(0), 1000)
    np.testing.assert_allclose(np.abs(v), np.sqrt(2.5))


@pytest.mark.parametrize("coeffs", [(1.0, -2.0, -1.0), (1.0, -1.0, 1.0), (0.5, -2.0, 1.0)])
def test_wavelength_invariants(coeffs):
    with pytest.raises(ValueError):
        WavelengthInjection(*coeffs)


def test_composite_rules():
    c = Composite((Saturation(), InterceptResend(0.5)))
    ir, wl, sat = split_attack(c)
    assert ir.mu == 0.5 and wl is None and sat.alpha == 4.0
    assert split_attack(None) == (None, None, None)
    with pytest.raises(ValueError):
        Composite((Saturation(), Saturation(2.0, 1.0)))
    with pytest.raises(ValueError):
        InterceptResend(-0.1)


def test_r2_drops_as_displacement_grows():
    p = attack_params(20.0)
    r2 = []
    for delta in (0.0, 2.0, 4.0, 6.0):
        s, n = expected_curves(p, GEO, Composite((InterceptResend(1.0), Saturation(4.0, delta))))
        r2.append(fit_affine(s, n).r_squared)
    assert all(b < a for a, b in zip(r2, r2[1:]))


def test_wavelength_leaves_attenuation_fit_linear():
    p = honest_params()
    wl = calibrate_wavelength_mask(p, GEO)
    s, _ = expected_curves(p, GEO, Composite((InterceptResend(1.0), wl)))
    assert fit_affine(GEO.ratios, s).r_squared >= 0.99


def test_calibrated_mask_is_valid_and_lowers_slope():
    p = honest_params()
    wl = calibrate_wavelength_mask(p, GEO)
    assert wl.c2 > 0 and wl.c1 == pytest.approx(-2 * wl.c2) and wl.c0 >= wl.c2
    assert isinstance(wl.c0, float)
    ir = InterceptResend(1.0)
    s0, n0 = expected_curves(p, GEO, ir)
    s1, n1 = expected_curves(p, GEO, Composite((ir, wl)))
    assert fit_affine(s1, n1).slope < fit_affine(s0, n0).slope
    assert np.all(np.diff(n1) >= -1e-9)


def test_saturation_vb5_signal_falls_at_top():
    s, _ = expected_curves(attack_params(5.0), GEO, Composite((InterceptResend(1.0), Saturation())))
    assert s[-1] < s[-2]


def test_max_hidden_slope_properties():
    assert max_hidden_slope(GEO.ratios, 2.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        max_hidden_slope(GEO.ratios, 2.0, -1e-4)
    budgets = [5e-5, 1e-4, 2e-4, 4e-4]
    hidden = [max_hidden_slope(GEO.ratios, 2.0, b) for b in budgets]
    assert all(b > a for a, b in zip(hidden, hidden[1:]))
    assert 1e-4 < hidden[2] < 2e-3
