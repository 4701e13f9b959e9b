import math

import numpy as np
import pytest

from cvqkd_shotnoise.analytic import expected_curves
from cvqkd_shotnoise.estimator import VarianceZeroError, estimator_sigma, group_stats
from cvqkd_shotnoise.params import SystemParams
from cvqkd_shotnoise.scenarios import honest_params, saturation_attack
from cvqkd_shotnoise.schedule import AttenuationSchedule, build_geometric_schedule
from cvqkd_shotnoise.simulate import draw_alice_symbols, simulate_block, simulate_pulse, simulate_stats

SMALL = build_geometric_schedule(5, 0.5, 1.0)


def test_block_layout_interleaves_quadratures():
    p = honest_params(seed=1, n_per_group=200)
    trace = simulate_block(p, SMALL)
    assert len(trace) == 2 * 5 * 200
    assert np.array_equal(trace.index, np.arange(len(trace)))
    assert np.array_equal(trace.quadrature, np.arange(len(trace)) % 2)
    assert set(np.unique(trace.atten_index)) <= set(range(5))
    rec = next(trace.records())
    assert rec.quadrature == "X" and rec.index == 0


def test_same_seed_is_bit_identical_and_seeds_differ():
    p = honest_params(seed=9, n_per_group=500)
    a = simulate_block(p, SMALL, saturation_attack())
    b = simulate_block(p, SMALL, saturation_attack())
    assert np.array_equal(a.bob_value_volts, b.bob_value_volts)
    assert np.array_equal(a.atten_index, b.atten_index)
    c = simulate_block(p.with_(seed=10), SMALL)
    assert not np.array_equal(a.alice_value, c.alice_value)


def test_streaming_stats_match_full_trace():
    p = honest_params(seed=4, n_per_group=3000)
    attack = saturation_attack()
    trace = simulate_block(p, SMALL, attack)
    streamed = simulate_stats(p, SMALL, attack)
    for q in ("X", "P"):
        k, a, b = trace.select(q)
        full = group_stats(a, b, k, SMALL.ratios, q)
        for g1, g2 in zip(full, streamed[q]):
            assert g1.n == g2.n
            assert g1.s == pytest.approx(g2.s, rel=1e-12)
            assert g1.n_var == pytest.approx(g2.n_var, rel=1e-12)


def test_quadratures_are_independent():
    p = honest_params(seed=2, n_per_group=20_000)
    trace = simulate_block(p, SMALL)
    _, ax, _ = trace.select("X")
    _, ap, _ = trace.select("P")
    rho = np.corrcoef(ax, ap)[0, 1]
    assert abs(rho) < 5 / math.sqrt(ax.size)


def test_alice_symbols_have_configured_variance():
    p = SystemParams(v_a=9.5)
    x = draw_alice_symbols(p, 400_000, np.random.default_rng(0))
    assert np.var(x) == pytest.approx(9.5, rel=5 * estimator_sigma(x.size))
    with pytest.raises(ValueError):
        draw_alice_symbols(p, 0, np.random.default_rng(0))


def test_blocked_signal_gives_shot_plus_electronic_noise():
    p = honest_params(seed=0)
    y = simulate_pulse(p, np.zeros(400_000), 0.0, np.random.default_rng(3))
    expected = p.gain_v2 * (1 + p.v_el)
    assert np.var(y) == pytest.approx(expected, rel=5 * estimator_sigma(y.size))
    assert np.ndim(simulate_pulse(p, 1.0, 0.5, np.random.default_rng(3))) == 0
    with pytest.raises(ValueError):
        simulate_pulse(p, 1.0, 1.5, np.random.default_rng(3))


def test_zero_ratio_group_uses_bypass():
    sched = AttenuationSchedule((0.0, 0.5, 1.0))
    st = simulate_stats(honest_params(seed=1, n_per_group=50_000), sched)["X"]
    assert st[0].s == 0.0
    assert st[0].n_var / 0.78316 == pytest.approx(1.01, rel=5 * estimator_sigma(st[0].n))


def test_group_variances_follow_affine_law():
    p = honest_params(seed=11, n_per_group=200_000)
    sched = build_geometric_schedule(6, 0.6, 1.0)
    s_exp, n_exp = expected_curves(p, sched)
    for q, stats in simulate_stats(p, sched).items():
        for g, s, n in zip(stats, s_exp, n_exp):
            tol = 5 * estimator_sigma(g.n)
            assert g.n_var / p.gain_v2 == pytest.approx(n, rel=tol)
            assert g.s / p.gain_v2 == pytest.approx(s, rel=3 * tol)


def test_degenerate_modulation():
    p = SystemParams(v_a=0.0, eps_mod=0.0, allow_degenerate=True, n_per_group=1000)
    assert not np.any(draw_alice_symbols(p, 100, np.random.default_rng(0)))
    with pytest.raises(VarianceZeroError) as exc:
        simulate_stats(p, SMALL)
    assert exc.value.code == "VAR_ZERO"


def test_snu_conversion_is_exact():
    p = honest_params(seed=3, n_per_group=1000)
    trace = simulate_block(p, SMALL)
    p2 = p.with_(gain_v2=1.0)
    trace2 = simulate_block(p2, SMALL)
    np.testing.assert_allclose(trace.bob_value_volts / math.sqrt(p.gain_v2),
                               trace2.bob_value_volts, rtol=1e-12)
