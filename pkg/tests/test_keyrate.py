import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvqkd_shotnoise.keyrate import (LinkParams, UnphysicalStateError, channel_transmission,
                                     collective_key_rate, conservative_rate, conservative_xi_bob,
                                     holevo_bob_eve, modulation_for_snr, mutual_information_cm,
                                     mutual_information_snr, refer_excess_noise_to_alice)

T = channel_transmission(80.5)
V_A = modulation_for_snr(0.075, T, 0.322, 0.01)


def test_xi_bob_from_slope():
    assert conservative_xi_bob(2e-3, 1e-3, 0.08) == pytest.approx(2.4e-4)
    assert conservative_xi_bob(0.0, 0.0, 0.08) == 0.0
    assert conservative_xi_bob(2e-3, 1e-3, 0.8) == pytest.approx(10 * conservative_xi_bob(2e-3, 1e-3, 0.08))


def test_referral_to_alice():
    assert refer_excess_noise_to_alice(2.4e-4, 80.5, 0.322) == pytest.approx(0.030, abs=5e-4)
    assert refer_excess_noise_to_alice(0.7, 0.0, 1.0) == 0.7
    assert refer_excess_noise_to_alice(4.8e-4, 80.5, 0.322) == pytest.approx(
        2 * refer_excess_noise_to_alice(2.4e-4, 80.5, 0.322))
    with pytest.raises(ValueError):
        refer_excess_noise_to_alice(-1.0, 1.0, 0.5)


def test_modulation_for_snr():
    assert V_A == pytest.approx(9.5, abs=0.3)
    assert modulation_for_snr(0.0, T, 0.322, 0.01) == 0.0
    assert modulation_for_snr(0.075, 2 * T, 0.322, 0.01) == pytest.approx(V_A / 2)


def test_reference_operating_point_rate():
    rate = collective_key_rate(V_A, T, 0.322, 0.01, 0.03, 0.948)
    assert 5e-4 <= rate <= 2e-3


def test_rate_trivial_zeros():
    assert collective_key_rate(V_A, T, 0.322, 0.01, 1.0, 0.948) == 0.0
    assert collective_key_rate(V_A, T, 0.322, 0.01, 0.03, 0.0) == 0.0
    assert collective_key_rate(0.0, T, 0.322, 0.01, 0.03, 0.948) == 0.0
    with pytest.raises(UnphysicalStateError) as exc:
        collective_key_rate(V_A, T, 0.322, 0.01, -0.1, 0.948)
    assert exc.value.code == "UNPHYSICAL_STATE"


def test_rate_monotone_sweeps():
    xis = np.linspace(0.0, 0.08, 17)
    rates = [collective_key_rate(V_A, T, 0.322, 0.01, x, 0.948) for x in xis]
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    lengths = np.linspace(10, 100, 10)
    rates = [collective_key_rate(V_A, channel_transmission(L), 0.322, 0.01, 0.03, 0.948)
             for L in lengths]
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    betas = np.linspace(0.9, 1.0, 11)
    rates = [collective_key_rate(V_A, T, 0.322, 0.01, 0.03, b) for b in betas]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


@settings(max_examples=60, deadline=None)
@given(v_a=st.floats(0.1, 100), t=st.floats(1e-3, 1.0), eta=st.floats(0.1, 1.0),
       v_el=st.floats(0.0, 0.2), xi=st.floats(0.0, 0.2))
def test_mutual_information_two_routes(v_a, t, eta, v_el, xi):
    a = mutual_information_snr(v_a, t, eta, v_el, xi)
    b = mutual_information_cm(v_a, t, eta, v_el, xi)
    assert a == pytest.approx(b, rel=1e-9)


def test_holevo_vanishes_without_eve_and_is_positive_on_lossy_line():
    assert holevo_bob_eve(10.0, 1.0, 1.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert holevo_bob_eve(V_A, T, 0.322, 0.01, 0.03) > 0


def test_conservative_chain():
    out = conservative_rate(LinkParams(), 2e-3)
    assert out["xi_bob_snu"] == pytest.approx(3e-3 * out["signal_var_bob_snu"])
    assert 5e-4 <= out["key_rate_bits_per_symbol"] <= 2e-3
    upper = conservative_rate(LinkParams(), 2e-3, xi_override=0.0)
    assert upper["key_rate_bits_per_symbol"] > out["key_rate_bits_per_symbol"]
