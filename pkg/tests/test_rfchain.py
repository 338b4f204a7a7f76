import math

import numpy as np
import pytest

from ofdm_mother.rfchain import (
    Awgn,
    Cfo,
    Fir,
    IqImbalance,
    PaRapp,
    apply_chain,
    awgn,
    cfo,
    fir,
    iq_imbalance,
    iq_imbalance_coefficients,
    load_impairment_config,
    pa_rapp,
    parse_stage,
    snr_db_for_ebn0,
    stage_from_dict,
    stage_to_dict,
)
from ofdm_mother.rxoracle import symbol_spectra
from ofdm_mother.txchain import IqBuffer, generate_frame

from oracles import brute_convolve, tone


def _noise(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_neutral_settings_are_identity():
    x = IqBuffer(_noise(500), 1e6)
    for stage in (Awgn(math.inf), Cfo(0.0), IqImbalance(0, 0), PaRapp(2, math.inf), Fir((1,))):
        np.testing.assert_array_equal(stage.apply(x).samples, x.samples)
    np.testing.assert_array_equal(apply_chain(x, []).samples, x.samples)


def test_stages_do_not_mutate_input():
    x = _noise(64)
    keep = x.copy()
    buf = IqBuffer(x, 1.0)
    apply_chain(buf, [Awgn(10, 1), Cfo(0.01), IqImbalance(1, 3), PaRapp(2, 1.0), Fir((1, 0.5))])
    np.testing.assert_array_equal(x, keep)


def test_cfo_closed_form():
    y = cfo(np.ones(8), 0.125, sample_rate_hz=1.0).samples
    np.testing.assert_allclose(y, np.exp(2j * np.pi * 0.125 * np.arange(8)), atol=1e-15)


def test_cfo_inverse_restores_signal():
    buf = IqBuffer(_noise(4096, 1), 20e6)
    back = cfo(cfo(buf, 31.25e3), -31.25e3)
    np.testing.assert_allclose(back.samples, buf.samples, atol=1e-12)


def test_cfo_by_one_spacing_moves_every_bin(wlan):
    buf = generate_frame(wlan, 3, 4)
    spacing = wlan.sample_rate_hz / wlan.fft_size
    X = symbol_spectra(buf, wlan)
    Y = symbol_spectra(cfo(buf, spacing), wlan)
    np.testing.assert_allclose(np.abs(Y), np.abs(np.roll(X, 1, axis=1)), atol=1e-9)
    # Within a symbol the shift also carries one constant phase.
    for s in range(4):
        nz = np.abs(X[s]) > 0.5
        ph = np.angle(np.roll(Y[s], -1)[nz] / X[s][nz])
        assert np.ptp(np.unwrap(ph)) < 1e-9


def test_iq_coefficients_neutral():
    a, b = iq_imbalance_coefficients(0, 0)
    assert a == 1 and b == 0


def test_iq_imbalance_matches_branch_model():
    # Oracle: Q branch scaled by g and skewed by phi, I branch untouched.
    g, phi = 10 ** (1.5 / 20), math.radians(4.0)
    x = _noise(300, 2)
    i, q = x.real, x.imag
    expected = i + 1j * g * (q * math.cos(phi) - i * math.sin(phi))
    np.testing.assert_allclose(iq_imbalance(x, 1.5, 4.0).samples, expected, atol=1e-12)


def test_iq_imbalance_image_level():
    n = 1024
    x = tone(n, 37)
    y = iq_imbalance(x, 1.0, 2.0).samples
    Y = np.fft.fft(y)
    a, b = iq_imbalance_coefficients(1.0, 2.0)
    image_dbc = 20 * math.log10(abs(Y[n - 37]) / abs(Y[37]))
    assert image_dbc == pytest.approx(20 * math.log10(abs(b) / abs(a)), abs=1e-9)
    assert abs(Y[n - 37] / n - b) < 1e-12


@pytest.mark.parametrize("gain_db,phase_deg", [(2.0, 0.0), (-1.0, 5.0), (0.5, -12.0), (0.0, 30.0)])
def test_iq_imbalance_power_on_full_period_tone(gain_db, phase_deg):
    # sum x^2 = 0 over whole periods, so the cross term vanishes.
    x = tone(256, 5)
    y = iq_imbalance(x, gain_db, phase_deg).samples
    a, b = iq_imbalance_coefficients(gain_db, phase_deg)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(abs(a) ** 2 + abs(b) ** 2, rel=1e-9)


def test_rapp_saturation_point():
    y = pa_rapp(np.array([1.0 + 0j]), 2.0, 1.0).samples
    assert abs(y[0]) == pytest.approx(2 ** -0.25, rel=1e-12)


def test_rapp_small_signal_linear_and_phase_preserved():
    x = 1e-4 * np.exp(1j * np.linspace(0, 6, 50))
    y = pa_rapp(x, 3.0, 1.0).samples
    np.testing.assert_allclose(y, x, rtol=1e-12)
    big = 50 * np.exp(1j * np.linspace(0, 6, 50))
    yb = pa_rapp(big, 3.0, 1.0).samples
    np.testing.assert_allclose(np.angle(yb), np.angle(big), atol=1e-12)
    assert np.all(np.abs(yb) < 1.0)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_rapp_small_signal_bound(p):
    amp = np.array([1e-3, 1e-2, 0.1])
    y = np.abs(pa_rapp(amp.astype(complex), p, 1.0).samples)
    assert np.all(np.abs(y - amp) / amp < amp ** (2 * p))


def test_rapp_saturates_at_vsat():
    y = pa_rapp(np.array([1e6 + 0j]), 2.0, 0.7).samples
    assert abs(y[0]) == pytest.approx(0.7, rel=1e-9)


def test_rapp_is_monotone_in_amplitude():
    a = np.linspace(0, 10, 1000)
    out = np.abs(pa_rapp(a.astype(complex), 1.5, 2.0).samples)
    assert np.all(np.diff(out) > 0)


@pytest.mark.parametrize("p,vsat", [(0, 1), (-1, 1), (2, 0), (2, -3)])
def test_rapp_rejects_bad_parameters(p, vsat):
    with pytest.raises(ValueError):
        pa_rapp(np.ones(3), p, vsat)
    with pytest.raises(ValueError):
        PaRapp(p, vsat)


def test_fir_matches_brute_force():
    x = _noise(200, 3)
    h = [1, 0.3j, -0.1 + 0.05j, 0.02]
    np.testing.assert_allclose(fir(x, h).samples, brute_convolve(x, h), rtol=0, atol=1e-12)


def test_fir_delay_tap():
    x = _noise(10, 4)
    y = fir(x, [0, 1]).samples
    assert y[0] == 0
    np.testing.assert_array_equal(y[1:], x[:-1])


def test_fir_rejects_empty_taps():
    with pytest.raises(ValueError):
        fir(np.ones(4), [])
    with pytest.raises(ValueError):
        Fir(())


@pytest.mark.parametrize("snr_db", [0.0, 10.0, 25.0])
def test_awgn_measured_snr(snr_db):
    x = tone(10**6, 12345)
    y = awgn(x, snr_db, seed=7).samples
    noise = y - x
    measured = 10 * math.log10(np.mean(np.abs(x) ** 2) / np.mean(np.abs(noise) ** 2))
    assert measured == pytest.approx(snr_db, abs=0.1)


def test_awgn_scales_with_signal_power():
    x = 3.0 * _noise(2 * 10**5, 5)
    noise = awgn(x, 6.0, seed=1).samples - x
    ratio = np.mean(np.abs(x) ** 2) / np.mean(np.abs(noise) ** 2)
    assert 10 * math.log10(ratio) == pytest.approx(6.0, abs=0.1)


def test_awgn_seeded_determinism():
    x = _noise(1000)
    assert np.array_equal(awgn(x, 5, 3).samples, awgn(x, 5, 3).samples)
    assert not np.array_equal(awgn(x, 5, 3).samples, awgn(x, 5, 4).samples)


def test_awgn_rejects_bad_snr():
    with pytest.raises(ValueError):
        Awgn(float("nan"))
    with pytest.raises(ValueError):
        awgn(np.zeros(0), 10)


def test_chain_order_matters_and_is_deterministic():
    buf = IqBuffer(_noise(512, 6), 1e3)
    chain = [PaRapp(2.0, 0.8), Fir((1, 0.2)), Awgn(20, 9)]
    a = apply_chain(buf, chain)
    assert np.array_equal(a.samples, apply_chain(buf, chain).samples)
    b = apply_chain(buf, [Fir((1, 0.2)), PaRapp(2.0, 0.8), Awgn(20, 9)])
    assert not np.allclose(a.samples, b.samples)
    assert a.sample_rate_hz == 1e3


def test_single_stage_chain_equals_direct_call():
    buf = IqBuffer(_noise(256, 8), 2e6)
    assert np.array_equal(apply_chain(buf, [Cfo(1500.0)]).samples, cfo(buf, 1500.0).samples)


def test_cfo_and_unit_fir_preserve_power():
    buf = IqBuffer(_noise(4096, 9), 1e6)
    p0 = np.sum(np.abs(buf.samples) ** 2)
    out = apply_chain(buf, [Cfo(12345.0), Fir((1,)), Cfo(-300.0)])
    assert np.sum(np.abs(out.samples) ** 2) == pytest.approx(p0, rel=1e-12)


def test_parse_stage_forms():
    assert parse_stage("awgn:snr_db=12,seed=3") == Awgn(12.0, 3)
    assert parse_stage("cfo:offset_hz=1e3") == Cfo(1000.0)
    assert parse_stage("iq:gain=0.5,phase=2") == IqImbalance(0.5, 2.0)
    assert parse_stage("rapp:p=2,vsat=0.7") == PaRapp(2.0, 0.7)
    assert parse_stage("fir:taps=1;0.3j") == Fir((1, 0.3j))


@pytest.mark.parametrize("text", ["warp:x=1", "awgn:db=3", "awgn:snr_db", "rapp:p=0,vsat=1"])
def test_parse_stage_errors(text):
    with pytest.raises(ValueError):
        parse_stage(text)


def test_stage_dict_round_trip():
    stages = [Awgn(12.5, 4), Cfo(-200.0), IqImbalance(0.3, -1), PaRapp(3, 1.2), Fir((1, 0.3j))]
    for s in stages:
        assert stage_from_dict(stage_to_dict(s)) == s


def test_load_config_list_and_object():
    text = '[{"type": "cfo", "offset_hz": 5}, {"type": "fir", "taps": [1, [0, 0.3]]}]'
    stages = load_impairment_config(text)
    assert stages == [Cfo(5.0), Fir((1, 0.3j))]
    assert load_impairment_config('{"stages": [{"type": "awgn", "snr_db": 3}]}') == [Awgn(3.0)]


def test_snr_for_ebn0_wlan(wlan):
    # 52 of 64 bins used, QPSK: Es/N0 = Eb/N0 + 3.01 dB, SNR = Es/N0 - 10log10(64/52).
    expected = 8 + 10 * math.log10(2) - 10 * math.log10(64 / 52)
    assert snr_db_for_ebn0(8, wlan) == pytest.approx(expected, abs=1e-12)
