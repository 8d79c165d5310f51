"""Tests for channel realizations, propagation, and the noise convention."""

import numpy as np
import pytest

from fhmimo import (
    ChannelModel,
    HoppingCode,
    awgn_channel,
    draw_channel,
    draw_hopping_code,
    measured_snr,
    propagate,
    rayleigh_channel,
    reorder_ascending,
    rician_channel,
    snr_to_noise_power,
    steering_vector,
    synthesize_tx,
)
from fhmimo.channel import ChannelRealization


class TestSteeringVector:
    def test_zero_angle_is_all_ones(self):
        np.testing.assert_allclose(steering_vector(8, 0.0), np.ones(8))

    def test_quarter_turn_second_element(self):
        v = steering_vector(4, np.pi / 2)
        assert v[1] == pytest.approx(-1j)

    def test_norm_is_element_count(self):
        for u in [0.1, 1.0, np.pi / 2, 3.0]:
            v = steering_vector(16, u)
            assert np.sum(np.abs(v) ** 2) == pytest.approx(16)


class TestDrawChannel:
    def test_awgn_single_unit_path(self):
        ch = draw_channel(awgn_channel(np.pi / 2), 0)
        assert ch.num_paths == 1
        assert abs(ch.gains[0]) == pytest.approx(1.0)
        assert ch.aod[0] == pytest.approx(np.pi / 2)

    def test_awgn_random_phase_spans_circle(self):
        phases = [np.angle(draw_channel(awgn_channel(0.0), s).gains[0])
                  for s in range(200)]
        assert np.min(phases) < -2.0 and np.max(phases) > 2.0

    def test_rician_power_split(self):
        # 5 dB factor with unit direct path: scattered power 10**-0.5
        model = rician_channel(0.0, 5.0, num_paths=8)
        total = np.mean([np.sum(np.abs(draw_channel(model, s).gains[1:]) ** 2)
                         for s in range(4000)])
        assert total == pytest.approx(10 ** -0.5, rel=0.05)

    def test_invalid_models_rejected(self):
        with pytest.raises(ValueError, match="num_paths"):
            ChannelModel(kind="rayleigh", num_paths=0)
        with pytest.raises(ValueError, match="scattered"):
            ChannelModel(kind="rician", num_paths=1)
        with pytest.raises(ValueError, match="one path"):
            ChannelModel(kind="awgn", num_paths=3)
        with pytest.raises(ValueError, match="kind"):
            ChannelModel(kind="fading")

    def test_rayleigh_envelope_distribution(self):
        # many comparable paths -> array-projection envelope is Rayleigh.
        # With large apertures the per-draw angle geometry makes the
        # projection a Gaussian scale mixture, so the CLT argument is tested
        # on a small probe and the exact property on a frozen geometry below.
        from scipy import stats

        model = rayleigh_channel(num_paths=64)
        rng = np.random.default_rng(9)
        probe = steering_vector(4, 0.7)
        values = []
        for _ in range(10_000):
            ch = draw_channel(model, rng)
            values.append(abs(np.vdot(probe, ch.tx_response(4))))
        values = np.asarray(values)
        scale = np.sqrt(np.mean(values ** 2) / 2)
        assert stats.kstest(values, "rayleigh", args=(0, scale)).pvalue > 0.01

    def test_rayleigh_envelope_exact_for_frozen_geometry(self):
        # gains are iid complex Gaussians, so conditioning on the drawn
        # angles the projection envelope is exactly Rayleigh for any aperture
        from scipy import stats

        model = rayleigh_channel(num_paths=64)
        rng = np.random.default_rng(9)
        geometry = draw_channel(model, rng)
        probe = steering_vector(8, 0.7)
        weights = np.array([np.vdot(probe, steering_vector(8, u))
                            for u in geometry.aod])
        values = []
        for _ in range(10_000):
            gains = draw_channel(model, rng).gains
            values.append(abs(np.sum(gains * weights)))
        values = np.asarray(values)
        scale = np.sqrt(np.mean(values ** 2) / 2)
        assert stats.kstest(values, "rayleigh", args=(0, scale)).pvalue > 0.01


class TestPropagate:
    def test_noiseless_single_path_matches_formula(self, toy_params):
        code = HoppingCode(np.array([[0, 2]]))
        tx = synthesize_tx(toy_params, code)
        u0 = 0.9
        ch = draw_channel(awgn_channel(u0, los_gain=0.8 + 0.1j), 0)
        cap = propagate(tx, ch)
        m = np.arange(2)
        expected = (0.8 + 0.1j) * np.sum(
            np.exp(-1j * m * u0)[:, None] * tx.samples[:, 0], axis=0)
        np.testing.assert_allclose(cap.samples[0], expected, atol=1e-12)

    def test_per_hop_energy_identity(self, fig5_params):
        # constant payload phases: per-hop energy is |sum_m e^{-jmu}|^2 * L
        code = reorder_ascending(draw_hopping_code(fig5_params, 0))
        tx = synthesize_tx(fig5_params, code)
        u0 = 1.1
        ch = draw_channel(awgn_channel(u0, los_gain=1.0), 0)
        cap = propagate(tx, ch)
        L = fig5_params.samples_per_hop
        energy = np.sum(np.abs(cap.hop(0)) ** 2)
        coherent = np.abs(np.sum(np.exp(-1j * np.arange(10) * u0))) ** 2 * L
        # tones are orthogonal, so the energy is sum_m |h_m|^2 * L = M*L exactly
        assert energy == pytest.approx(10 * L)
        assert energy <= L * 10 ** 2 + 1e-9
        assert coherent <= L * 10 ** 2 + 1e-9

    def test_empirical_snr_matches_configuration(self, fig5_params, rng):
        code = draw_hopping_code(fig5_params, 2)
        tx = synthesize_tx(fig5_params, code)
        ch = draw_channel(awgn_channel(np.pi / 3), 3)
        clean = propagate(tx, ch).samples
        signal_power = np.mean(np.abs(clean) ** 2)
        target = 10 ** (7 / 10)
        noise_samples = []
        for trial in range(100):  # 100 pulses of 10 hops: ~1e3 hops
            cap = propagate(tx, ch, snr=target, rng=rng)
            noise_samples.append(cap.samples - clean)
        noise_power = np.mean(np.abs(np.concatenate(noise_samples)) ** 2)
        snr_db = 10 * np.log10(measured_snr(signal_power, noise_power))
        assert snr_db == pytest.approx(7.0, abs=0.1)

    def test_noise_power_convergence_rate(self, fig5_params):
        code = draw_hopping_code(fig5_params, 2)
        tx = synthesize_tx(fig5_params, code)
        ch = draw_channel(awgn_channel(0.0), 0)
        errors = []
        for n_pulses in (4, 64):
            rng = np.random.default_rng(11)
            clean = propagate(tx, ch).samples
            diffs = [propagate(tx, ch, snr=1.0, rng=rng).samples - clean
                     for _ in range(n_pulses)]
            measured = np.mean(np.abs(np.concatenate(diffs)) ** 2)
            expected = snr_to_noise_power(np.mean(np.abs(clean) ** 2), 1.0)
            errors.append(abs(measured - expected) / expected)
        assert errors[1] < errors[0]

    def test_linearity_of_propagation(self, toy_params):
        from dataclasses import replace

        code_a = HoppingCode(np.array([[0, 2]]))
        code_b = HoppingCode(np.array([[1, 3]]))
        tx_a = synthesize_tx(toy_params, code_a)
        tx_b = synthesize_tx(toy_params, code_b)
        tx_sum = replace(tx_a, samples=tx_a.samples + tx_b.samples)
        ch = draw_channel(awgn_channel(0.4), 5)
        out = propagate(tx_sum, ch).samples
        parts = propagate(tx_a, ch).samples + propagate(tx_b, ch).samples
        np.testing.assert_allclose(out, parts, atol=1e-12)

    def test_timing_offset_leaks_into_both_hops(self):
        from fhmimo import make_radar_params

        params = make_radar_params(2, 4, 2, 4, 1, 0.125)
        code = HoppingCode(np.array([[0, 2], [1, 3]]))
        tx = synthesize_tx(params, code)
        ch = draw_channel(awgn_channel(0.0, los_gain=1.0), 0)
        offset = 3
        cap = propagate(tx, ch, timing_offset=offset)
        # oracle: each captured hop is the delayed concatenated clean signal
        clean = propagate(tx, ch).samples[0]
        delayed = np.concatenate([np.zeros(offset, complex), clean[:-offset]])
        np.testing.assert_allclose(cap.samples[0], delayed, atol=1e-12)
        # second captured hop holds energy on both hops' sub-band bins
        L = params.samples_per_hop
        spectrum = np.abs(np.fft.fft(cap.samples[0, L:2 * L]))
        bins_h0 = code.entries[0] * params.bin_step
        bins_h1 = code.entries[1] * params.bin_step
        assert np.all(spectrum[bins_h1] > 1.0)
        assert np.all(spectrum[bins_h0] > 0.5)

    def test_oversized_timing_offset_rejected(self, toy_params):
        tx = synthesize_tx(toy_params, HoppingCode(np.array([[0, 1]])))
        ch = draw_channel(awgn_channel(0.0), 0)
        with pytest.raises(ValueError, match="timing offset"):
            propagate(tx, ch, timing_offset=toy_params.samples_per_hop)

    def test_multi_antenna_capture_shape(self, fig3_params):
        tx = synthesize_tx(fig3_params, draw_hopping_code(fig3_params, 1))
        ch = draw_channel(rician_channel(0.5, 5.0, 8), 2)
        cap = propagate(tx, ch, snr=10.0, num_rx=2, rng=4)
        assert cap.samples.shape == (2, fig3_params.samples_per_pulse)
        assert cap.num_rx == 2

    def test_rx_antennas_decorrelated_under_scatter(self):
        # scattered paths arrive from distinct angles, so the two antennas
        # must see different fading; identical arrays would defeat diversity
        model = rician_channel(0.0, 0.0, num_paths=16)
        ch = draw_channel(model, 8)
        coeff = ch.coefficients(num_tx=4, num_rx=2)
        assert not np.allclose(coeff[0], coeff[1])
