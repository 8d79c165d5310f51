"""Tests for radar parameter validation, hopping codes, and modulation."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhmimo import (
    SCHEME_DPSK,
    SCHEME_FHCS,
    SCHEME_FHCS_PSK,
    SCHEME_PSK,
    HoppingCode,
    combination_rank,
    data_rate,
    dpsk_encode,
    draw_hopping_code,
    encode_pulse,
    fhcs_bits_per_hop,
    fhcs_encode,
    make_radar_params,
    message_bit_count,
    psk_encode,
    random_message_bits,
    reorder_ascending,
    synthesize_tx,
    unrank_combination,
)


class TestRadarParams:
    def test_fig3_configuration(self):
        p = make_radar_params(10, 20, 10, 1e8, 2e-7, 1e-9)
        assert p.bin_step == 1
        assert p.samples_per_hop == 200

    def test_fig5_configuration(self):
        p = make_radar_params(10, 20, 10, 1e8, 2e-7, 5e-9)
        assert p.bin_step == 1
        assert p.samples_per_hop == 40

    def test_toy_configuration(self):
        p = make_radar_params(2, 4, 1, 4, 1, 0.25)
        assert p.bin_step == 1
        assert p.samples_per_hop == 4

    def test_non_integer_bin_step_rejected(self):
        # 1e8 * 2e-7 / 7 is not an integer
        with pytest.raises(ValueError, match="not a positive integer"):
            make_radar_params(3, 7, 10, 1e8, 2e-7, 1e-9)

    def test_slow_sampling_rejected(self):
        with pytest.raises(ValueError, match="sample_interval"):
            make_radar_params(10, 20, 10, 1e8, 2e-7, 2e-8)

    def test_too_many_antennas_rejected(self):
        with pytest.raises(ValueError, match="num_tx"):
            make_radar_params(20, 20, 10, 1e8, 2e-7, 1e-9)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            make_radar_params(10, 20, 0, 1e8, 2e-7, 1e-9)


class TestHoppingCode:
    def test_rows_distinct_and_in_range(self, fig3_params):
        code = draw_hopping_code(fig3_params, 7)
        assert code.entries.shape == (10, 10)
        assert code.entries.min() >= 0 and code.entries.max() < 20
        for row in code.entries:
            assert len(set(row.tolist())) == 10

    def test_full_selection_is_permutation(self):
        # num_tx == num_subbands is rejected, so emulate with a direct code
        rows = np.array([np.random.default_rng(0).permutation(4)])
        code = HoppingCode(rows)
        assert sorted(code.entries[0].tolist()) == [0, 1, 2, 3]

    def test_deterministic_given_seed(self, fig3_params):
        a = draw_hopping_code(fig3_params, 42)
        b = draw_hopping_code(fig3_params, 42)
        np.testing.assert_array_equal(a.entries, b.entries)

    def test_duplicate_entries_rejected(self):
        with pytest.raises(ValueError, match="same sub-band"):
            HoppingCode(np.array([[1, 1]]))

    def test_subband_occupancy_uniform(self):
        # each sub-band should appear with frequency num_tx/num_subbands
        from scipy import stats

        params = make_radar_params(10, 20, 1, 1e8, 2e-7, 1e-9)
        draws = 10_000
        rng = np.random.default_rng(2)
        counts = np.zeros(20)
        for _ in range(draws):
            counts[draw_hopping_code(params, rng).entries[0]] += 1
        expected = draws * 10 / 20
        sigma = math.sqrt(draws * 0.5 * 0.5)
        assert np.all(np.abs(counts - expected) < 3 * sigma)
        assert stats.chisquare(counts).pvalue > 1e-4

    def test_reorder_sorts_and_preserves_multiset(self, fig3_params):
        code = draw_hopping_code(fig3_params, 3)
        ordered = reorder_ascending(code)
        for before, after in zip(code.entries, ordered.entries):
            assert np.all(np.diff(after) > 0)
            assert sorted(before.tolist()) == after.tolist()

    def test_reorder_idempotent(self, fig3_params):
        code = reorder_ascending(draw_hopping_code(fig3_params, 3))
        np.testing.assert_array_equal(code.entries,
                                      reorder_ascending(code).entries)


class TestCombinationCoding:
    def test_enumeration_matches_lexicographic_order(self):
        combos = list(itertools.combinations(range(4), 2))
        for rank, combo in enumerate(combos):
            np.testing.assert_array_equal(unrank_combination(rank, 4, 2), combo)
            assert combination_rank(np.array(combo), 4) == rank

    def test_first_two_codewords(self, toy_params):
        np.testing.assert_array_equal(fhcs_encode(np.array([0, 0]), toy_params),
                                      [0, 1])
        np.testing.assert_array_equal(fhcs_encode(np.array([0, 1]), toy_params),
                                      [0, 2])

    def test_bits_per_hop_at_headline_parameters(self, fig5_params):
        assert fhcs_bits_per_hop(fig5_params) == 17

    def test_exhaustive_roundtrip_headline(self, fig5_params):
        # all 2**17 codewords decode back to their rank
        from fhmimo.experiments import _unrank_batch

        k, m = 20, 10
        ranks = np.arange(2 ** 17)
        combos = _unrank_batch(ranks, fig5_params)
        assert np.all(np.diff(combos, axis=1) > 0)
        # independent vectorized ranking oracle from the closed-form rank
        table = np.array([[math.comb(n, j) for j in range(m + 1)]
                          for n in range(k + 1)])
        acc = table[k - 1 - combos, np.arange(m, 0, -1)].sum(axis=1)
        back = math.comb(k, m) - 1 - acc
        np.testing.assert_array_equal(back, ranks)
        # batch unranking agrees with the scalar op on a sample
        sample = np.random.default_rng(0).integers(0, 2 ** 17, size=200)
        for rank in sample:
            np.testing.assert_array_equal(
                unrank_combination(int(rank), k, m),
                _unrank_batch(np.array([rank]), fig5_params)[0])

    def test_batch_unranking_matches_enumeration(self):
        from fhmimo.experiments import _unrank_batch

        params = make_radar_params(3, 8, 2, 8, 1, 0.125)
        combos = _unrank_batch(np.arange(math.comb(8, 3)), params)
        expected = np.array(list(itertools.combinations(range(8), 3)))
        np.testing.assert_array_equal(combos, expected)

    def test_out_of_range_rank_rejected(self):
        with pytest.raises(ValueError, match="rank"):
            unrank_combination(6, 4, 2)

    @given(st.integers(min_value=0, max_value=math.comb(8, 3) - 1))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_property(self, rank):
        combo = unrank_combination(rank, 8, 3)
        assert combination_rank(combo, 8) == rank
        assert np.all(np.diff(combo) > 0)

    def test_bits_per_hop_unimodal_in_antenna_count(self):
        # rises until half the sub-bands are used, then falls
        k = 20
        bits = [math.floor(math.log2(math.comb(k, m))) for m in range(1, k)]
        for m in range(len(bits) - 1):
            if m + 1 < k // 2:
                assert bits[m] <= bits[m + 1]
            if m + 1 > k // 2:
                assert bits[m] >= bits[m + 1]


class TestPhaseEncoding:
    def test_bpsk_map(self):
        phases = psk_encode(np.array([0]), 1, 2, 1, pilot=True)
        np.testing.assert_allclose(phases[1], [0.0])
        phases = psk_encode(np.array([1]), 1, 2, 1, pilot=True)
        np.testing.assert_allclose(phases[1], [np.pi])

    def test_qpsk_map(self):
        phases = psk_encode(np.array([1, 1]), 2, 2, 1, pilot=True)
        np.testing.assert_allclose(phases[1], [3 * np.pi / 2])

    def test_pilot_hop_is_silent(self):
        phases = psk_encode(np.ones(9 * 10, dtype=int), 1, 10, 10, pilot=True)
        np.testing.assert_allclose(phases[0], 0.0)

    def test_wrong_bit_count_rejected(self):
        with pytest.raises(ValueError, match="bits"):
            psk_encode(np.ones(7, dtype=int), 1, 3, 2)

    def test_dpsk_accumulates_against_recurrence(self, rng):
        # oracle: direct per-antenna recurrence
        h, m, j = 6, 3, 2
        bits = rng.integers(0, 2, size=(h - 1) * m * j)
        phases = dpsk_encode(bits, j, h, m)
        grid = 2 * np.pi / 2 ** j
        idx = bits.reshape(h - 1, m, j) @ np.array([2, 1])
        expected = np.zeros((h, m))
        for hop in range(1, h):
            expected[hop] = (expected[hop - 1] + grid * idx[hop - 1]) % (2 * np.pi)
        np.testing.assert_allclose(phases, expected)

    def test_dpsk_constant_increment_is_linear(self):
        h, m = 5, 2
        bits = np.ones((h - 1) * m, dtype=int)  # increment pi every hop
        phases = dpsk_encode(bits, 1, h, m)
        expected = np.outer(np.arange(h) * np.pi, np.ones(m)) % (2 * np.pi)
        np.testing.assert_allclose(phases, expected)


class TestSynthesis:
    def test_zero_subband_is_all_ones(self, toy_params):
        code = HoppingCode(np.array([[0, 1]]))
        tx = synthesize_tx(toy_params, code)
        np.testing.assert_allclose(tx.samples[0, 0], 1.0)

    def test_unit_modulus(self, fig5_params):
        tx = synthesize_tx(fig5_params, draw_hopping_code(fig5_params, 0))
        np.testing.assert_allclose(np.abs(tx.samples), 1.0, atol=1e-12)

    def test_hop_dft_peaks_on_subband_bin(self, fig5_params):
        code = draw_hopping_code(fig5_params, 0)
        tx = synthesize_tx(fig5_params, code)
        L = fig5_params.samples_per_hop
        for m in range(3):
            spectrum = np.abs(np.fft.fft(tx.samples[m, 0]))
            peak = int(np.argmax(spectrum))
            assert peak == code.entries[0, m] * fig5_params.bin_step
            assert spectrum[peak] == pytest.approx(L)

    def test_cross_antenna_orthogonality(self, fig5_params):
        code = draw_hopping_code(fig5_params, 1)
        tx = synthesize_tx(fig5_params, code)
        L = fig5_params.samples_per_hop
        for h in range(fig5_params.num_hops):
            for a in range(0, 4):
                for b in range(a + 1, 4):
                    inner = np.vdot(tx.samples[a, h], tx.samples[b, h])
                    assert abs(inner) < 1e-9 * L

    def test_payload_phase_applied(self, toy_params):
        code = HoppingCode(np.array([[0, 1]]))
        bits = np.array([1, 1])
        _, payload = encode_pulse(toy_params, SCHEME_PSK, bits, code=code,
                                  pilot=False)
        tx = synthesize_tx(toy_params, code, payload)
        np.testing.assert_allclose(tx.samples[0, 0], -1.0)


class TestDataRate:
    def test_bpsk_rate(self):
        p = make_radar_params(10, 20, 10, 1e8, 2e-7, 1e-9, prf=1e4)
        assert data_rate(p, SCHEME_PSK, 1) == pytest.approx(1e6)

    def test_fhcs_rate(self):
        p = make_radar_params(10, 20, 10, 1e8, 2e-7, 1e-9, prf=1e4)
        assert data_rate(p, SCHEME_FHCS) == pytest.approx(1.7e6)

    def test_combined_rate_is_sum(self, fig5_params):
        combined = data_rate(fig5_params, SCHEME_FHCS_PSK, 1)
        assert combined == pytest.approx(data_rate(fig5_params, SCHEME_PSK, 1)
                                         + data_rate(fig5_params, SCHEME_FHCS))

    def test_binomial_symmetry(self):
        a = make_radar_params(6, 20, 10, 1e8, 2e-7, 1e-9)
        b = make_radar_params(14, 20, 10, 1e8, 2e-7, 1e-9)
        assert data_rate(a, SCHEME_FHCS) == data_rate(b, SCHEME_FHCS)


class TestEncodePulse:
    @pytest.mark.parametrize("scheme", [SCHEME_PSK, SCHEME_DPSK, SCHEME_FHCS,
                                        SCHEME_FHCS_PSK])
    def test_bit_budget(self, fig5_params, scheme, rng):
        bits = random_message_bits(fig5_params, scheme, rng)
        assert bits.size == message_bit_count(fig5_params, scheme)
        code, payload = encode_pulse(fig5_params, scheme, bits, rng)
        assert code.entries.shape == (10, 10)
        assert payload.phases.shape == (10, 10)

    def test_wrong_bit_count_rejected(self, fig5_params):
        with pytest.raises(ValueError, match="bits"):
            encode_pulse(fig5_params, SCHEME_PSK, np.zeros(5, dtype=int))

    def test_fhcs_rows_sorted(self, fig5_params, rng):
        bits = random_message_bits(fig5_params, SCHEME_FHCS, rng)
        code, _ = encode_pulse(fig5_params, SCHEME_FHCS, bits, rng)
        assert np.all(np.diff(code.entries, axis=1) > 0)
