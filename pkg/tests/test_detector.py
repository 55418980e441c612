import numpy as np
import pytest

from gmdet.channel import BitSequence, generate, pattern_indices
from gmdet.detector import (_viterbi, branch_metric, metric_tables,
                            viterbi_decode, whiten)
from gmdet.harness import snr_to_scale
from gmdet.trellis import build_trellis

from helpers import (brute_force_decode, full_branch_metric, paper_params,
                     random_spd, random_stable_params)


class TestBranchMetric:
    def test_perfect_match_costs_log_variance_only(self):
        p = paper_params(8, scale=1.0)
        trel = build_trellis(p)
        st = trel.stats(0)  # all-zero history: filtered mean 0, sigma^2 = 1
        window = np.zeros(3)
        assert branch_metric(st, window, p.ar_coeffs) == pytest.approx(0.0, abs=1e-15)

    def test_quadratic_term(self):
        p = paper_params(8, scale=1.0)
        trel = build_trellis(p)
        st = trel.stats(0b0011)  # sigma^2(11) = 4
        # choose a window whose whitened value sits 2 above the branch mean
        window = np.zeros(3)
        window[-1] = st.filtered_mean + 2.0
        got = branch_metric(st, window, p.ar_coeffs)
        assert got == pytest.approx(np.log(4.0) + 1.0, abs=1e-12)
        assert got == pytest.approx(2.3863, abs=5e-5)

    def test_window_length_checked(self):
        p = paper_params(8)
        st = build_trellis(p).stats(0)
        with pytest.raises(ValueError):
            branch_metric(st, np.zeros(2), p.ar_coeffs)

    def test_equals_full_gaussian_metric(self):
        """The inversion-free metric matches the log-determinant plus
        quadratic-form metric built from the bordered covariance."""
        rng = np.random.default_rng(31)
        for num_states in (8, 16):
            p = paper_params(num_states, scale=2.0)
            trel = build_trellis(p)
            for _ in range(50):
                bw = int(rng.integers(0, trel.num_branches))
                st = trel.stats(bw)
                c_minor = random_spd(rng, p.noise_memory)
                window = st.mean_vector + rng.normal(0, 2.0, p.noise_memory + 1)
                simple = branch_metric(st, window, p.ar_coeffs)
                full = full_branch_metric(st, window, c_minor, p.ar_coeffs)
                assert abs(simple - full) <= 1e-9


class TestViterbi:
    def test_noiseless_recovery(self):
        p = paper_params(8, scale=snr_to_scale(paper_params(8), 18.0))
        trel = build_trellis(p)
        rng = np.random.default_rng(40)
        bits = BitSequence.with_preamble(
            rng.integers(0, 2, 2000, dtype=np.uint8), p)
        y = p.y_table[pattern_indices(bits.bits, p.isi_memory)]
        res = viterbi_decode(trel, y, known_start=0)
        assert np.array_equal(res.bits, bits.bits)
        assert np.array_equal(res.path & 1, res.bits)

    def test_matches_exhaustive_search(self):
        p = paper_params(8, scale=3.0)
        trel = build_trellis(p)
        rng = np.random.default_rng(41)
        for _ in range(20):
            payload = rng.integers(0, 2, 10, dtype=np.uint8)
            bits = BitSequence(payload, preamble_len=0)
            bits = BitSequence(np.concatenate([np.zeros(3, np.uint8), payload]), 3)
            z = generate(p, bits, seed=int(rng.integers(0, 2 ** 32))).samples
            res = viterbi_decode(trel, z, known_start=0)
            ref_bits, ref_metric = brute_force_decode(trel, z, known_start=0)
            assert np.array_equal(res.bits, ref_bits)
            assert res.metric == ref_metric  # identical arithmetic, bitwise

    def test_randomized_channels_match_exhaustive(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            p = random_stable_params(rng)
            trel = build_trellis(p)
            n = int(rng.integers(1, 11))
            z = rng.normal(0, 2.0, size=n)
            res = viterbi_decode(trel, z, known_start=0)
            ref_bits, ref_metric = brute_force_decode(trel, z, known_start=0)
            assert np.array_equal(res.bits, ref_bits)
            assert res.metric == ref_metric

    def test_constant_metric_shift_keeps_path(self):
        p = paper_params(8, scale=2.5)
        trel = build_trellis(p)
        rng = np.random.default_rng(43)
        bits = BitSequence.with_preamble(
            rng.integers(0, 2, 500, dtype=np.uint8), p)
        z = generate(p, bits, seed=9).samples
        u = whiten(z, p.ar_coeffs)
        log_var, inv_var, fmean = metric_tables(trel)
        ref, _, ref_metric = _viterbi(u, log_var, inv_var, fmean, 8, 0)
        shifted, _, shifted_metric = _viterbi(u, log_var + 5.0, inv_var,
                                              fmean, 8, 0)
        assert np.array_equal(ref, shifted)
        assert shifted_metric == pytest.approx(ref_metric + 5.0 * len(z), rel=1e-12)

    def test_decode_result_path_is_valid_walk(self):
        p = paper_params(16, scale=2.0)
        trel = build_trellis(p)
        bits = BitSequence.with_preamble(
            np.random.default_rng(2).integers(0, 2, 200, dtype=np.uint8), p)
        z = generate(p, bits, seed=3)
        res = viterbi_decode(trel, z, known_start=0)
        state = 0
        for k, s in enumerate(res.path):
            assert s == trel.to_state(trel.branch_word(state, int(res.bits[k])))
            state = s

    def test_input_validation(self):
        p = paper_params(8)
        trel = build_trellis(p)
        with pytest.raises(ValueError):
            viterbi_decode(trel, np.zeros(0))
        with pytest.raises(ValueError):
            viterbi_decode(trel, np.zeros(4), known_start=8)

    def test_single_sample(self):
        p = paper_params(8, scale=4.0)
        trel = build_trellis(p)
        res = viterbi_decode(trel, np.array([0.05]), known_start=0)
        assert res.bits.shape == (1,)


class TestSnrMonotonicity:
    def test_ber_non_increasing_within_noise(self):
        """Empirical BER decreases along an SNR ladder, allowing CI slack."""
        from gmdet.harness import ExperimentConfig, wilson_interval, run_sweep
        p = paper_params(8)
        cfg = ExperimentConfig(channel=p, snr_grid_db=(11.0, 13.0, 15.0),
                               payload_bits=200_000, min_error_events=10 ** 9,
                               seed=60, workers=1)
        curve = run_sweep(cfg)
        for a, b in zip(curve.points, curve.points[1:]):
            assert b.ber_sim <= a.ci_high
