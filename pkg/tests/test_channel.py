import numpy as np
import pytest
from numpy.testing import assert_allclose

from eigenchan import channel as chn

SQ2 = np.sqrt(2.0)


def uniform_magnitudes(mags):
    """Transmittances with the Re = Im convention from plain magnitudes."""
    return np.asarray(mags, dtype=float) * (1.0 + 1.0j) / SQ2


class TestValidation:
    def test_accepts_admissible_explicit_coefficients(self):
        t = uniform_magnitudes([0.9, 0.5, 0.0, 0.99])
        ch = chn.make_channel(4, 0.1, 1.0, transmittances=t)
        assert_allclose(np.abs(ch.transmittances) ** 2,
                        [0.81, 0.25, 0.0, 0.9801], atol=1e-12)

    def test_rejects_unequal_quadratures(self):
        t = np.array([0.5 + 0.4j, 0.5 + 0.5j])
        with pytest.raises(ValueError, match="Re T_i == Im T_i"):
            chn.make_channel(2, 0.1, 1.0, transmittances=t)

    def test_rejects_unit_or_larger_magnitude(self):
        t = uniform_magnitudes([1.0])
        with pytest.raises(ValueError, match="strictly below 1"):
            chn.make_channel(1, 0.1, 1.0, transmittances=t)

    def test_rejects_negative_quadrature(self):
        t = np.array([-0.1 - 0.1j])
        with pytest.raises(ValueError):
            chn.make_channel(1, 0.1, 1.0, transmittances=t)

    def test_rejects_bad_scalars(self):
        with pytest.raises(ValueError):
            chn.make_channel(0, 0.1, 1.0)
        with pytest.raises(ValueError):
            chn.make_channel(4, 0.0, 1.0)
        with pytest.raises(ValueError):
            chn.make_channel(4, 0.1, 0.0)

    def test_random_draw_respects_box(self):
        ch = chn.make_channel(64, 0.1, 1.0, seed=11)
        t = ch.transmittances
        assert np.all(t.real >= 0) and np.all(t.real <= chn.ADMISSIBLE_MAX)
        assert_allclose(t.real, t.imag, atol=1e-15)
        assert np.all(np.abs(t) ** 2 < 1.0)


class TestGoodSet:
    def test_all_good_for_large_threshold(self):
        ch = chn.make_channel(8, 1e-6, 1.0, seed=12)
        assert ch.good_set.size == 8
        assert ch.l == 8

    def test_good_set_matches_ratio_definition(self):
        ch = chn.make_channel(16, 0.1, 0.8, seed=13)
        expected = np.flatnonzero(ch.nu < ch.nu_eve)
        assert np.array_equal(ch.good_set, expected)

    def test_good_set_monotone_in_threshold(self):
        t = chn.make_channel(16, 0.1, 1.0, seed=14).transmittances
        sizes = [
            chn.make_channel(16, 0.1, nu, transmittances=t).l
            for nu in (0.3, 0.6, 1.2, 5.0)
        ]
        assert sizes == sorted(sizes)
        small = chn.make_channel(16, 0.1, 0.3, transmittances=t)
        large = chn.make_channel(16, 0.1, 5.0, transmittances=t)
        assert np.isin(small.good_set, large.good_set).all()

    def test_zero_gain_bins_are_never_good(self):
        # constant transmittances put all power in the DC bin
        t = uniform_magnitudes([0.5, 0.5, 0.5, 0.5])
        ch = chn.make_channel(4, 0.01, 100.0, transmittances=t)
        assert np.array_equal(ch.good_set, [0])
        assert np.all(np.isinf(ch.nu[1:]))


class TestTransmission:
    def test_noiseless_inversion_recovers_block(self):
        ch = chn.make_channel(8, 0.25, 10.0, seed=15)
        rng = np.random.default_rng(16)
        d = rng.normal(size=ch.l) + 1j * rng.normal(size=ch.l)
        block = chn.transmit_block(ch, d, seed=17)
        clean = block.output - block.noise_realization
        rebuilt = np.fft.ifft(clean / ch.good_ft, norm="ortho")
        assert_allclose(rebuilt, d, atol=1e-10)

    def test_zero_block_outputs_pure_noise(self):
        ch = chn.make_channel(8, 0.5, 10.0, seed=18)
        outs = np.concatenate([
            chn.transmit_block(ch, np.zeros(ch.l), seed=s).output
            for s in range(200)
        ])
        for quad in (outs.real, outs.imag):
            n = quad.size
            var = quad.var()
            se = 0.5 * np.sqrt(2.0 / n)  # variance-of-variance for N(0, 0.5)
            assert abs(var - 0.5) < 5 * se

    def test_block_length_must_match_good_set(self):
        ch = chn.make_channel(8, 0.1, 1.0, seed=19)
        with pytest.raises(ValueError, match="good-set size"):
            chn.transmit_block(ch, np.zeros(ch.l + 1))

    def test_empirical_snr_per_subchannel(self):
        sigma_w_sq, sigma_n_sq = 1.0, 0.2
        ch = chn.make_channel(8, sigma_n_sq, 1.0, seed=20)
        rng = np.random.default_rng(21)
        blocks = 10**4
        sig = np.zeros(ch.l)
        noi = np.zeros(ch.l)
        for b in range(blocks):
            d = np.sqrt(sigma_w_sq) * (rng.normal(size=ch.l) + 1j * rng.normal(size=ch.l))
            blk = chn.transmit_block(ch, d, seed=rng.integers(2**32))
            sig += np.abs(blk.output - blk.noise_realization) ** 2
            noi += np.abs(blk.noise_realization) ** 2
        snr = sig / noi
        expected = sigma_w_sq * np.abs(ch.good_ft) ** 2 / sigma_n_sq
        assert_allclose(snr, expected, rtol=0.03)


class TestLogicalChannel:
    def test_full_good_set_is_identity_view(self):
        ch = chn.make_channel(8, 0.1, 1.0, seed=22)
        view = chn.logical_channel(ch)
        assert_allclose(view.ft, ch.good_ft)
        assert view.l == ch.l

    def test_projection_keeps_parent_coefficients(self):
        ch = chn.make_channel(4, 1e-6, 10.0, seed=23)
        view = chn.logical_channel(ch, [0, 2])
        assert view.n == 2
        assert_allclose(view.transmittances, ch.transmittances[[0, 2]])
        assert_allclose(view.ft, ch.ft[[0, 2]])

    def test_rejects_empty_or_bad_indices(self):
        ch = chn.make_channel(8, 0.1, 1.0, seed=24)
        with pytest.raises(ValueError):
            chn.logical_channel(ch, [])
        with pytest.raises(ValueError):
            chn.logical_channel(ch, [ch.good_set[0]] * 2)
        bad = np.setdiff1d(np.arange(8), ch.good_set)
        if bad.size:
            with pytest.raises(ValueError, match="subset of the good set"):
                chn.logical_channel(ch, [bad[0]])


class TestEveTransmittance:
    def test_componentwise_complement(self):
        t = uniform_magnitudes([0.7])
        ch = chn.make_channel(1, 0.1, 1.0, transmittances=t)
        t_eve = chn.eve_transmittance(ch, 0)
        assert_allclose([t_eve.real, t_eve.imag],
                        [0.3 / SQ2, 0.3 / SQ2], atol=1e-12)

    def test_zero_maps_to_box_maximum(self):
        ch = chn.make_channel(1, 0.1, 1.0, transmittances=np.array([0.0j]))
        t_eve = chn.eve_transmittance(ch, 0)
        assert_allclose([t_eve.real, t_eve.imag],
                        [chn.ADMISSIBLE_MAX] * 2, atol=1e-15)

    def test_bounds_always_hold(self):
        ch = chn.make_channel(32, 0.1, 1.0, seed=25)
        for i in range(32):
            t_eve = chn.eve_transmittance(ch, i)
            assert 0.0 <= t_eve.real <= chn.ADMISSIBLE_MAX + 1e-15
            assert 0.0 <= t_eve.imag <= chn.ADMISSIBLE_MAX + 1e-15


class TestConfig:
    def test_explicit_pairs(self):
        cfg = {
            "n": 2,
            "transmittances": [[0.5, 0.5], [0.1, 0.1]],
            "sigma_N_sq": 0.1,
            "nu_eve": 1.0,
        }
        ch = chn.channel_from_config(cfg)
        assert_allclose(ch.transmittances, [0.5 + 0.5j, 0.1 + 0.1j])

    def test_uniform_draw_matches_make_channel(self):
        cfg = {
            "n": 8,
            "transmittances": {"draw": "uniform", "seed": 26},
            "sigma_N_sq": 0.1,
            "nu_eve": 1.0,
        }
        ch = chn.channel_from_config(cfg)
        ref = chn.make_channel(8, 0.1, 1.0, seed=26)
        assert_allclose(ch.transmittances, ref.transmittances)

    def test_missing_key_and_unknown_draw(self):
        with pytest.raises(ValueError, match="missing key"):
            chn.channel_from_config({"n": 2})
        with pytest.raises(ValueError, match="unknown transmittance draw"):
            chn.channel_from_config({
                "n": 2, "transmittances": {"draw": "cauchy"},
                "sigma_N_sq": 0.1, "nu_eve": 1.0,
            })
