import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from eigenchan import phase_space as ps


class TestSampling:
    def test_rejects_degenerate_variance(self):
        with pytest.raises(ValueError):
            ps.sample_gaussian_cv(0.0, 4)
        with pytest.raises(ValueError):
            ps.sample_gaussian_cv(-1.0, 4)

    def test_rejects_empty_block(self):
        with pytest.raises(ValueError):
            ps.sample_gaussian_cv(1.0, 0)

    def test_unit_variance_mean_square(self):
        v = ps.sample_gaussian_cv(1.0, 10**5, seed=1)
        assert abs(np.mean(np.abs(v.values) ** 2) - 2.0) < 0.05

    def test_half_variance_mean_square(self):
        v = ps.sample_gaussian_cv(0.5, 10**5, seed=2)
        assert abs(np.mean(np.abs(v.values) ** 2) - 1.0) < 0.03

    def test_magnitude_is_rayleigh(self):
        sigma_sq = 0.7
        v = ps.sample_gaussian_cv(sigma_sq, 10**5, seed=3)
        res = stats.kstest(np.abs(v.values), "rayleigh",
                           args=(0.0, np.sqrt(sigma_sq)))
        assert res.pvalue > 0.01

    def test_squared_magnitude_is_exponential(self):
        sigma_sq = 0.7
        v = ps.sample_gaussian_cv(sigma_sq, 10**5, seed=4)
        res = stats.kstest(np.abs(v.values) ** 2, "expon",
                           args=(0.0, 2.0 * sigma_sq))
        assert res.pvalue > 0.01

    def test_phase_rotation_leaves_second_moments(self):
        v = ps.sample_gaussian_cv(1.0, 10**5, seed=5).values
        rotated = np.exp(1j * 0.83) * v
        m = np.mean(np.abs(v) ** 2)
        se = np.std(np.abs(v) ** 2) / np.sqrt(v.size)
        assert abs(np.mean(np.abs(rotated) ** 2) - m) < 5 * se
        # pseudo-moment E[z^2] stays near zero under rotation too
        assert abs(np.mean(rotated**2)) < 5 * 2.0 / np.sqrt(v.size)

    def test_sample_accessors(self):
        s = ps.CvSample(3.0 + 4.0j)
        assert s.x == 3.0
        assert s.p == 4.0
        assert s.magnitude == 5.0


class TestCvVector:
    def test_rejects_bad_covariance_shape(self):
        with pytest.raises(ValueError):
            ps.CvVector(np.ones(3), np.eye(2))

    def test_rejects_non_hermitian_covariance(self):
        with pytest.raises(ValueError):
            ps.CvVector(np.ones(2), np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ValueError):
            ps.CvVector(np.ones(2), np.diag([1.0, -1.0]))

    def test_values_are_frozen(self):
        v = ps.CvVector(np.ones(2))
        with pytest.raises(ValueError):
            v.values[0] = 0.0


class TestFourier:
    def test_round_trip_identity(self):
        rng = np.random.default_rng(6)
        v = rng.normal(size=64) + 1j * rng.normal(size=64)
        assert_allclose(ps.ifft(ps.fft(v)), v, atol=1e-12)

    def test_parseval(self):
        rng = np.random.default_rng(7)
        v = rng.normal(size=33) + 1j * rng.normal(size=33)
        assert_allclose(np.sum(np.abs(ps.fft(v)) ** 2),
                        np.sum(np.abs(v) ** 2), rtol=1e-10)

    def test_constant_vector_concentrates_in_dc(self):
        c = 0.3 - 1.1j
        out = ps.fft(np.full(4, c))
        assert_allclose(out, [2.0 * c, 0.0, 0.0, 0.0], atol=1e-14)

    def test_matches_direct_summation(self):
        # independent oracle: the textbook DFT sum with 1/sqrt(d) scaling
        rng = np.random.default_rng(8)
        v = rng.normal(size=5) + 1j * rng.normal(size=5)
        d = v.size
        direct = np.array([
            sum(v[n] * np.exp(-2j * np.pi * k * n / d) for n in range(d))
            for k in range(d)
        ]) / np.sqrt(d)
        assert_allclose(ps.fft(v), direct, atol=1e-12)

    def test_covariance_maps_congruently(self):
        rng = np.random.default_rng(9)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        cov = a @ a.conj().T
        v = ps.CvVector(rng.normal(size=3) + 0j, cov)
        out = ps.fft(v)
        f = ps._dft_matrix(3)
        assert_allclose(out.covariance, f @ cov @ f.conj().T, atol=1e-12)
        back = ps.ifft(out)
        assert_allclose(back.covariance, cov, atol=1e-12)
        assert_allclose(back.values, v.values, atol=1e-12)

    def test_convention_tags(self):
        assert ps.UNITARY_FORWARD.direction == "forward"
        assert ps.UNITARY_INVERSE.direction == "inverse"
        with pytest.raises(ValueError):
            ps.FourierConvention("sideways")
        with pytest.raises(ValueError):
            ps.FourierConvention("forward", normalization="numpy")


class TestTau:
    def test_zero_vector(self):
        assert ps.squared_magnitude_tau(np.zeros(4, dtype=complex)) == 0.0

    def test_single_sample(self):
        assert_allclose(ps.squared_magnitude_tau(np.array([1.0 + 1.0j])), 2.0)

    def test_batch_mean_bounded_by_total_power(self):
        sigma_w_sq, n, blocks = 1.0, 8, 10**4
        rng = np.random.default_rng(10)
        taus = np.empty(blocks)
        for b in range(blocks):
            z = rng.normal(0, 1, n) + 1j * rng.normal(0, 1, n)
            taus[b] = ps.squared_magnitude_tau(z * np.sqrt(sigma_w_sq))
        bound = n * 2.0 * sigma_w_sq
        se = taus.std(ddof=1) / np.sqrt(blocks)
        assert taus.mean() <= bound + 3 * se
