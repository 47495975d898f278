import numpy as np
import pytest
from numpy.testing import assert_allclose

from eigenchan import singular_layer as sl


def random_matrix(rng, k_out, k_in):
    return rng.normal(size=(k_out, k_in)) + 1j * rng.normal(size=(k_out, k_in))


class TestFactorization:
    def test_identity_channel(self):
        layer = sl.svd_of_channel(np.eye(2))
        assert_allclose(layer.gamma, [1.0, 1.0])
        assert_allclose(np.abs(layer.u2), np.eye(2), atol=1e-12)
        assert_allclose(np.abs(layer.f1), np.eye(2), atol=1e-12)
        assert_allclose(layer.matrix(), np.eye(2), atol=1e-12)

    def test_diagonal_gains(self):
        layer = sl.svd_of_channel(np.diag([2.0, 1.0]))
        assert_allclose(layer.gamma, [2.0, 1.0])

    def test_reconstruction_and_trace_identity(self):
        rng = np.random.default_rng(30)
        a = random_matrix(rng, 4, 4)
        layer = sl.svd_of_channel(a)
        assert_allclose(layer.matrix(), a, atol=1e-10)
        assert_allclose(np.sum(layer.gamma**2),
                        np.real(np.trace(a @ a.conj().T)), rtol=1e-10)

    def test_rectangular_shapes(self):
        rng = np.random.default_rng(31)
        a = random_matrix(rng, 5, 3)
        layer = sl.svd_of_channel(a)
        assert (layer.k_out, layer.k_in, layer.n_min) == (5, 3, 3)
        assert_allclose(layer.matrix(), a, atol=1e-10)
        with pytest.raises(ValueError, match="exceeds"):
            sl.svd_of_channel(a.T)

    def test_factors_are_unitary(self):
        rng = np.random.default_rng(32)
        layer = sl.svd_of_channel(random_matrix(rng, 4, 4))
        assert_allclose(layer.u2 @ layer.u2.conj().T, np.eye(4), atol=1e-12)
        assert_allclose(layer.f1_inv @ layer.f1, np.eye(4), atol=1e-12)

    def test_phase_fixing_is_deterministic(self):
        rng = np.random.default_rng(33)
        a = random_matrix(rng, 4, 4)
        one = sl.svd_of_channel(a)
        # multiplying the input by a global phase must not change the
        # canonical left factor (the phase moves into f1_inv)
        two = sl.svd_of_channel(np.exp(1j * 1.1) * a)
        assert_allclose(one.u2, two.u2, atol=1e-10)
        for layer in (one, two):
            for j in range(layer.k_out):
                col = layer.u2[:, j]
                pivot = np.argmax(np.abs(col))
                assert col[pivot].real > 0
                assert abs(col[pivot].imag) < 1e-12

    def test_rank_counts_significant_singular_values(self):
        layer = sl.svd_of_channel(np.diag([1.0, 1e-16]))
        assert layer.rank == 1
        assert sl.svd_of_channel(np.zeros((2, 2))).rank == 0


class TestPerturbation:
    def test_exact_error_norm(self):
        rng = np.random.default_rng(34)
        a = random_matrix(rng, 3, 3)
        for norm in (1e-3, 0.1, 2.0):
            e = sl.perturb_matrix(a, norm, seed=35) - a
            assert_allclose(np.linalg.norm(e), norm, rtol=1e-12)

    def test_zero_norm_is_identity(self):
        a = np.eye(2, dtype=complex)
        assert_allclose(sl.perturb_matrix(a, 0.0), a)

    def test_rejects_negative_norm(self):
        with pytest.raises(ValueError):
            sl.perturb_matrix(np.eye(2), -1.0)

    def test_same_seed_fixes_direction(self):
        a = np.zeros((3, 3), dtype=complex)
        e1 = sl.perturb_matrix(a, 1.0, seed=36)
        e2 = sl.perturb_matrix(a, 2.0, seed=36)
        assert_allclose(e2, 2.0 * e1, atol=1e-12)


class TestInterference:
    def test_matched_layer_has_zero_leak(self):
        rng = np.random.default_rng(37)
        layer = sl.svd_of_channel(random_matrix(rng, 3, 3))
        leak = sl.interference_variance(layer, layer, np.ones(3))
        assert np.all(leak.per_stream < 1e-20)
        assert leak.average < 1e-20

    def test_hand_two_by_two(self):
        m = np.array([[1.0, 0.1], [0.0, 1.0]], dtype=complex)
        leak = sl.interference_from_stream_matrix(m, np.ones(2))
        assert_allclose(leak.per_stream, [0.01, 0.0], atol=1e-15)
        assert_allclose(leak.average, 0.005, atol=1e-15)

    def test_average_is_mean_of_streams(self):
        rng = np.random.default_rng(38)
        m = random_matrix(rng, 4, 4)
        var = rng.uniform(0.5, 2.0, 4)
        leak = sl.interference_from_stream_matrix(m, var)
        assert_allclose(leak.average, leak.per_stream.mean(), rtol=1e-12)

    def test_matches_bruteforce_offdiagonal_sum(self):
        rng = np.random.default_rng(39)
        m = random_matrix(rng, 3, 3)
        var = rng.uniform(0.1, 1.0, 3)
        leak = sl.interference_from_stream_matrix(m, var)
        brute = np.array([
            sum(abs(m[i, j]) ** 2 * var[j] for j in range(3) if j != i)
            for i in range(3)
        ])
        assert_allclose(leak.per_stream, brute, rtol=1e-12)

    def test_leak_grows_with_perturbation(self):
        rng = np.random.default_rng(40)
        a = random_matrix(rng, 4, 4)
        true_layer = sl.svd_of_channel(a)
        leaks = []
        for norm in (0.01, 0.05, 0.1, 0.5):
            used = sl.svd_of_channel(sl.perturb_matrix(a, norm, seed=41))
            leaks.append(sl.interference_variance(true_layer, used,
                                                  np.ones(4)).average)
        assert leaks[0] > 0
        assert all(a < b for a, b in zip(leaks, leaks[1:]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            sl.interference_from_stream_matrix(np.eye(3), np.ones(2))


class TestEigenTransmit:
    def test_perfect_csi_diagonalizes(self):
        rng = np.random.default_rng(42)
        a = random_matrix(rng, 3, 3)
        layer = sl.svd_of_channel(a)
        s = np.array([1.0 + 0.5j, -0.2j, 0.3])
        out = sl.eigen_transmit(layer, s, sigma_N_sq=1e-30, seed=43)
        assert_allclose(out.streams, layer.gamma * s, atol=1e-12)

    def test_noise_stays_isotropic(self):
        layer = sl.svd_of_channel(np.eye(2))
        sigma_n_sq = 0.5
        outs = np.concatenate([
            sl.eigen_transmit(layer, np.zeros(2), sigma_n_sq, seed=s).streams
            for s in range(3000)
        ])
        for quad in (outs.real, outs.imag):
            se = sigma_n_sq * np.sqrt(2.0 / quad.size)
            assert abs(quad.var() - sigma_n_sq) < 5 * se

    def test_mismatched_layer_leaks_between_streams(self):
        rng = np.random.default_rng(44)
        a = random_matrix(rng, 3, 3)
        layer = sl.svd_of_channel(a)
        used = sl.svd_of_channel(sl.perturb_matrix(a, 0.3, seed=45))
        s = np.array([1.0, 0.0, 0.0], dtype=complex)
        out = sl.eigen_transmit(layer, s, sigma_N_sq=1e-30, seed=46,
                                layer_used=used)
        m = sl.effective_stream_matrix(layer, used)
        assert_allclose(out.streams, m @ s, atol=1e-10)
        assert np.linalg.norm(out.streams[1:]) > 1e-4

    def test_stream_count_checked(self):
        layer = sl.svd_of_channel(np.eye(2))
        with pytest.raises(ValueError, match="expected 2 streams"):
            sl.eigen_transmit(layer, np.zeros(3), 0.1)
