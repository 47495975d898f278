"""Singular value decomposition layer over the Fourier-domain channel matrix.

The K_out x K_in channel matrix factors as F(T) = U2 @ Gamma @ F1_inv with
unitary U2, F1_inv and nonnegative singular values Gamma sorted in
nonincreasing order. Pre-rotating stream data by F1 = F1_inv^dagger and
post-rotating the received block by U2^dagger turns the matrix channel into
n_min = min(K_in, K_out) parallel scalar eigenchannels with gains lambda_i.

When encoder and decoder only hold an approximate factorization (partial
channel knowledge) the effective stream matrix

    M = U2_used^dagger @ F(T)_true @ F1_used

is no longer diagonal and its off-diagonal entries leak power between
streams; the per-stream leak is sigma_gamma_i^2 = sum_{j != i} |M_ij|^2 *
sigma_prime_j^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import as_rng

__all__ = [
    "SvdLayer",
    "StreamVector",
    "EigenInterference",
    "svd_of_channel",
    "perturb_matrix",
    "effective_stream_matrix",
    "interference_from_stream_matrix",
    "interference_variance",
    "eigen_transmit",
]

# singular values below RANK_RTOL * lambda_max count as numerically zero
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdLayer:
    """Factor triple of one channel matrix: F(T) = u2 @ diag(gamma) @ f1_inv."""

    u2: np.ndarray
    gamma: np.ndarray
    f1_inv: np.ndarray

    def __post_init__(self):
        for name in ("u2", "gamma", "f1_inv"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k_out(self) -> int:
        return self.u2.shape[0]

    @property
    def k_in(self) -> int:
        return self.f1_inv.shape[0]

    @property
    def n_min(self) -> int:
        return self.gamma.size

    @property
    def f1(self) -> np.ndarray:
        """Encoder-side unitary, the inverse (= adjoint) of f1_inv."""
        return self.f1_inv.conj().T

    @property
    def rank(self) -> int:
        if self.gamma.size == 0 or self.gamma[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.gamma >= RANK_RTOL * self.gamma[0]))

    def matrix(self) -> np.ndarray:
        """Reconstruct the K_out x K_in channel matrix from the factors."""
        g = np.zeros((self.k_out, self.k_in), dtype=complex)
        np.fill_diagonal(g, self.gamma)
        return self.u2 @ g @ self.f1_inv


@dataclass(frozen=True)
class StreamVector:
    """n_min parallel stream symbols, optionally with their covariance."""

    streams: np.ndarray
    covariance: np.ndarray | None = None

    def __post_init__(self):
        streams = np.asarray(self.streams, dtype=complex)
        streams.setflags(write=False)
        object.__setattr__(self, "streams", streams)


@dataclass(frozen=True)
class EigenInterference:
    """Inter-stream leakage power caused by mismatched SVD factors."""

    per_stream: np.ndarray
    average: float


def svd_of_channel(ft_matrix) -> SvdLayer:
    """Factor a K_out x K_in channel matrix (K_in <= K_out required).

    The factorization is made deterministic by fixing the phase ambiguity:
    the largest-magnitude entry of every left singular vector is rotated to
    the positive real axis, with the matching right factor row compensated
    so the product is unchanged.
    """
    a = np.asarray(ft_matrix, dtype=complex)
    if a.ndim != 2:
        raise ValueError("channel matrix must be 2-d")
    k_out, k_in = a.shape
    if k_in > k_out:
        raise ValueError(f"K_in={k_in} exceeds K_out={k_out}")
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    vh = vh.copy()
    for j in range(k_out):
        col = u[:, j]
        pivot = np.argmax(np.abs(col))
        mag = np.abs(col[pivot])
        if mag == 0.0:
            continue
        phase = col[pivot] / mag
        u[:, j] = col * np.conj(phase)
        if j < k_in:
            vh[j, :] *= np.conj(phase)
    return SvdLayer(u, s, vh)


def perturb_matrix(ft_matrix, error_norm: float, seed=None) -> np.ndarray:
    """Additive complex Gaussian perturbation scaled to a given Frobenius norm."""
    a = np.asarray(ft_matrix, dtype=complex)
    if error_norm < 0:
        raise ValueError("error_norm must be nonnegative")
    if error_norm == 0.0:
        return a.copy()
    rng = as_rng(seed)
    e = rng.normal(size=a.shape) + 1j * rng.normal(size=a.shape)
    e *= error_norm / np.linalg.norm(e)
    return a + e


def effective_stream_matrix(layer_true: SvdLayer, layer_used: SvdLayer) -> np.ndarray:
    """M = U2_used^dagger @ F(T)_true @ F1_used, cut to the stream block."""
    if (layer_used.k_in, layer_used.k_out) != (layer_true.k_in, layer_true.k_out):
        raise ValueError("true and used layers must share the channel shape")
    m = layer_used.u2.conj().T @ layer_true.matrix() @ layer_used.f1
    n = layer_true.n_min
    return m[:n, :n]


def interference_from_stream_matrix(m, stream_variances) -> EigenInterference:
    """Per-stream leak sum_{j != i} |M_ij|^2 sigma_prime_j^2 and its mean."""
    m = np.asarray(m, dtype=complex)
    var = np.asarray(stream_variances, dtype=float)
    if m.shape[0] != m.shape[1] or var.shape != (m.shape[1],):
        raise ValueError("stream matrix must be square and match the variances")
    power = np.abs(m) ** 2
    per_stream = power @ var - np.diag(power) * var
    return EigenInterference(per_stream, float(per_stream.mean()))


def interference_variance(layer_true, layer_used, stream_variances) -> EigenInterference:
    """Leakage when the coder pair uses ``layer_used`` on the true channel."""
    m = effective_stream_matrix(layer_true, layer_used)
    return interference_from_stream_matrix(m, stream_variances)


def eigen_transmit(layer: SvdLayer, streams, sigma_N_sq: float, seed=None,
                   layer_used: SvdLayer | None = None) -> StreamVector:
    """Push stream symbols through the eigenchannel chain with AWGN.

    The encoder applies F1 of ``layer_used`` (defaults to the true layer),
    the channel applies the true matrix, the decoder applies U2^dagger of
    ``layer_used``; an exact factor match yields s'_i = lambda_i s_i + noise.
    Unitary post-rotation keeps the noise circularly symmetric with the same
    per-quadrature variance sigma_N_sq.
    """
    x = streams.streams if isinstance(streams, StreamVector) else np.asarray(streams, dtype=complex)
    used = layer if layer_used is None else layer_used
    if x.size != layer.n_min:
        raise ValueError(f"expected {layer.n_min} streams, got {x.size}")
    rng = as_rng(seed)
    std = np.sqrt(sigma_N_sq)
    noise = rng.normal(0.0, std, layer.k_out) + 1j * rng.normal(0.0, std, layer.k_out)
    channel_in = used.f1 @ x
    received = layer.matrix() @ channel_in + noise
    decoded = used.u2.conj().T @ received
    return StreamVector(decoded[: layer.n_min])
