"""Linear MMSE phase-space decoding with multiuser interference.

Covariance algebra works on complex-symbol variances E[|z|^2] throughout
this module (twice the per-quadrature variance used by the channel layer).

For target user k with signature vector f_k, signal variance s_k and
aggregate disturbance covariance

    K_chi = (sigma_N_sq + sigma_gamma_sq) I + sum_{j != k} s_j f_j f_j^dagger,

the Wiener estimate of z_k from y = f_k z_k + chi is

    z_hat = A c^dagger y,   c = K_chi^{-1} f_k,
    A = s_k / (1 + s_k f_k^dagger K_chi^{-1} f_k),

whose mean square error equals A. The matched direction c is a sufficient
statistic: the scalar channel c^dagger y carries the same Gaussian mutual
information as the full vector y, and any other filter does strictly worse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import as_rng

__all__ = [
    "DecoderState",
    "SufficiencyReport",
    "ChainRates",
    "build_decoder",
    "estimate",
    "snir",
    "snir_of_filter",
    "snir_average",
    "sufficient_statistic_check",
    "chain_rule_rate",
    "joint_log_det",
    "rank_one_update_inverse",
]


@dataclass(frozen=True)
class DecoderState:
    """Precomputed Wiener decoder for one user."""

    user: int
    f_k: np.ndarray
    sigma_z_sq: float
    k_chi: np.ndarray
    whitener: np.ndarray
    filter: np.ndarray
    gain: float

    @property
    def mse(self) -> float:
        """LMMSE error E|z - z_hat|^2; numerically equal to the gain A."""
        return self.gain


def _as_vectors(ch_vectors) -> np.ndarray:
    v = np.asarray(ch_vectors, dtype=complex)
    if v.ndim != 2:
        raise ValueError("ch_vectors must be a (n_users, K_out) array-like")
    return v


def build_decoder(ch_vectors, variances, sigma_N_sq, sigma_gamma_sq=0.0,
                  k: int = 0) -> DecoderState:
    """Assemble K_chi, its whitener, and the MMSE filter for user k.

    The whitener is K_chi^(-1/2) computed by unitary diagonalization, so
    whitener @ chi has identity covariance and
    whitener^dagger @ whitener == K_chi^(-1).
    """
    vectors = _as_vectors(ch_vectors)
    var = np.asarray(variances, dtype=float)
    if var.shape != (vectors.shape[0],):
        raise ValueError("one variance per user is required")
    if not 0 <= k < vectors.shape[0]:
        raise ValueError(f"user index {k} out of range")
    if sigma_N_sq + sigma_gamma_sq <= 0:
        raise ValueError("noise variance must be positive")
    k_out = vectors.shape[1]
    k_chi = (sigma_N_sq + sigma_gamma_sq) * np.eye(k_out, dtype=complex)
    for j in range(vectors.shape[0]):
        if j != k:
            k_chi += var[j] * np.outer(vectors[j], vectors[j].conj())
    evals, evecs = np.linalg.eigh(k_chi)
    whitener = (evecs / np.sqrt(evals)) @ evecs.conj().T
    f_k = vectors[k]
    filt = np.linalg.solve(k_chi, f_k)
    quad = float(np.real(f_k.conj() @ filt))
    gain = var[k] / (1.0 + var[k] * quad)
    return DecoderState(k, f_k, float(var[k]), k_chi, whitener, filt, gain)


def estimate(dec: DecoderState, y):
    """Wiener estimate z_hat = A c^dagger y and its analytic MSE.

    ``y`` may be one received vector (K_out,) or a batch (..., K_out).
    """
    y = np.asarray(y, dtype=complex)
    z_hat = dec.gain * (y @ dec.filter.conj())
    if y.ndim == 1:
        z_hat = complex(z_hat)
    return z_hat, dec.mse


def snir(dec: DecoderState, sigma_dprime_sq=None) -> float:
    """Quadratic-form SNIR sigma_dprime_sq * f_k^dagger K_chi^{-1} f_k.

    Defaults to the decoder's own signal variance.
    """
    s = dec.sigma_z_sq if sigma_dprime_sq is None else sigma_dprime_sq
    return float(s * np.real(dec.f_k.conj() @ dec.filter))


def snir_of_filter(dec: DecoderState, w, sigma_dprime_sq=None) -> float:
    """SNIR of an arbitrary receive filter w against the same disturbance."""
    s = dec.sigma_z_sq if sigma_dprime_sq is None else sigma_dprime_sq
    w = np.asarray(w, dtype=complex)
    signal = np.abs(w.conj() @ dec.f_k) ** 2
    disturbance = np.real(w.conj() @ dec.k_chi @ w)
    return float(s * signal / disturbance)


def snir_average(sigma_w_sq_total, n_min, sigma_N_sq, sigma_gamma_sq=0.0) -> float:
    """Streamwise-averaged form (sigma_w_sq_total/n_min) / (noise + leak)."""
    return (sigma_w_sq_total / n_min) / (sigma_N_sq + sigma_gamma_sq)


@dataclass(frozen=True)
class SufficiencyReport:
    full_bits: float
    projected_bits: float
    random_filter_bits: np.ndarray


def sufficient_statistic_check(dec: DecoderState, n_random_filters: int = 0,
                               seed=None) -> SufficiencyReport:
    """Gaussian mutual information of y versus the filtered scalar c^dagger y.

    Both are computed in closed form (log-determinants); random unit filters
    provide strictly smaller values unless proportional to the MMSE filter.
    """
    q = float(np.real(dec.f_k.conj() @ dec.filter))
    full = np.log2(1.0 + dec.sigma_z_sq * q)
    projected = _projected_mi(dec, dec.filter)
    rng = as_rng(seed)
    k_out = dec.f_k.size
    rand = np.empty(n_random_filters)
    for t in range(n_random_filters):
        w = rng.normal(size=k_out) + 1j * rng.normal(size=k_out)
        rand[t] = _projected_mi(dec, w / np.linalg.norm(w))
    return SufficiencyReport(float(full), float(projected), rand)


def _projected_mi(dec: DecoderState, w) -> float:
    signal = np.abs(w.conj() @ dec.f_k) ** 2
    disturbance = np.real(w.conj() @ dec.k_chi @ w)
    return float(np.log2(1.0 + dec.sigma_z_sq * signal / disturbance))


@dataclass(frozen=True)
class ChainRates:
    order: tuple
    per_user_bits: np.ndarray
    total_bits: float


def chain_rule_rate(ch_vectors, variances, sigma_N_sq, order=None) -> ChainRates:
    """Successive-cancellation rates; their sum equals the joint log-det.

    User at position m is decoded against the users still undecoded behind
    it, so rate_m = log2(1 + s_m f_m^dagger K_m^{-1} f_m) with K_m built from
    the tail of the order. The total is order invariant.
    """
    vectors = _as_vectors(ch_vectors)
    var = np.asarray(variances, dtype=float)
    n_users = vectors.shape[0]
    order = tuple(range(n_users)) if order is None else tuple(order)
    if sorted(order) != list(range(n_users)):
        raise ValueError("order must be a permutation of the users")
    rates = np.empty(n_users)
    eye = np.eye(vectors.shape[1], dtype=complex)
    for m, user in enumerate(order):
        k_m = sigma_N_sq * eye.copy()
        for later in order[m + 1:]:
            k_m += var[later] * np.outer(vectors[later], vectors[later].conj())
        f = vectors[user]
        q = np.real(f.conj() @ np.linalg.solve(k_m, f))
        rates[m] = np.log2(1.0 + var[user] * q)
    return ChainRates(order, rates, float(rates.sum()))


def joint_log_det(ch_vectors, variances, sigma_N_sq) -> float:
    """Sum capacity log2 det(I + sum_j s_j f_j f_j^dagger / sigma_N_sq)."""
    vectors = _as_vectors(ch_vectors)
    var = np.asarray(variances, dtype=float)
    k_out = vectors.shape[1]
    gram = np.eye(k_out, dtype=complex)
    for j in range(vectors.shape[0]):
        gram += var[j] * np.outer(vectors[j], vectors[j].conj()) / sigma_N_sq
    sign, logdet = np.linalg.slogdet(gram)
    if sign.real <= 0:
        raise np.linalg.LinAlgError("sum-capacity determinant is not positive")
    return float(logdet / np.log(2.0))


def rank_one_update_inverse(k_inv, x, weight: float = 1.0) -> np.ndarray:
    """Inverse of K + weight * x x^dagger given K^{-1} (Sherman-Morrison)."""
    k_inv = np.asarray(k_inv, dtype=complex)
    x = np.asarray(x, dtype=complex)
    kx = k_inv @ x
    denom = 1.0 + weight * np.real(x.conj() @ kx)
    return k_inv - weight * np.outer(kx, kx.conj()) / denom
