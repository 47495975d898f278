"""Transmission with only statistical knowledge of the channel matrix.

When the exact factorization of F(T) is unavailable, coding is done against
the elementwise mean S = E[F(T)] of an ensemble of draws. The SVD of S
supplies the pre-rotation Q = xi_in, and without per-eigenchannel knowledge
the optimal input covariance is isotropic: wp = (sigma_prime_sq / K_in) I,
making the achievable rate

    C = E[ log2 det(I + (sigma_prime_sq / (K_in sigma_N_sq)) F F^dagger) ]

a Monte Carlo average over channel draws. Jensen's inequality bounds the
per-draw eigen-sum by the balanced-gain expression, and in the vanishing
SNR regime the capacity linearizes to
(1/(K_in n_min)) (sigma_prime_sq/sigma_N_sq) E[tr F F^dagger] log2(e).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import as_rng

__all__ = [
    "StatChannelModel",
    "CapacityEstimate",
    "JensenGap",
    "build_statistical_model",
    "capacity_partial_csi",
    "jensen_gap",
    "low_snr_partial_capacity",
]

LOG2E = np.log2(np.e)

# a mean matrix this small relative to the sample scale carries no direction
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class StatChannelModel:
    """Statistical factor model built from an ensemble of channel draws."""

    mean_matrix: np.ndarray
    mean_gram: np.ndarray
    xi_out: np.ndarray
    singular_values: np.ndarray
    xi_in: np.ndarray
    wp: np.ndarray
    degenerate: bool

    @property
    def k_out(self) -> int:
        return self.mean_matrix.shape[0]

    @property
    def k_in(self) -> int:
        return self.mean_matrix.shape[1]

    @property
    def q(self) -> np.ndarray:
        """Pre-rotation applied by the encoder."""
        return self.xi_in

    def k_s(self) -> np.ndarray:
        """Input covariance xi_in @ diag(wp) @ xi_in^dagger (isotropic by default)."""
        return self.xi_in @ np.diag(self.wp).astype(complex) @ self.xi_in.conj().T


def build_statistical_model(samples, sigma_prime_sq: float = 1.0) -> StatChannelModel:
    """Fit the mean-matrix model to >= 2 equally shaped channel draws.

    ``wp`` spreads the total input budget uniformly over the K_in streams.
    The model is flagged degenerate when the draws cancel to a mean with no
    usable direction (e.g. the two-point ensemble {+A, -A}).
    """
    mats = [np.asarray(s, dtype=complex) for s in samples]
    if len(mats) < 2:
        raise ValueError("statistical model needs at least two sample matrices")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats) or len(shape) != 2:
        raise ValueError("all samples must be 2-d matrices of one shape")
    stack = np.stack(mats)
    mean_matrix = stack.mean(axis=0)
    mean_gram = np.einsum("kij,klj->il", stack, stack.conj()) / len(mats)
    u, s, vh = np.linalg.svd(mean_matrix, full_matrices=True)
    sample_scale = float(np.mean([np.linalg.norm(m) for m in mats]))
    degenerate = bool(np.linalg.norm(mean_matrix) <= DEGENERATE_RTOL * max(sample_scale, 1e-300))
    k_in = shape[1]
    wp = np.full(k_in, sigma_prime_sq / k_in)
    return StatChannelModel(mean_matrix, mean_gram, u, s, vh.conj().T, wp, degenerate)


@dataclass(frozen=True)
class CapacityEstimate:
    bits: float
    se: float
    trials: int


def capacity_partial_csi(stat: StatChannelModel, sampler, sigma_N_sq: float,
                         n_trials: int, seed=None) -> CapacityEstimate:
    """Monte Carlo mean of log2 det(I + F K_s F^dagger / sigma_N_sq).

    ``sampler(rng)`` returns one channel matrix draw per call. K_s comes
    from the statistical model; with the default isotropic wp the rate is
    invariant under the choice of the pre-rotation Q.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = as_rng(seed)
    k_s = stat.k_s()
    eye = np.eye(stat.k_out, dtype=complex)
    bits = np.empty(n_trials)
    for t in range(n_trials):
        f = np.asarray(sampler(rng), dtype=complex)
        sign, logdet = np.linalg.slogdet(eye + f @ k_s @ f.conj().T / sigma_N_sq)
        bits[t] = logdet / np.log(2.0)
    se = float(bits.std(ddof=1) / np.sqrt(n_trials)) if n_trials > 1 else 0.0
    return CapacityEstimate(float(bits.mean()), se, n_trials)


@dataclass(frozen=True)
class JensenGap:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float


def jensen_gap(sampler, sigma_prime_sq, sigma_N_sq, k_in, n_min, n_trials,
               seed=None) -> JensenGap:
    """Both sides of the concavity bound on the partial-CSI eigen-sum.

    Per draw with eigenvalues lambda_i^2 of F F^dagger and
    a = sigma_prime_sq / (k_in * n_min * sigma_N_sq):

        lhs = sum_i log2(1 + a lambda_i^2)
        rhs = n_min * log2(1 + a * mean_i lambda_i^2)

    lhs <= rhs holds per draw; both Monte Carlo means are returned.
    """
    rng = as_rng(seed)
    a = sigma_prime_sq / (k_in * n_min * sigma_N_sq)
    lhs = np.empty(n_trials)
    rhs = np.empty(n_trials)
    for t in range(n_trials):
        f = np.asarray(sampler(rng), dtype=complex)
        lam_sq = np.linalg.eigvalsh(f @ f.conj().T)
        lam_sq = np.clip(lam_sq[-n_min:], 0.0, None)
        lhs[t] = np.sum(np.log2(1.0 + a * lam_sq))
        rhs[t] = n_min * np.log2(1.0 + a * lam_sq.mean())
    return JensenGap(
        float(lhs.mean()),
        float(rhs.mean()),
        float(lhs.std(ddof=1) / np.sqrt(n_trials)),
        float(rhs.std(ddof=1) / np.sqrt(n_trials)),
    )


def low_snr_partial_capacity(k_in: int, k_out: int, sigma_prime_sq, sigma_N_sq,
                             trace_ff=None) -> float:
    """Closed-form vanishing-SNR capacity with isotropic inputs.

    ``trace_ff`` is E[tr F F^dagger]; the default K_in * K_out corresponds
    to unit-mean-square matrix entries, collapsing the expression to
    K_out * (1/n_min) * (sigma_prime_sq/sigma_N_sq) * log2(e).
    """
    n_min = min(k_in, k_out)
    if trace_ff is None:
        trace_ff = k_in * k_out
    return float(sigma_prime_sq / (k_in * n_min * sigma_N_sq) * trace_ff * LOG2E)
