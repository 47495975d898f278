"""Variance allocation over eigenchannels and the resulting capacities.

Given a tolerated noise-to-gain threshold nu_eve, the allocation assigns

    nu_prime_min = sigma_N_sq / lambda_max^2        (eigen floor)
    nu_min       = sigma_N_sq / max_i |F(T)_i|^2    (sub-channel floor)
    sigma_dprime_sq = nu_eve - nu_prime_min         (sub-channel budget)
    mu = (nu_eve + (n_min (1+c) - 1) nu_prime_min) / (n_min (1+c))
    sigma_prime_i_sq = mu - nu_prime_min            (per-eigenchannel budget)

so every eigenchannel gets the same variance sigma_dprime_sq/(n_min (1+c))
and the improvement over the plain sub-channel allocation is
pi = nu_min - nu_prime_min >= 0 whenever lambda_max^2 >= max |F(T)_i|^2.

Two distinct quantities both play the role of "modulation variance":

* ``sigma_w_sq_eigen``  = sum_i sigma_prime_i_sq = sigma_dprime_sq / (1+c),
  the total eigenchannel budget (enters the eigen-capacity formulas);
* ``sigma_w_sq_amqd``   = nu_eve - nu_min, the plain per-sub-channel
  allocation, which satisfies sigma_dprime_sq - sigma_w_sq_amqd = pi.

Both are reported; conflating them changes results by factors of (1+c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel
from .phase_space import as_rng
from .singular_layer import SvdLayer

__all__ = [
    "InfeasibleAllocationError",
    "AllocationPlan",
    "LowSnrRate",
    "MaxProbabilityRate",
    "allocate",
    "capacity_eigen",
    "capacity_eigen_sum",
    "capacity_log_det",
    "capacity_subchannels",
    "low_snr_rate",
    "max_probability_rate",
    "report_row",
]

LOG2E = np.log2(np.e)


class InfeasibleAllocationError(ValueError):
    """No positive modulation variance exists for the requested threshold."""


@dataclass(frozen=True)
class AllocationPlan:
    n_min: int
    l: int
    nu_eve: float
    sigma_N_sq: float
    c: float
    mu: float
    nu_min: float
    nu_prime_min: float
    pi: float
    sigma_dprime_sq: float
    sigma_prime_i: np.ndarray
    sigma_w_sq_eigen: float
    sigma_w_sq_amqd: float
    nu_kappa: float
    nu_kappa_prime: float
    correction_applied: bool

    def __post_init__(self):
        arr = np.asarray(self.sigma_prime_i, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "sigma_prime_i", arr)


def allocate(layer: SvdLayer, ch: ChannelModel, c: float = 1.0,
             nu_kappa: float = 0.0) -> AllocationPlan:
    """Allocate modulation variances for an eigenchannel layer over ``ch``.

    Raises:
        InfeasibleAllocationError: if nu_eve <= nu_prime_min, i.e. the
            threshold leaves no positive variance even on the best
            eigenchannel.
        ValueError: if the layer has no positive singular value or c <= 0.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    lam_max_sq = float(layer.gamma[0] ** 2) if layer.gamma.size else 0.0
    if lam_max_sq <= 0.0:
        raise ValueError("layer has no positive singular value")
    gain_max = float(np.max(np.abs(ch.ft) ** 2))
    if gain_max <= 0.0:
        raise ValueError("channel has no usable sub-channel gain")
    sigma_N_sq = ch.sigma_N_sq
    nu_eve = ch.nu_eve
    nu_prime_min = sigma_N_sq / lam_max_sq
    nu_min = sigma_N_sq / gain_max
    if nu_eve <= nu_prime_min:
        raise InfeasibleAllocationError(
            f"nu_eve={nu_eve} <= nu_prime_min={nu_prime_min}: no positive variance exists"
        )
    n_min = layer.n_min
    sigma_dprime_sq = nu_eve - nu_prime_min
    mu = (nu_eve + (n_min * (1.0 + c) - 1.0) * nu_prime_min) / (n_min * (1.0 + c))
    sigma_prime = mu - nu_prime_min
    pi = nu_min - nu_prime_min
    # residual modulation imperfection: shrink nu_kappa by the gain pi
    correction_applied = pi < nu_kappa
    nu_kappa_prime = nu_kappa - pi if correction_applied else 0.0
    return AllocationPlan(
        n_min=n_min,
        l=ch.l,
        nu_eve=nu_eve,
        sigma_N_sq=sigma_N_sq,
        c=c,
        mu=mu,
        nu_min=nu_min,
        nu_prime_min=nu_prime_min,
        pi=pi,
        sigma_dprime_sq=sigma_dprime_sq,
        sigma_prime_i=np.full(n_min, sigma_prime),
        sigma_w_sq_eigen=n_min * sigma_prime,
        sigma_w_sq_amqd=nu_eve - nu_min,
        nu_kappa=nu_kappa,
        nu_kappa_prime=nu_kappa_prime,
        correction_applied=correction_applied,
    )


def capacity_eigen_sum(layer: SvdLayer, sigma_prime, sigma_N_sq, sigma_gamma_sq=0.0) -> float:
    """Eigen-sum capacity sum_i log2(1 + sigma_prime_i lambda_i^2 / (sigma_N_sq + sigma_gamma_sq))."""
    var = np.broadcast_to(np.asarray(sigma_prime, dtype=float), (layer.n_min,))
    noise = sigma_N_sq + sigma_gamma_sq
    return float(np.sum(np.log2(1.0 + var * layer.gamma**2 / noise)))


def capacity_eigen(plan: AllocationPlan, layer: SvdLayer, sigma_N_sq=None,
                   sigma_gamma_sq: float = 0.0) -> float:
    """Capacity of the allocated eigenchannels (noise defaults to the plan's)."""
    noise = plan.sigma_N_sq if sigma_N_sq is None else sigma_N_sq
    return capacity_eigen_sum(layer, plan.sigma_prime_i, noise, sigma_gamma_sq)


def capacity_log_det(layer: SvdLayer, sigma_prime, sigma_N_sq, sigma_gamma_sq=0.0) -> float:
    """log-det route: log2 det(I + F K_s F^dagger / noise), K_s = F1 diag(sigma_prime) F1_inv.

    Agrees with :func:`capacity_eigen_sum` because F K_s F^dagger and
    diag(sigma_prime_i lambda_i^2) are unitarily similar.
    """
    var = np.broadcast_to(np.asarray(sigma_prime, dtype=float), (layer.k_in,))
    k_s = layer.f1 @ np.diag(var).astype(complex) @ layer.f1_inv
    f = layer.matrix()
    noise = sigma_N_sq + sigma_gamma_sq
    a = np.eye(layer.k_out, dtype=complex) + f @ k_s @ f.conj().T / noise
    sign, logdet = np.linalg.slogdet(a)
    if sign.real <= 0:
        raise np.linalg.LinAlgError("capacity determinant is not positive")
    return float(logdet / np.log(2.0))


def capacity_subchannels(plan: AllocationPlan, ch: ChannelModel,
                         sigma_gamma_sq: float = 0.0) -> float:
    """Sub-channel capacity over the good set with the sigma_dprime budget.

    sigma_gamma_sq = 0 gives the per-sub-channel form; a positive value
    gives the statement-level variant with the leak added to the noise.
    """
    noise = ch.sigma_N_sq + sigma_gamma_sq
    gains = np.abs(ch.good_ft) ** 2
    return float(np.sum(np.log2(1.0 + plan.sigma_dprime_sq * gains / noise)))


@dataclass(frozen=True)
class LowSnrRate:
    eigen_bits: float
    amqd_bits: float


def low_snr_rate(layer: SvdLayer, plan: AllocationPlan, ch: ChannelModel,
                 sigma_N_sq=None) -> LowSnrRate:
    """Linearized rates in the vanishing-SNR regime.

    eigen side: n_min * lambda_max^2 * log2(e) * sigma_prime_i / sigma_N_sq;
    multicarrier analogue: sum_i |F(T)_i|^2 * log2(e) * SNR over the good
    set, evaluated at the same per-stream SNR so the comparison reduces to
    n_min * lambda_max^2 versus sum_i |F(T)_i|^2.
    """
    noise = plan.sigma_N_sq if sigma_N_sq is None else sigma_N_sq
    snr = float(plan.sigma_prime_i[0]) / noise
    lam_max_sq = float(layer.gamma[0] ** 2)
    eigen = layer.n_min * lam_max_sq * LOG2E * snr
    amqd = float(np.sum(np.abs(ch.good_ft) ** 2)) * LOG2E * snr
    return LowSnrRate(eigen, amqd)


@dataclass(frozen=True)
class MaxProbabilityRate:
    p: float
    rate_bits: float
    s_max: float
    se: float


def max_probability_rate(gains_draw, snr: float, trials: int, seed=None,
                         decimals: int = 9) -> MaxProbabilityRate:
    """Probability-weighted rate p * log2(1 + snr * S_max / p).

    ``gains_draw(rng)`` must return one vector of sub-channel (or eigen)
    power gains per call; S is its sum. p is the Monte Carlo probability
    that S attains its maximum, with sums rounded to ``decimals`` so draws
    from discrete gain distributions compare exactly.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(seed)
    sums = np.empty(trials)
    for t in range(trials):
        sums[t] = np.sum(np.asarray(gains_draw(rng), dtype=float))
    rounded = np.round(sums, decimals)
    s_max = rounded.max()
    p = float(np.mean(rounded == s_max))
    rate = p * np.log2(1.0 + snr * s_max / p)
    se = float(np.sqrt(p * (1.0 - p) / trials))
    return MaxProbabilityRate(p, float(rate), float(s_max), se)


def report_row(run_id, plan: AllocationPlan, layer: SvdLayer, ch: ChannelModel) -> dict:
    """One CSV row summarizing an allocation (capacities at sigma_gamma_sq = 0)."""
    return {
        "run_id": run_id,
        "n_min": plan.n_min,
        "l": plan.l,
        "nu_eve": plan.nu_eve,
        "sigma_N_sq": plan.sigma_N_sq,
        "c": plan.c,
        "mu": plan.mu,
        "nu_min": plan.nu_min,
        "nu_prime_min": plan.nu_prime_min,
        "pi": plan.pi,
        "sigma_dprime": plan.sigma_dprime_sq,
        "C_eigen_bits": capacity_eigen(plan, layer),
        "C_sub_bits": capacity_subchannels(plan, ch),
    }
