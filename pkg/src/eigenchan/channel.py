"""Multicarrier Gaussian channel with complex sub-channel transmittances.

The physical channel acts diagonally in the Fourier domain: a block d of l
subcarriers is received as

    y_i = F(T)_i * F(d)_i + noise_i,

where F(T) is the unitary DFT of the n transmittance coefficients and the
noise is circularly symmetric Gaussian with per-quadrature variance
sigma_N_sq. Transmittances follow the convention 0 <= Re T_i = Im T_i <=
1/sqrt(2) with |T_i|^2 < 1.

A sub-channel i is usable ("good") when its noise-to-gain ratio
nu_i = sigma_N_sq / |F(T)_i|^2 stays below the tolerated threshold nu_eve;
transmission is restricted to the good set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import CvVector, as_rng

__all__ = [
    "ADMISSIBLE_MAX",
    "ChannelModel",
    "AmqdBlock",
    "make_channel",
    "transmit_block",
    "logical_channel",
    "eve_transmittance",
    "channel_from_config",
]

# Per-quadrature bound: Re T = Im T <= 1/sqrt(2) keeps |T|^2 <= 1.
ADMISSIBLE_MAX = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelModel:
    """Static description of an n-sub-channel multicarrier link.

    ``ft`` holds the Fourier-domain coefficients F(T). For a channel built
    from scratch it is the unitary DFT of ``transmittances``; for a
    restricted view (see :func:`logical_channel`) it is the projection of
    the parent's coefficients, which is why it is stored explicitly.
    """

    transmittances: np.ndarray
    sigma_N_sq: float
    nu_eve: float
    ft: np.ndarray
    good_set: np.ndarray

    def __post_init__(self):
        for name in ("transmittances", "ft", "good_set"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.transmittances.size

    @property
    def l(self) -> int:
        """Number of good sub-channels."""
        return self.good_set.size

    @property
    def nu(self) -> np.ndarray:
        """Per-sub-channel noise-to-gain ratios nu_i = sigma_N_sq / |F(T)_i|^2."""
        gain = np.abs(self.ft) ** 2
        with np.errstate(divide="ignore"):
            return np.where(gain > 0.0, self.sigma_N_sq / np.where(gain > 0, gain, 1.0), np.inf)

    @property
    def good_ft(self) -> np.ndarray:
        return self.ft[self.good_set]


@dataclass(frozen=True)
class AmqdBlock:
    """One transmitted multicarrier block and what the receiver saw."""

    index: int
    subcarriers: np.ndarray
    output: np.ndarray
    noise_realization: np.ndarray


def _validate_transmittances(t: np.ndarray):
    re, im = t.real, t.imag
    tol = 1e-12 * np.maximum(1.0, np.abs(re))
    if np.any(np.abs(re - im) > tol):
        raise ValueError("transmittance convention requires Re T_i == Im T_i")
    if np.any(re < -1e-15) or np.any(re > ADMISSIBLE_MAX + 1e-15):
        raise ValueError("Re T_i must lie in [0, 1/sqrt(2)]")
    if np.any(np.abs(t) ** 2 >= 1.0):
        raise ValueError("|T_i|^2 must be strictly below 1")


def make_channel(n, sigma_N_sq, nu_eve, transmittances=None, seed=None) -> ChannelModel:
    """Build a channel from explicit transmittances or a uniform magnitude draw.

    Args:
        n: number of sub-channels.
        sigma_N_sq: per-quadrature noise variance (> 0).
        nu_eve: tolerated noise-to-gain threshold (> 0).
        transmittances: explicit complex coefficients; ``None`` draws
            |T_i| ~ Uniform[0, 1) with the Re = Im convention.
        seed: RNG seed for the draw.
    """
    if n < 1:
        raise ValueError("channel needs at least one sub-channel")
    if sigma_N_sq <= 0:
        raise ValueError("sigma_N_sq must be positive")
    if nu_eve <= 0:
        raise ValueError("nu_eve must be positive")
    if transmittances is None:
        rng = as_rng(seed)
        magnitude = rng.uniform(0.0, 1.0, n)
        t = magnitude * (1.0 + 1.0j) / np.sqrt(2.0)
    else:
        t = np.asarray(transmittances, dtype=complex)
        if t.shape != (n,):
            raise ValueError(f"expected {n} transmittances, got shape {t.shape}")
    _validate_transmittances(t)
    ft = np.fft.fft(t, norm="ortho")
    gain = np.abs(ft) ** 2
    with np.errstate(divide="ignore"):
        nu = np.where(gain > 0.0, sigma_N_sq / np.where(gain > 0, gain, 1.0), np.inf)
    good = np.flatnonzero(nu < nu_eve)
    return ChannelModel(t, float(sigma_N_sq), float(nu_eve), ft, good)


def transmit_block(ch: ChannelModel, d, seed=None, index: int = 0) -> AmqdBlock:
    """Send one block over the good sub-channels.

    ``d`` must hold exactly l = |good_set| subcarriers. The receiver sees
    F(T)_i * F(d)_i plus circularly symmetric noise with per-quadrature
    variance sigma_N_sq (the Fourier transform of white Gaussian noise has
    the same law, so the noise is drawn directly in the output domain).
    """
    values = d.values if isinstance(d, CvVector) else np.asarray(d, dtype=complex)
    if values.size != ch.l:
        raise ValueError(f"block length {values.size} != good-set size {ch.l}")
    rng = as_rng(seed)
    std = np.sqrt(ch.sigma_N_sq)
    noise = rng.normal(0.0, std, ch.l) + 1j * rng.normal(0.0, std, ch.l)
    spectrum = np.fft.fft(values, norm="ortho")
    output = ch.good_ft * spectrum + noise
    return AmqdBlock(index, values, output, noise)


def logical_channel(ch: ChannelModel, indices=None) -> ChannelModel:
    """Restricted view exposing only the selected good sub-channels.

    The view keeps the parent's Fourier coefficients at ``indices`` (it is a
    projection, not a re-derivation), so per-sub-channel gains match the
    parent exactly. ``None`` selects the whole good set.
    """
    idx = np.asarray(ch.good_set if indices is None else indices, dtype=int)
    if idx.size == 0:
        raise ValueError("a logical channel needs at least one sub-channel")
    if np.unique(idx).size != idx.size:
        raise ValueError("indices must be unique")
    if not np.isin(idx, ch.good_set).all():
        raise ValueError("indices must be a subset of the good set")
    t = ch.transmittances[idx]
    ft = ch.ft[idx]
    # every selected sub-channel was good in the parent, so all stay good
    good = np.arange(idx.size)
    return ChannelModel(t, ch.sigma_N_sq, ch.nu_eve, ft, good)


def eve_transmittance(ch: ChannelModel, i: int) -> complex:
    """Complement transmittance seen by the eavesdropper on sub-channel i.

    Taken per quadrature within the admissible box: each quadrature of T_i
    maps to (1/sqrt(2) - quadrature), so T_i = 0 gives the box maximum and
    the Re = Im convention is preserved. Reporting-only quantity.
    """
    t = ch.transmittances[i]
    return complex(ADMISSIBLE_MAX - t.real, ADMISSIBLE_MAX - t.imag)


def channel_from_config(cfg: dict) -> ChannelModel:
    """Build a channel from the JSON configuration mapping.

    Expected keys: ``n`` (int), ``transmittances`` (list of [re, im] pairs or
    {"draw": "uniform", "seed": int}), ``sigma_N_sq``, ``nu_eve``.
    """
    try:
        n = int(cfg["n"])
        sigma_N_sq = float(cfg["sigma_N_sq"])
        nu_eve = float(cfg["nu_eve"])
        spec = cfg["transmittances"]
    except KeyError as missing:
        raise ValueError(f"channel config missing key {missing}") from None
    if isinstance(spec, dict):
        if spec.get("draw") != "uniform":
            raise ValueError(f"unknown transmittance draw {spec.get('draw')!r}")
        return make_channel(n, sigma_N_sq, nu_eve, seed=spec.get("seed"))
    pairs = np.asarray(spec, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("explicit transmittances must be [re, im] pairs")
    t = pairs[:, 0] + 1j * pairs[:, 1]
    return make_channel(n, sigma_N_sq, nu_eve, transmittances=t)
