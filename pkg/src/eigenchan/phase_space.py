"""Gaussian phase-space primitives for multicarrier transmission.

Conventions used throughout the package:

* A single-mode sample is a complex number z = x + i*p whose quadratures x
  and p are independent zero-mean Gaussians with a common per-quadrature
  variance sigma_sq, so E[|z|^2] = 2 * sigma_sq.
* For circularly symmetric z the magnitude |z| is Rayleigh distributed and
  |z|^2 is exponential; both are exposed to tests via the raw samples.
* The discrete Fourier transform is unitary in both directions
  (1/sqrt(d) normalization), so ifft(fft(v)) == v and Parseval's identity
  ||F(v)||^2 == ||v||^2 holds exactly up to floating point error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CvSample",
    "CvVector",
    "FourierConvention",
    "UNITARY_FORWARD",
    "UNITARY_INVERSE",
    "sample_gaussian_cv",
    "fft",
    "ifft",
    "squared_magnitude_tau",
]


def as_rng(seed) -> np.random.Generator:
    """Return a Generator from an int seed, a seed sequence, or pass one through."""
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class CvSample:
    """One continuous-variable sample z = x + i*p in the phase space."""

    value: complex

    @property
    def x(self) -> float:
        return self.value.real

    @property
    def p(self) -> float:
        return self.value.imag

    @property
    def magnitude(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class CvVector:
    """A d-dimensional block of phase-space samples.

    ``covariance`` is the optional d x d Hermitian PSD matrix E[z z^dagger].
    ``None`` means isotropic: 2 * sigma_sq * I for the per-quadrature
    variance the block was sampled with (kept implicit so large blocks do
    not materialize a dense matrix).
    """

    values: np.ndarray
    covariance: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("CvVector requires a non-empty 1-d block")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.covariance is not None:
            cov = np.asarray(self.covariance, dtype=complex)
            if cov.shape != (values.size, values.size):
                raise ValueError("covariance shape must be (d, d)")
            if not np.allclose(cov, cov.conj().T, atol=1e-12):
                raise ValueError("covariance must be Hermitian")
            # PSD up to round-off
            if np.linalg.eigvalsh(cov).min() < -1e-10 * max(1.0, abs(cov).max()):
                raise ValueError("covariance must be positive semidefinite")
            cov.setflags(write=False)
            object.__setattr__(self, "covariance", cov)

    @property
    def d(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class FourierConvention:
    """Direction + normalization tag for the transform pair used here."""

    direction: str
    normalization: str = "unitary"

    def __post_init__(self):
        if self.direction not in ("forward", "inverse"):
            raise ValueError("direction must be 'forward' or 'inverse'")
        if self.normalization != "unitary":
            raise ValueError("only the unitary (1/sqrt(d)) normalization is supported")


UNITARY_FORWARD = FourierConvention("forward")
UNITARY_INVERSE = FourierConvention("inverse")


def sample_gaussian_cv(sigma_sq: float, d: int, seed=None) -> CvVector:
    """Draw d i.i.d. circularly symmetric Gaussian samples.

    Each quadrature is N(0, sigma_sq), so E[|z_i|^2] = 2 * sigma_sq.

    Raises:
        ValueError: if sigma_sq <= 0 or d < 1.
    """
    if sigma_sq <= 0:
        raise ValueError(f"per-quadrature variance must be positive, got {sigma_sq}")
    if d < 1:
        raise ValueError(f"block length must be >= 1, got {d}")
    rng = as_rng(seed)
    std = np.sqrt(sigma_sq)
    z = rng.normal(0.0, std, d) + 1j * rng.normal(0.0, std, d)
    return CvVector(z)


def _values(v) -> np.ndarray:
    return v.values if isinstance(v, CvVector) else np.asarray(v, dtype=complex)


def fft(v):
    """Unitary forward DFT of a block; covariance maps as K -> F K F^dagger."""
    x = _values(v)
    out = np.fft.fft(x, norm="ortho")
    if isinstance(v, CvVector):
        cov = None
        if v.covariance is not None:
            f = _dft_matrix(x.size)
            cov = f @ v.covariance @ f.conj().T
        return CvVector(out, cov)
    return out


def ifft(v):
    """Unitary inverse DFT; exact inverse of :func:`fft`."""
    x = _values(v)
    out = np.fft.ifft(x, norm="ortho")
    if isinstance(v, CvVector):
        cov = None
        if v.covariance is not None:
            f = _dft_matrix(x.size).conj().T
            cov = f @ v.covariance @ f.conj().T
        return CvVector(out, cov)
    return out


def _dft_matrix(d: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def squared_magnitude_tau(block) -> float:
    """Total Fourier-domain power tau = sum_i |F(d)_i|^2 of a block.

    For i.i.d. blocks with per-quadrature variance sigma_w_sq the mean obeys
    E[tau] <= d * 2 * sigma_w_sq (with equality for the unitary transform).
    """
    spectrum = np.fft.fft(_values(block), norm="ortho")
    return float(np.sum(np.abs(spectrum) ** 2))
