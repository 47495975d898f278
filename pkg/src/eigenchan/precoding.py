"""Interference handling at the coder: projectors and lattice precoding.

Two complementary tools:

* Receiver-side projector cancellation. For stream i, a projector P_i with
  orthonormal rows annihilates the interference span of the other rank-one
  eigenchannel terms lambda_j * u2_j f1_inv_j while keeping the stream's
  own direction; projected Gaussian noise stays Gaussian and isotropic.

* Transmitter-side interference-avoiding precoding against a known additive
  interference gamma. The naive kappa = phi - gamma costs unbounded energy.
  Instead each symbol phi is extended to the equivalence class
  phi + period * (k_x + i k_p) over a square lattice; the transmitter sends
  the class replica nearest to alpha * gamma minus alpha * gamma, bounding
  every quadrature of the correction by period / 2. The MMSE scaling
  alpha = sigma_w_sq / (sigma_w_sq + sigma_N_sq) makes the receiver-side
  rescaling optimal, with per-real-dimension residual
  sigma_w_sq * sigma_N_sq / (sigma_w_sq + sigma_N_sq).

Default lattice geometry ties to the symbol scale: minimum base-point
distance h_min = 2 * sigma_w and period = 4 * sigma_w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .phase_space import as_rng
from .singular_layer import RANK_RTOL, SvdLayer

__all__ = [
    "RankDeficiencyError",
    "Projector",
    "EquivalenceConstellation",
    "PrecodeResult",
    "SpherePacking",
    "build_projector",
    "postcode_cancel",
    "cancellation_operator",
    "snr_after_projection",
    "stream_rate_bound",
    "square_grid",
    "make_constellation",
    "alpha_mmse",
    "naive_precode",
    "sia_precode",
    "sia_decode",
    "mmse_residual_variance",
    "alpha_residual_mc",
    "symbol_error_rate",
    "sphere_packing_capacity",
    "constellation_rows",
]


class RankDeficiencyError(ValueError):
    """The interference span degenerates and no clean projector exists."""


@dataclass(frozen=True)
class Projector:
    """d_perp x K_out matrix with orthonormal rows."""

    matrix: np.ndarray
    stream: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_perp(self) -> int:
        return self.matrix.shape[0]

    def operator(self) -> np.ndarray:
        """The K_out x K_out orthogonal projection P^dagger P."""
        return self.matrix.conj().T @ self.matrix


def build_projector(layer: SvdLayer, i: int) -> Projector:
    """Projector for stream i, orthogonal to every other active stream direction.

    Active means lambda_j above the numerical rank cutoff; inactive streams
    carry no power and need no cancellation.

    Raises:
        RankDeficiencyError: if the factors are degenerate (the stream's own
            direction falls inside the interference span, or nothing is left
            to project onto).
    """
    if not 0 <= i < layer.n_min:
        raise ValueError(f"stream index {i} out of range")
    lam_max = layer.gamma[0] if layer.gamma.size else 0.0
    active = [j for j in range(layer.n_min)
              if j != i and layer.gamma[j] > RANK_RTOL * lam_max]
    if not active:
        basis = np.eye(layer.k_out, dtype=complex)
    else:
        interference = layer.u2[:, active]
        basis = null_space(interference.conj().T)
        if basis.size == 0:
            raise RankDeficiencyError("interference span leaves no free direction")
        basis = basis.astype(complex)
    p = basis.conj().T
    # deterministic row phases: largest entry of each row real positive
    for r in range(p.shape[0]):
        pivot = np.argmax(np.abs(p[r]))
        mag = np.abs(p[r, pivot])
        if mag > 0:
            p[r] *= np.conj(p[r, pivot]) / mag
    if np.linalg.norm(p @ layer.u2[:, i]) < 1e-10:
        raise RankDeficiencyError(
            f"stream {i} direction lies in the span of the other streams"
        )
    return Projector(p, i)


def postcode_cancel(proj: Projector, received) -> np.ndarray:
    """Apply the projector to a received block: interference terms vanish."""
    return proj.matrix @ np.asarray(received, dtype=complex)


def cancellation_operator(proj: Projector, layer: SvdLayer, i=None) -> np.ndarray:
    """W_i = P^dagger P (lambda_i u2_i f1_inv_i), the surviving rank-one map."""
    k = proj.stream if i is None else i
    term = layer.gamma[k] * np.outer(layer.u2[:, k], layer.f1_inv[k, :])
    return proj.operator() @ term


def snr_after_projection(proj: Projector, f_vec, sigma_w_sq, sigma_N_sq) -> float:
    """sigma_w_sq * ||P f||^2 / sigma_N_sq for a stream signature vector f."""
    pf = proj.matrix @ np.asarray(f_vec, dtype=complex)
    return float(sigma_w_sq * np.sum(np.abs(pf) ** 2) / sigma_N_sq)


def stream_rate_bound(layer: SvdLayer, sigma_w_sq, sigma_N_sq) -> float:
    """Upper bound sum_i log2(1 + sigma_w_sq lambda_i^2 / sigma_N_sq)."""
    return float(np.sum(np.log2(1.0 + sigma_w_sq * layer.gamma**2 / sigma_N_sq)))


# ---------------------------------------------------------------------------
# lattice-extended constellations and precoding
# ---------------------------------------------------------------------------


def square_grid(n_points: int, min_distance: float) -> np.ndarray:
    """Centered row-major rectangular grid of n_points with the given spacing."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    nx = int(np.ceil(np.sqrt(n_points)))
    ny = int(np.ceil(n_points / nx))
    xs = (np.arange(nx) - (nx - 1) / 2.0) * min_distance
    ys = (np.arange(ny) - (ny - 1) / 2.0) * min_distance
    pts = (xs[None, :] + 1j * ys[:, None]).ravel()
    return pts[:n_points]


@dataclass(frozen=True)
class EquivalenceConstellation:
    """Base points plus the square lattice that generates their classes."""

    base_points: np.ndarray
    lattice_period: float
    domain_halfwidth: float
    h_min: float

    def __post_init__(self):
        pts = np.asarray(self.base_points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "base_points", pts)

    @property
    def n_base(self) -> int:
        return self.base_points.size

    def replica(self, base_index, kx, kp):
        return self.base_points[base_index] + self.lattice_period * (
            np.asarray(kx) + 1j * np.asarray(kp)
        )


def make_constellation(base_points, sigma_w: float, lattice_period=None,
                       domain_halfwidth=None) -> EquivalenceConstellation:
    """Validate and build a lattice-extended constellation.

    Base points must keep the minimum distance h_min = 2 * sigma_w and must
    occupy distinct lattice classes, otherwise decoding is ambiguous.
    """
    if sigma_w <= 0:
        raise ValueError("sigma_w must be positive")
    pts = np.asarray(base_points, dtype=complex)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("base_points must be a non-empty 1-d set")
    h_min = 2.0 * sigma_w
    period = 4.0 * sigma_w if lattice_period is None else float(lattice_period)
    if period <= 0:
        raise ValueError("lattice_period must be positive")
    if pts.size > 1:
        diff = pts[:, None] - pts[None, :]
        off = ~np.eye(pts.size, dtype=bool)
        if np.abs(diff[off]).min() < h_min - 1e-12:
            raise ValueError(f"base points closer than h_min = {h_min}")
        # distinct classes: some quadrature difference must be off-lattice
        rx = np.abs(diff.real[off] / period - np.round(diff.real[off] / period))
        rp = np.abs(diff.imag[off] / period - np.round(diff.imag[off] / period))
        if np.any((rx < 1e-12) & (rp < 1e-12)):
            raise ValueError("two base points share a lattice equivalence class")
    if domain_halfwidth is None:
        domain_halfwidth = 2.0 * period
    return EquivalenceConstellation(pts, period, float(domain_halfwidth), h_min)


@dataclass(frozen=True)
class PrecodeResult:
    """Transmitted correction signal and its bookkeeping.

    All fields broadcast: scalars for one symbol, arrays for a batch.
    ``extra_variance`` is |transmitted|^2 - |phi|^2.
    """

    transmitted: np.ndarray | complex
    class_index: tuple
    extra_variance: np.ndarray | float

    @property
    def energy(self):
        return np.abs(self.transmitted) ** 2


def alpha_mmse(sigma_w_sq, sigma_N_sq) -> float:
    """Receiver scaling alpha = sigma_w_sq / (sigma_w_sq + sigma_N_sq)."""
    return sigma_w_sq / (sigma_w_sq + sigma_N_sq)


def naive_precode(phi, gamma) -> PrecodeResult:
    """Plain pre-subtraction kappa = phi - gamma (unbounded energy)."""
    phi = np.asarray(phi, dtype=complex) if np.ndim(phi) else complex(phi)
    kappa = phi - np.asarray(gamma, dtype=complex) if np.ndim(gamma) else phi - gamma
    zeros = np.zeros_like(np.real(kappa), dtype=int)
    return PrecodeResult(kappa, (zeros, zeros), np.abs(kappa) ** 2 - np.abs(phi) ** 2)


def sia_precode(phi, gamma, alpha, const: EquivalenceConstellation) -> PrecodeResult:
    """Modulo-lattice precoding: send the nearest class replica minus alpha*gamma.

    The replica of phi nearest to alpha * gamma is chosen by componentwise
    rounding, so each quadrature of the transmitted correction is bounded by
    lattice_period / 2 regardless of gamma.
    """
    target = alpha * np.asarray(gamma, dtype=complex)
    period = const.lattice_period
    kx = np.round((target.real - np.real(phi)) / period).astype(int)
    kp = np.round((target.imag - np.imag(phi)) / period).astype(int)
    replica = phi + period * (kx + 1j * kp)
    transmitted = replica - target
    if np.ndim(gamma) == 0:
        transmitted = complex(transmitted)
        kx, kp = int(kx), int(kp)
    return PrecodeResult(transmitted, (kx, kp),
                         np.abs(transmitted) ** 2 - np.abs(phi) ** 2)


def sia_decode(received, alpha, const: EquivalenceConstellation):
    """Nearest-replica decision on alpha * received over all base classes.

    Returns (base_index, decoded_point); both broadcast over a batch.
    """
    scaled = alpha * np.asarray(received, dtype=complex)
    period = const.lattice_period
    offsets = scaled[..., None] - const.base_points  # (..., n_base)
    kx = np.round(offsets.real / period)
    kp = np.round(offsets.imag / period)
    residual = offsets - period * (kx + 1j * kp)
    best = np.argmin(np.abs(residual), axis=-1)
    take = np.take_along_axis if scaled.ndim else None
    if take is None:
        best = int(best)
        point = const.base_points[best] + period * (kx[best] + 1j * kp[best])
        return best, complex(point)
    sel = best[..., None]
    point = (const.base_points[best]
             + period * (np.take_along_axis(kx, sel, -1)[..., 0]
                         + 1j * np.take_along_axis(kp, sel, -1)[..., 0]))
    return best, point


def mmse_residual_variance(sigma_w_sq, sigma_N_sq) -> float:
    """Residual variance per real dimension after MMSE rescaling."""
    return sigma_w_sq * sigma_N_sq / (sigma_w_sq + sigma_N_sq)


def alpha_residual_mc(sigma_w_sq, sigma_N_sq, d: int, trials: int, seed=None):
    """Monte Carlo check of E||alpha(x + n) - x||^2 over d real dimensions.

    Returns (empirical_mean, se, analytic) with the analytic value
    d * sigma_w_sq * sigma_N_sq / (sigma_w_sq + sigma_N_sq).
    """
    rng = as_rng(seed)
    alpha = alpha_mmse(sigma_w_sq, sigma_N_sq)
    x = rng.normal(0.0, np.sqrt(sigma_w_sq), (trials, d))
    n = rng.normal(0.0, np.sqrt(sigma_N_sq), (trials, d))
    r = np.sum((alpha * (x + n) - x) ** 2, axis=1)
    analytic = d * mmse_residual_variance(sigma_w_sq, sigma_N_sq)
    return float(r.mean()), float(r.std(ddof=1) / np.sqrt(trials)), analytic


def symbol_error_rate(const: EquivalenceConstellation, sigma_w_sq, sigma_N_sq,
                      gamma_std, trials: int, seed=None):
    """End-to-end symbol error rate of precode -> interfered channel -> decode.

    gamma is the known interference (per-quadrature std ``gamma_std``); the
    channel adds it back along with fresh noise of per-quadrature variance
    sigma_N_sq. Returns (error_rate, se).
    """
    rng = as_rng(seed)
    m = rng.integers(0, const.n_base, trials)
    phi = const.base_points[m]
    gamma = rng.normal(0.0, gamma_std, trials) + 1j * rng.normal(0.0, gamma_std, trials)
    alpha = alpha_mmse(sigma_w_sq, sigma_N_sq)
    sent = sia_precode(phi, gamma, alpha, const).transmitted
    std = np.sqrt(sigma_N_sq)
    noise = rng.normal(0.0, std, trials) + 1j * rng.normal(0.0, std, trials)
    decoded, _ = sia_decode(sent + gamma + noise, alpha, const)
    errors = decoded != m
    rate = float(errors.mean())
    return rate, float(np.sqrt(max(rate * (1 - rate), 1e-300) / trials))


@dataclass(frozen=True)
class SpherePacking:
    bits: float
    codebook_bound: float
    confusion_probability: float


def sphere_packing_capacity(sigma_w_sq, sigma_N_sq, d: int) -> SpherePacking:
    """Volume-ratio capacity (d/2) log2(1 + SNR) over d real dimensions.

    Also returns the sphere-confusion probability
    p = (sigma_N_sq / (sigma_w_sq + sigma_N_sq))^(d/2) and the union-bound
    codebook ceiling 1/p = 2^bits.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    snr = sigma_w_sq / sigma_N_sq
    bits = 0.5 * d * np.log2(1.0 + snr)
    p = (sigma_N_sq / (sigma_w_sq + sigma_N_sq)) ** (d / 2.0)
    return SpherePacking(float(bits), float(1.0 / p), float(p))


def constellation_rows(const: EquivalenceConstellation) -> list[dict]:
    """Replica table over the coverage domain for plotting/export."""
    rows = []
    period = const.lattice_period
    k_max = int(np.ceil((const.domain_halfwidth + np.abs(const.base_points).max())
                        / period))
    for b, point in enumerate(const.base_points):
        for kx in range(-k_max, k_max + 1):
            for kp in range(-k_max, k_max + 1):
                rep = point + period * (kx + 1j * kp)
                if max(abs(rep.real), abs(rep.imag)) <= const.domain_halfwidth:
                    rows.append({
                        "class_kx": kx,
                        "class_kp": kp,
                        "base_index": b,
                        "x": rep.real,
                        "p": rep.imag,
                    })
    return rows
