"""Random-permutation constellation coding across sub-channels.

One message m out of 2^bits is sent on every good sub-channel, but each
sub-channel i >= 2 relabels the base constellation through a permutation
P_i, so two messages that are close on one sub-channel are typically far
apart on the others (signal-space diversity). Pairwise decision errors are
governed by the Gaussian tail

    Q( sqrt( (sigma_dprime_sq / (2 sigma_N_sq)) *
             sum_i |F(T)_i|^2 |delta_i|^2 ) ),

with normalized codeword differences
delta_i = (d_A_i - d_B_i) / sqrt(sigma_dprime_sq / sigma_N_sq); the
normalization and the SNR prefactor cancel, which pins the equivalent
detection model at unit complex-symbol noise (used by the Monte Carlo
verifier). Q is evaluated through erfc.

The per-pair merit o = sum_i (nu_eve - |delta_i|^2) is zero exactly in the
degenerate identical-constellation case where the repeated difference
satisfies |delta|^2 = nu_eve, and positive for designed permutations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .phase_space import as_rng
from .precoding import square_grid

__all__ = [
    "PermutationConstellation",
    "CodewordPair",
    "ProductDistanceReport",
    "DeltaOptimization",
    "build_constellation",
    "fig9_preset",
    "codeword",
    "make_codeword_pair",
    "message_pair",
    "q_function",
    "pairwise_error_prob",
    "pairwise_error_mc",
    "min_distance_pair",
    "pair_distance_ratio",
    "optimality",
    "rate_condition",
    "worst_pair_product_distance",
    "product_distance_stats",
    "product_distance_constant",
    "delta_optimization",
    "equal_delta_value",
]


@dataclass(frozen=True)
class PermutationConstellation:
    """Base symbols plus one labeling permutation per sub-channel.

    ``perms[i]`` maps message index -> base symbol index on sub-channel i;
    row 0 is always the identity. ``u_scale`` records the designed distance
    scaling for ``designated_pair`` (when one exists).
    """

    base: np.ndarray
    perms: np.ndarray
    bits: int
    sigma_w: float
    u_scale: float
    designated_pair: tuple | None = None

    def __post_init__(self):
        base = np.asarray(self.base, dtype=complex)
        perms = np.asarray(self.perms, dtype=int)
        if perms.ndim != 2 or perms.shape[1] != base.size:
            raise ValueError("perms must be (l, n_symbols)")
        ident = np.arange(base.size)
        for row in perms:
            if not np.array_equal(np.sort(row), ident):
                raise ValueError("every row of perms must be a permutation")
        if not np.array_equal(perms[0], ident):
            raise ValueError("sub-channel 1 must carry the identity labeling")
        base.setflags(write=False)
        perms.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "perms", perms)

    @property
    def l(self) -> int:
        return self.perms.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.base.size

    def subchannel_points(self, i: int) -> np.ndarray:
        """Symbols in message order as seen on sub-channel i."""
        return self.base[self.perms[i]]


def build_constellation(l: int, bits: int, sigma_w: float = 1.0,
                        base_points=None, u_scale: float = 2.0,
                        seed=None) -> PermutationConstellation:
    """2^bits symbols per sub-channel; uniform random labelings for i >= 2.

    The default base layout is a centered rectangular grid with minimum
    distance 2 * sigma_w.
    """
    if l < 1:
        raise ValueError("need at least one sub-channel")
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if u_scale <= 0:
        raise ValueError("u_scale must be positive")
    n_sym = 2**bits
    base = square_grid(n_sym, 2.0 * sigma_w) if base_points is None \
        else np.asarray(base_points, dtype=complex)
    if base.size != n_sym:
        raise ValueError(f"need {n_sym} base points, got {base.size}")
    rng = as_rng(seed)
    perms = np.empty((l, n_sym), dtype=int)
    perms[0] = np.arange(n_sym)
    for i in range(1, l):
        perms[i] = rng.permutation(n_sym)
    return PermutationConstellation(base, perms, bits, sigma_w, u_scale)


def fig9_preset(sigma_w: float = 1.0) -> PermutationConstellation:
    """Two sub-channels, 16-point grid, designed distance doubling.

    Sub-channel 2 relabels by m -> 7 m mod 16; the designated close pair
    (messages 0 and 1, adjacent on sub-channel 1) lands sqrt(10) grid steps
    apart on sub-channel 2, beating the designed factor u_scale = 2.
    """
    n_sym = 16
    base = square_grid(n_sym, 2.0 * sigma_w)
    perms = np.vstack([np.arange(n_sym), (7 * np.arange(n_sym)) % n_sym])
    return PermutationConstellation(base, perms, 4, sigma_w, 2.0,
                                    designated_pair=(0, 1))


def codeword(const: PermutationConstellation, m: int) -> np.ndarray:
    """The l symbols transmitted for message m, one per sub-channel."""
    if not 0 <= m < const.n_symbols:
        raise ValueError(f"message {m} out of range")
    return const.base[const.perms[:, m]]


@dataclass(frozen=True)
class CodewordPair:
    """Two codewords and their normalized differences delta."""

    d_a: np.ndarray
    d_b: np.ndarray
    deltas: np.ndarray


def make_codeword_pair(d_a, d_b, sigma_dprime_sq, sigma_N_sq) -> CodewordPair:
    """Normalize the raw difference by sqrt(sigma_dprime_sq / sigma_N_sq)."""
    d_a = np.asarray(d_a, dtype=complex)
    d_b = np.asarray(d_b, dtype=complex)
    if d_a.shape != d_b.shape:
        raise ValueError("codewords must have equal length")
    deltas = (d_a - d_b) / np.sqrt(sigma_dprime_sq / sigma_N_sq)
    return CodewordPair(d_a, d_b, deltas)


def message_pair(const: PermutationConstellation, m1: int, m2: int,
                 sigma_dprime_sq=1.0, sigma_N_sq=1.0) -> CodewordPair:
    return make_codeword_pair(codeword(const, m1), codeword(const, m2),
                              sigma_dprime_sq, sigma_N_sq)


def q_function(x):
    """Gaussian tail Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def pairwise_error_prob(pair: CodewordPair, gains, sigma_dprime_sq, sigma_N_sq,
                        worst_case: bool = False) -> float:
    """Q-tail pairwise error for the given sub-channel power gains.

    ``worst_case`` evaluates every sub-channel at the weakest gain.
    """
    g = np.asarray(gains, dtype=float)
    if g.shape != pair.deltas.shape:
        raise ValueError("one gain per sub-channel is required")
    if worst_case:
        g = np.full_like(g, g.min())
    arg_sq = sigma_dprime_sq / (2.0 * sigma_N_sq) * np.sum(g * np.abs(pair.deltas) ** 2)
    return float(q_function(np.sqrt(arg_sq)))


def pairwise_error_mc(d_a, d_b, gains, trials: int, seed=None):
    """Maximum-likelihood Monte Carlo estimate of the pairwise error.

    Simulates the detection-level model y_i = sqrt(g_i) d_i + w_i with unit
    complex-symbol noise (the scale at which the Q formula lives) and picks
    the nearer of the two candidate codewords. Returns (p_hat, se).
    """
    d_a = np.asarray(d_a, dtype=complex)
    d_b = np.asarray(d_b, dtype=complex)
    amp = np.sqrt(np.asarray(gains, dtype=float))
    rng = as_rng(seed)
    std = np.sqrt(0.5)  # per quadrature, E|w|^2 = 1
    w = rng.normal(0.0, std, (trials, d_a.size)) + 1j * rng.normal(0.0, std, (trials, d_a.size))
    y = amp * d_a + w
    err_a = np.sum(np.abs(y - amp * d_a) ** 2, axis=1)
    err_b = np.sum(np.abs(y - amp * d_b) ** 2, axis=1)
    p = float(np.mean(err_b < err_a))
    return p, float(np.sqrt(max(p * (1 - p), 1e-300) / trials))


def min_distance_pair(const: PermutationConstellation) -> tuple:
    """Message pair minimizing the total squared codeword distance."""
    best, best_d = None, np.inf
    for m1, m2 in itertools.combinations(range(const.n_symbols), 2):
        d = np.sum(np.abs(codeword(const, m1) - codeword(const, m2)) ** 2)
        if d < best_d:
            best, best_d = (m1, m2), d
    return best


def pair_distance_ratio(const: PermutationConstellation, pair=None) -> float:
    """min over sub-channels i >= 2 of distance_i(pair) / distance_1(pair)."""
    if pair is None:
        pair = const.designated_pair or min_distance_pair(const)
    if const.l < 2:
        raise ValueError("distance scaling needs at least two sub-channels")
    cw1, cw2 = codeword(const, pair[0]), codeword(const, pair[1])
    dist = np.abs(cw1 - cw2)
    if dist[0] == 0:
        raise ValueError("designated pair coincides on sub-channel 1")
    return float(np.min(dist[1:] / dist[0]))


def optimality(const: PermutationConstellation, nu_eve, snr_norm: float = 1.0,
               pair=None) -> float:
    """o = sum_i (nu_eve - |delta_i|^2) for the reference codeword pair.

    ``snr_norm`` = sigma_dprime_sq / sigma_N_sq scales the delta
    normalization; the default pair policy is the minimal-distance pair.
    """
    if pair is None:
        pair = min_distance_pair(const)
    deltas = (codeword(const, pair[0]) - codeword(const, pair[1])) / np.sqrt(snr_norm)
    return float(np.sum(nu_eve - np.abs(deltas) ** 2))


def rate_condition(deltas, nu_eve) -> float:
    """sum_i log2(nu_eve / |delta_i|^2); equals l * bits for matched designs."""
    mags = np.abs(np.asarray(deltas)) ** 2
    return float(np.sum(np.log2(nu_eve / mags)))


def worst_pair_product_distance(const: PermutationConstellation) -> float:
    """min over message pairs of prod_i |difference on sub-channel i|^2."""
    worst = np.inf
    for m1, m2 in itertools.combinations(range(const.n_symbols), 2):
        prod = np.prod(np.abs(codeword(const, m1) - codeword(const, m2)) ** 2)
        worst = min(worst, float(prod))
    return worst


@dataclass(frozen=True)
class ProductDistanceReport:
    eq189_lhs: float
    eq189_bound: float
    eq190_lhs_mean: float
    eq190_lhs_max: float
    eq190_bound: float
    mean_inverse_product: float
    n_perm_draws: int
    exhaustive: bool


def product_distance_stats(const: PermutationConstellation, n_samples=None,
                           seed=None) -> ProductDistanceReport:
    """Average inverse product distance over symbol pairs and permutations.

    ``n_samples = None`` enumerates all permutation assignments exhaustively
    (small constellations only); an integer draws that many uniform random
    assignments. The two bound normalizations follow the 2^(l*bits)
    bookkeeping: pair sums divided by 2^(l R)(2^(l R) - 1) against
    l^l R^l, and per-symbol sums divided by 2^(l R) against
    l^l R^l 2^(l R).
    """
    l, r, n_sym = const.l, const.bits, const.n_symbols
    base = const.base
    if n_samples is None:
        space = list(itertools.permutations(range(n_sym)))
        if len(space) ** (l - 1) > 200_000:
            raise ValueError("exhaustive enumeration too large; pass n_samples")
        assignments = itertools.product(space, repeat=l - 1)
        draws = [np.array([np.arange(n_sym), *a]) for a in assignments]
    else:
        rng = as_rng(seed)
        draws = []
        for _ in range(n_samples):
            rows = [np.arange(n_sym)] + [rng.permutation(n_sym) for _ in range(l - 1)]
            draws.append(np.array(rows))
    pair_sums = np.empty(len(draws))
    for t, perms in enumerate(draws):
        points = base[perms]  # (l, n_sym) symbols in message order
        diff = points[:, :, None] - points[:, None, :]
        prod = np.prod(np.abs(diff) ** 2, axis=0)
        off = ~np.eye(n_sym, dtype=bool)
        pair_sums[t] = np.sum(1.0 / prod[off])
    n_total = 2.0 ** (l * r)
    eq189 = float(pair_sums.mean() / (n_total * (n_total - 1.0)))
    eq190_draws = pair_sums / n_total
    n_pairs = n_sym * (n_sym - 1)
    return ProductDistanceReport(
        eq189_lhs=eq189,
        eq189_bound=float(l**l * r**l),
        eq190_lhs_mean=float(eq190_draws.mean()),
        eq190_lhs_max=float(eq190_draws.max()),
        eq190_bound=float(l**l * r**l * n_total),
        mean_inverse_product=float(pair_sums.mean() / n_pairs),
        n_perm_draws=len(draws),
        exhaustive=n_samples is None,
    )


def product_distance_constant(const: PermutationConstellation, gains,
                              sigma_dprime_sq=1.0, sigma_N_sq=1.0):
    """Largest c with prod |delta_i|^2 > c^l / l^(2 R l) over qualifying pairs.

    Pairs qualify when their Q-argument is below 1 (the weak-separation
    regime). Returns None when no pair qualifies.
    """
    l, r = const.l, const.bits
    g = np.asarray(gains, dtype=float)
    best = None
    for m1, m2 in itertools.combinations(range(const.n_symbols), 2):
        pair = message_pair(const, m1, m2, sigma_dprime_sq, sigma_N_sq)
        arg_sq = sigma_dprime_sq / (2.0 * sigma_N_sq) * np.sum(g * np.abs(pair.deltas) ** 2)
        if arg_sq < 1.0:
            prod = float(np.prod(np.abs(pair.deltas) ** 2))
            c_pair = prod ** (1.0 / l) * l ** (2 * r)
            best = c_pair if best is None else min(best, c_pair)
    return best


@dataclass(frozen=True)
class DeltaOptimization:
    values: np.ndarray
    valid: np.ndarray
    best_j: int
    best_value: float


def delta_optimization(deltas_abs, bits: int) -> DeltaOptimization:
    """Prefix tradeoff j (2^(bits*l) prod_{i<=j} |delta_i|^2)^(1/j)
    - sum_{i<=j} |delta_i|^2, evaluated at the largest admissible prefix.

    Input magnitudes must be sorted nondecreasing. A prefix length j is
    admissible when |delta_j|^(2j) <= prod_{i<=j} |delta_i|^2 <=
    |delta_{j+1}|^(2j) (the last bound is vacuous at j = l); the reported
    maximizer is the largest such j. With all magnitudes equal, j = l is
    admissible and the value collapses to l (2^bits - 1) |delta|^2.
    """
    mags = np.asarray(deltas_abs, dtype=float)
    if mags.size == 0:
        raise ValueError("deltas must be non-empty")
    if np.any(mags <= 0):
        raise ValueError("delta magnitudes must be positive")
    if np.any(np.diff(mags) < 0):
        raise ValueError("delta magnitudes must be sorted nondecreasing")
    l = mags.size
    sq = mags**2
    scale = 2.0 ** (bits * l)
    values = np.empty(l)
    valid = np.zeros(l, dtype=bool)
    for j in range(1, l + 1):
        prefix = sq[:j]
        prod = float(np.prod(prefix))
        values[j - 1] = j * (scale * prod) ** (1.0 / j) - float(prefix.sum())
        upper = np.inf if j == l else float(sq[j] ** j)
        valid[j - 1] = sq[j - 1] ** j <= prod * (1 + 1e-12) and prod <= upper * (1 + 1e-12)
    if not valid.any():
        raise ValueError("no prefix satisfies the validity condition")
    idx = int(np.flatnonzero(valid)[-1])
    return DeltaOptimization(values, valid, idx + 1, float(values[idx]))


def equal_delta_value(l: int, bits: int, delta_abs) -> float:
    """Closed form l (2^bits - 1) |delta|^2 of the equal-magnitude case."""
    return float(l * (2.0**bits - 1.0) * np.asarray(delta_abs, dtype=float) ** 2)
