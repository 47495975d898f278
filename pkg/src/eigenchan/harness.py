"""Scenario harness: JSON config in, deterministic CSV + summary out.

Reproducibility contract: every Monte Carlo stage derives its generator
from the master seed and a fixed stage/trial index through
``numpy.random.default_rng([seed, stage, trial])``, and accumulation is
order independent, so a re-run with the same seed produces byte-identical
CSV regardless of worker count.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import allocation, decoding, partial_csi, permutation_code, precoding
from .channel import channel_from_config
from .singular_layer import svd_of_channel

__all__ = [
    "ConfigError",
    "RunReport",
    "SCENARIOS",
    "load_config",
    "validate_config",
    "config_hash",
    "run",
    "sweep",
    "export_constellation",
    "write_csv",
]

TOOL_VERSION = "0.1.0"

SCENARIOS = (
    "eigen_capacity",
    "allocation_sweep",
    "partial_csi",
    "precoding_compare",
    "decoder_mmse",
    "permutation_code",
)

DEFAULT_TRIALS = {
    "eigen_capacity": 1,
    "allocation_sweep": 1,
    "partial_csi": 2000,
    "precoding_compare": 20000,
    "decoder_mmse": 1,
    "permutation_code": 100000,
}


class ConfigError(ValueError):
    """The configuration violates the schema."""


@dataclass
class RunReport:
    scenario: str
    columns: list
    rows: list
    summary: str
    metadata: dict = field(default_factory=dict)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def validate_config(cfg: dict) -> dict:
    _require(isinstance(cfg, dict), "config must be an object")
    scenario = cfg.get("scenario")
    _require(scenario in SCENARIOS,
             f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if "seed" in cfg:
        _require(isinstance(cfg["seed"], int) and 0 <= cfg["seed"] < 2**64,
                 "seed must be a 64-bit unsigned integer")
    if "trials" in cfg:
        _require(isinstance(cfg["trials"], int) and cfg["trials"] >= 1,
                 "trials must be a positive integer")
    params = cfg.get("params", {})
    _require(isinstance(params, dict), "params must be an object")
    if "channel" in cfg:
        ch = cfg["channel"]
        _require(isinstance(ch, dict), "channel must be an object")
        for key in ("n", "transmittances", "sigma_N_sq", "nu_eve"):
            _require(key in ch, f"channel config missing key '{key}'")
    needs_channel = scenario == "allocation_sweep"
    if needs_channel:
        _require("channel" in cfg, f"scenario '{scenario}' requires a channel block")
    if scenario == "eigen_capacity":
        _require("channel" in cfg or "matrix" in params,
                 "eigen_capacity needs a channel block or params.matrix")
    return cfg


def _complex_matrix(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _gaussian_matrix(rng, k_out, k_in) -> np.ndarray:
    # unit mean-square entries: E|F_ij|^2 = 1
    return (rng.normal(size=(k_out, k_in))
            + 1j * rng.normal(size=(k_out, k_in))) / np.sqrt(2.0)


def _layer_matrix(cfg, ch):
    spec = cfg.get("params", {}).get("layer", "from_channel")
    if spec == "from_channel":
        if ch is None:
            raise ConfigError("layer 'from_channel' requires a channel block")
        return np.diag(ch.good_ft)
    if isinstance(spec, dict) and "matrix" in spec:
        return _complex_matrix(spec["matrix"])
    if isinstance(spec, dict) and spec.get("draw") == "gaussian":
        rng = np.random.default_rng(spec.get("seed", 0))
        return _gaussian_matrix(rng, int(spec["k_out"]), int(spec["k_in"]))
    raise ConfigError(f"unrecognized layer spec {spec!r}")


def _map_trials(fn, n_trials, workers):
    """Index-addressed trial map; output order never depends on scheduling."""
    out = [None] * n_trials
    if workers <= 1:
        for t in range(n_trials):
            out[t] = fn(t)
        return out
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        for t, val in zip(range(n_trials), pool.map(fn, range(n_trials))):
            out[t] = val
    return out


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def _run_eigen_capacity(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    ch = channel_from_config(cfg["channel"]) if "channel" in cfg else None
    if "matrix" in params:
        matrix = _complex_matrix(params["matrix"])
    else:
        matrix = _layer_matrix(cfg, ch)
    layer = svd_of_channel(matrix)
    sigma_N_sq = float(params.get("sigma_N_sq",
                                  ch.sigma_N_sq if ch is not None else 1.0))
    sigma_w_sq = float(params.get("sigma_w_sq", 1.0))
    sigma_gamma_sq = float(params.get("sigma_gamma_sq", 0.0))
    per_stream = sigma_w_sq / layer.n_min
    c_eigen = allocation.capacity_eigen_sum(layer, per_stream, sigma_N_sq, sigma_gamma_sq)
    c_logdet = allocation.capacity_log_det(layer, per_stream, sigma_N_sq, sigma_gamma_sq)
    rel_gap = abs(c_eigen - c_logdet) / max(abs(c_logdet), 1e-300)
    rows = [{
        "run_id": 0,
        "n_min": layer.n_min,
        "snr": sigma_w_sq / sigma_N_sq,
        "c_eigen_bits": c_eigen,
        "c_logdet_bits": c_logdet,
        "rel_gap": rel_gap,
    }]
    cols = ["run_id", "n_min", "snr", "c_eigen_bits", "c_logdet_bits", "rel_gap"]
    summary = (f"eigen capacity: n_min={layer.n_min} "
               f"C={c_eigen:.6f} bits (log-det gap {rel_gap:.3e})")
    return cols, rows, summary


def _run_allocation_sweep(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    base = dict(cfg["channel"])
    grid = params.get("nu_eve_grid", [base["nu_eve"]])
    if not isinstance(grid, (list, tuple)) or not grid:
        raise ConfigError("nu_eve_grid must be a non-empty list")
    c = float(params.get("c", 1.0))
    nu_kappa = float(params.get("nu_kappa", 0.0))
    rows = []
    for run_id, nu_eve in enumerate(grid):
        ch_cfg = dict(base, nu_eve=float(nu_eve))
        ch = channel_from_config(ch_cfg)
        layer = svd_of_channel(_layer_matrix(cfg, ch))
        plan = allocation.allocate(layer, ch, c=c, nu_kappa=nu_kappa)
        rows.append(allocation.report_row(run_id, plan, layer, ch))
    cols = ["run_id", "n_min", "l", "nu_eve", "sigma_N_sq", "c", "mu", "nu_min",
            "nu_prime_min", "pi", "sigma_dprime", "C_eigen_bits", "C_sub_bits"]
    summary = f"allocation sweep over {len(rows)} nu_eve points"
    return cols, rows, summary


def _run_partial_csi(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    k_in = int(params.get("k_in", 2))
    k_out = int(params.get("k_out", 2))
    if k_in > k_out:
        raise ConfigError("k_in must not exceed k_out")
    n_min = min(k_in, k_out)
    sigma_N_sq = float(params.get("sigma_N_sq", 1.0))
    perturbation = float(params.get("perturbation", 1.0))
    if "snr_grid" in params:
        grid = params["snr_grid"]
    else:
        grid = [params.get("snr", 1.0)]
    if not isinstance(grid, (list, tuple)) or not grid:
        raise ConfigError("snr_grid must be a non-empty list")
    base_rng = np.random.default_rng([seed, 1])
    base = _gaussian_matrix(base_rng, k_out, k_in)

    def draw(t):
        rng = np.random.default_rng([seed, 2, t])
        e = (rng.normal(size=(k_out, k_in)) + 1j * rng.normal(size=(k_out, k_in)))
        f = base + perturbation * e / np.sqrt(2.0)
        return np.linalg.eigvalsh(f @ f.conj().T)[-n_min:], np.real(np.trace(f @ f.conj().T))

    # common random draws across the SNR grid keep comparisons smooth
    drawn = _map_trials(draw, trials, workers)
    lam_sq = np.clip(np.stack([d[0] for d in drawn]), 0.0, None)
    traces = np.array([d[1] for d in drawn])
    rows = []
    for snr in grid:
        sigma_prime_sq = float(snr) * sigma_N_sq
        a = sigma_prime_sq / (k_in * n_min * sigma_N_sq)
        per_draw = np.sum(np.log2(1.0 + a * lam_sq), axis=1)
        rhs_draw = n_min * np.log2(1.0 + a * lam_sq.mean(axis=1))
        cap_mc = float(per_draw.mean())
        se = float(per_draw.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
        cap_closed = partial_csi.low_snr_partial_capacity(
            k_in, k_out, sigma_prime_sq, sigma_N_sq, trace_ff=float(traces.mean()))
        rows.append({
            "snr": float(snr),
            "lhs_jensen": cap_mc,
            "rhs_jensen": float(rhs_draw.mean()),
            "cap_mc": cap_mc,
            "cap_closed": cap_closed,
            "se": se,
        })
    cols = ["snr", "lhs_jensen", "rhs_jensen", "cap_mc", "cap_closed", "se"]
    summary = f"partial CSI: {trials} draws, {len(rows)} SNR points"
    return cols, rows, summary


def _run_precoding_compare(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    sigma_w_sq = float(params.get("sigma_w_sq", 1.0))
    sigma_N_sq = float(params.get("sigma_N_sq", 0.01))
    sigma_w = np.sqrt(sigma_w_sq)
    const = precoding.make_constellation(
        precoding.square_grid(4, 2.0 * sigma_w), sigma_w)
    period = const.lattice_period
    if "sigma_gamma_grid" in params:
        grid = [float(g) for g in params["sigma_gamma_grid"]]
    else:
        factors = params.get("sigma_gamma_factors", [1.0, 10.0])
        grid = [float(f) * period for f in factors]
    if not grid:
        raise ConfigError("sigma_gamma grid must be non-empty")
    alpha = precoding.alpha_mmse(sigma_w_sq, sigma_N_sq)
    rows = []
    for gi, gamma_std in enumerate(grid):
        rng = np.random.default_rng([seed, 3, gi])
        m = rng.integers(0, const.n_base, trials)
        phi = const.base_points[m]
        gamma = rng.normal(0.0, gamma_std, trials) + 1j * rng.normal(0.0, gamma_std, trials)
        naive = precoding.naive_precode(phi, gamma)
        sia = precoding.sia_precode(phi, gamma, alpha, const)
        rows.append({
            "sigma_gamma": gamma_std,
            "lattice_period": period,
            "mean_energy_naive": float(np.mean(naive.energy)),
            "mean_energy_sia": float(np.mean(sia.energy)),
            "max_energy_sia": float(np.max(sia.energy)),
            "sia_energy_bound": 2.0 * (period / 2.0) ** 2,
        })
    cols = ["sigma_gamma", "lattice_period", "mean_energy_naive",
            "mean_energy_sia", "max_energy_sia", "sia_energy_bound"]
    summary = f"precoding comparison over {len(rows)} interference levels, {trials} draws each"
    return cols, rows, summary


def _run_decoder_mmse(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    users = params.get("users")
    if isinstance(users, dict) and users.get("draw") == "gaussian":
        rng = np.random.default_rng(users.get("seed", seed))
        n_users = int(users["n_users"])
        k_out = int(users["k_out"])
        vectors = _gaussian_matrix(rng, n_users, k_out)
        variances = np.full(n_users, float(users.get("variance", 1.0)))
    elif isinstance(users, list) and users:
        vectors = np.stack([
            np.asarray(u["vector"], dtype=float)[:, 0]
            + 1j * np.asarray(u["vector"], dtype=float)[:, 1]
            for u in users
        ])
        variances = np.array([float(u["variance"]) for u in users])
    else:
        raise ConfigError("decoder_mmse requires params.users")
    sigma_N_sq = float(params.get("sigma_N_sq", 1.0))
    sigma_gamma_sq = float(params.get("sigma_gamma_sq", 0.0))
    order = params.get("order")
    chain = decoding.chain_rule_rate(vectors, variances,
                                     sigma_N_sq + sigma_gamma_sq, order)
    rows = []
    for position, user in enumerate(chain.order):
        rate = float(chain.per_user_bits[position])
        snir_val = 2.0**rate - 1.0
        mse = variances[user] / (1.0 + snir_val)
        rows.append({
            "user": int(user),
            "snir_db": 10.0 * np.log10(snir_val) if snir_val > 0 else -np.inf,
            "mse": float(mse),
            "rate_bits": rate,
            "order_index": position,
        })
    cols = ["user", "snir_db", "mse", "rate_bits", "order_index"]
    total = chain.total_bits
    joint = decoding.joint_log_det(vectors, variances, sigma_N_sq + sigma_gamma_sq)
    summary = (f"successive MMSE decoding of {len(rows)} users: "
               f"sum rate {total:.6f} bits (joint log-det {joint:.6f})")
    return cols, rows, summary


def _permutation_constellation(params, seed):
    if params.get("preset") == "fig9":
        return permutation_code.fig9_preset(float(params.get("sigma_w", 1.0)))
    return permutation_code.build_constellation(
        int(params.get("l", 2)),
        int(params.get("bits", 2)),
        sigma_w=float(params.get("sigma_w", 1.0)),
        u_scale=float(params.get("u_scale", 2.0)),
        seed=[seed, 4],
    )


def _run_permutation_code(cfg, seed, trials, workers):
    params = cfg.get("params", {})
    const = _permutation_constellation(params, seed)
    sigma_dprime_sq = float(params.get("sigma_dprime_sq", 1.0))
    sigma_N_sq = float(params.get("sigma_N_sq", 1.0))
    gains = np.asarray(params.get("gains", np.ones(const.l)), dtype=float)
    if gains.shape != (const.l,):
        raise ConfigError("gains must list one power gain per sub-channel")
    pair_idx = permutation_code.min_distance_pair(const)
    pair = permutation_code.message_pair(const, *pair_idx, sigma_dprime_sq, sigma_N_sq)
    pep = permutation_code.pairwise_error_prob(pair, gains, sigma_dprime_sq, sigma_N_sq)
    p_mc, se_mc = permutation_code.pairwise_error_mc(
        pair.d_a, pair.d_b, gains, trials, seed=[seed, 5])
    nu_eve = float(params.get("nu_eve", 2.0 * np.max(np.abs(pair.deltas) ** 2)))
    o_val = permutation_code.optimality(const, nu_eve,
                                        snr_norm=sigma_dprime_sq / sigma_N_sq)
    perm_samples = int(params.get("perm_samples", 200))
    stats = permutation_code.product_distance_stats(const, perm_samples,
                                                    seed=[seed, 6])
    repeated = permutation_code.PermutationConstellation(
        const.base, np.tile(np.arange(const.n_symbols), (const.l, 1)),
        const.bits, const.sigma_w, const.u_scale)
    rows = [
        {"metric": "pep_formula_min_pair", "value": pep, "se": 0.0, "trials": 0},
        {"metric": "pep_mc_min_pair", "value": p_mc, "se": se_mc, "trials": trials},
        {"metric": "optimality_o", "value": o_val, "se": 0.0, "trials": 0},
        {"metric": "nu_eve", "value": nu_eve, "se": 0.0, "trials": 0},
        {"metric": "eq189_lhs", "value": stats.eq189_lhs, "se": 0.0,
         "trials": stats.n_perm_draws},
        {"metric": "eq189_bound", "value": stats.eq189_bound, "se": 0.0, "trials": 0},
        {"metric": "eq190_lhs_mean", "value": stats.eq190_lhs_mean, "se": 0.0,
         "trials": stats.n_perm_draws},
        {"metric": "eq190_bound", "value": stats.eq190_bound, "se": 0.0, "trials": 0},
        {"metric": "worst_product_permuted",
         "value": permutation_code.worst_pair_product_distance(const),
         "se": 0.0, "trials": 0},
        {"metric": "worst_product_repeated",
         "value": permutation_code.worst_pair_product_distance(repeated),
         "se": 0.0, "trials": 0},
    ]
    if const.l >= 2:
        rows.append({"metric": "pair_distance_ratio",
                     "value": permutation_code.pair_distance_ratio(const),
                     "se": 0.0, "trials": 0})
    cols = ["metric", "value", "se", "trials"]
    summary = (f"permutation code l={const.l} bits={const.bits}: "
               f"PEP formula {pep:.6g} vs MC {p_mc:.6g} (+/- {se_mc:.2g})")
    return cols, rows, summary


_RUNNERS = {
    "eigen_capacity": _run_eigen_capacity,
    "allocation_sweep": _run_allocation_sweep,
    "partial_csi": _run_partial_csi,
    "precoding_compare": _run_precoding_compare,
    "decoder_mmse": _run_decoder_mmse,
    "permutation_code": _run_permutation_code,
}


def run(cfg: dict, seed=None, trials=None, workers: int = 1) -> RunReport:
    """Execute one scenario with optional seed/trials overrides."""
    cfg = validate_config(cfg)
    scenario = cfg["scenario"]
    seed = cfg.get("seed", 0) if seed is None else seed
    trials = trials if trials is not None else cfg.get(
        "trials", DEFAULT_TRIALS[scenario])
    cols, rows, summary = _RUNNERS[scenario](cfg, seed, trials, workers)
    metadata = {
        "scenario": scenario,
        "seed": seed,
        "trials": trials,
        "config_hash": config_hash(cfg),
        "tool_version": TOOL_VERSION,
    }
    text = (f"{summary}\n"
            f"seed={seed} trials={trials} config_hash={metadata['config_hash']} "
            f"version={TOOL_VERSION}")
    return RunReport(scenario, cols, rows, text, metadata)


def _resolve_path(cfg: dict, dotted: str):
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"unknown sweep parameter '{dotted}'")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown sweep parameter '{dotted}'")
    return node, parts[-1]


def sweep(cfg: dict, param: str, grid, seed=None, trials=None,
          workers: int = 1) -> RunReport:
    """Re-run the scenario once per grid value of a dotted config path."""
    if not isinstance(grid, (list, tuple)) or len(grid) == 0:
        raise ConfigError("sweep grid must be a non-empty list")
    cfg = validate_config(cfg)
    rows = []
    columns = None
    for value in grid:
        point = json.loads(json.dumps(cfg))  # deep copy via JSON round-trip
        node, leaf = _resolve_path(point, param)
        node[leaf] = value
        report = run(point, seed=seed, trials=trials, workers=workers)
        if columns is None:
            columns = ["sweep_value"] + report.columns
        for row in report.rows:
            rows.append({"sweep_value": value, **row})
    metadata = {
        "scenario": cfg["scenario"],
        "sweep_param": param,
        "grid": list(grid),
        "config_hash": config_hash(cfg),
        "tool_version": TOOL_VERSION,
    }
    summary = (f"sweep of {param} over {len(grid)} values "
               f"({cfg['scenario']}), config_hash={metadata['config_hash']}")
    return RunReport(cfg["scenario"], columns, rows, summary, metadata)


def export_constellation(cfg: dict, seed=None) -> RunReport:
    """Emit a plottable constellation table (lattice or permutation layout)."""
    params = cfg.get("params", {})
    kind = params.get("kind", "lattice")
    seed = cfg.get("seed", 0) if seed is None else seed
    if kind == "lattice":
        sigma_w = float(params.get("sigma_w", 1.0))
        base = params.get("base_points")
        pts = (precoding.square_grid(int(params.get("n_base", 4)), 2.0 * sigma_w)
               if base is None else
               np.asarray(base, dtype=float)[:, 0] + 1j * np.asarray(base, dtype=float)[:, 1])
        const = precoding.make_constellation(
            pts, sigma_w,
            lattice_period=params.get("lattice_period"),
            domain_halfwidth=params.get("domain_halfwidth"))
        rows = precoding.constellation_rows(const)
        cols = ["class_kx", "class_kp", "base_index", "x", "p"]
        summary = (f"lattice constellation: {const.n_base} base points, "
                   f"period {const.lattice_period}, {len(rows)} replicas")
    elif kind == "permutation":
        const = _permutation_constellation(params, seed)
        rows = []
        for i in range(const.l):
            points = const.subchannel_points(i)
            for m, pt in enumerate(points):
                rows.append({"subchannel": i, "symbol_index": m,
                             "x": pt.real, "p": pt.imag})
        cols = ["subchannel", "symbol_index", "x", "p"]
        summary = (f"permutation constellation: l={const.l} "
                   f"bits={const.bits}, {len(rows)} labeled points")
    else:
        raise ConfigError(f"unknown constellation kind {kind!r}")
    return RunReport("export-constellation", cols, rows, summary,
                     {"kind": kind, "config_hash": config_hash(cfg),
                      "tool_version": TOOL_VERSION})


def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(report: RunReport, path) -> None:
    """RFC 4180 output: CRLF lines, header row, floats at 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_format_cell(row[c]) for c in report.columns])
