"""Ground-truth simulator: network realizations, association, SINR, estimators.

Each trial derives its own random stream from (master_seed, trial_index)
through a counter-based Philox generator, so trials are reproducible and
independent of scheduling: serial and parallel execution produce bit-identical
aggregates. Estimators reduce per-trial arrays in trial order after all
workers return.

Within a trial, common random numbers are used across the whole SINR-threshold
grid: interferer beam gains and fading are drawn once per realization, never
per threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geometry
from .curves import CoverageCurve
from .model import LinkState, NetworkConfig

_MASK64 = (1 << 64) - 1

# Association candidates in tie-break order: lower tier first, LOS before NLOS.
_CLASSES = ((1, LinkState.LOS), (1, LinkState.NLOS), (2, LinkState.LOS), (2, LinkState.NLOS))


def splitmix64(seed: int, index: int) -> int:
    """Mix a master seed with a stream index into an independent 64-bit seed."""
    z = (seed + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream: Philox keyed on (seed, trial index)."""
    key = np.array([master_seed & _MASK64, trial_index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class TrialResult:
    """Outcome of one realization; None serving tier means no station at all."""

    serving_tier: int | None
    serving_state: LinkState | None
    serving_distance: float
    sinr: float
    nearest: dict  # (tier, state) -> distance or nan


@dataclass
class TrialBatch:
    """Struct-of-arrays over trials; NaN marks absent values."""

    sinr: np.ndarray
    serving_tier: np.ndarray  # 0 = no coverage
    serving_state: np.ndarray  # -1 = none, else LinkState value
    serving_distance: np.ndarray
    nearest: np.ndarray  # (n, 4) ordered as _CLASSES

    def __len__(self):
        return len(self.sinr)

    @classmethod
    def concatenate(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                     ("sinr", "serving_tier", "serving_state", "serving_distance", "nearest")))


def evaluate_trial(cfg: NetworkConfig, pattern: geometry.PointPattern, rng: np.random.Generator):
    """Association and SINR for one already-sampled realization.

    The serving station is the maximizer of long-term average received power
    P_k M_k M_ue r^(-alpha_s); it suffices to compare the nearest station of
    each (tier, state) class because average power is monotone in distance
    within a class. The serving link uses the aligned gain M_k * M_ue and a
    fresh fading draw; every other station contributes with an independently
    drawn beam gain and its own state's fading law.
    """
    n = len(pattern)
    nearest = np.full(4, np.nan)
    if n == 0:
        return np.nan, 0, -1, np.nan, nearest

    dist = pattern.distances()
    best_idx = -1
    best_power = -np.inf
    best_class = -1
    for ci, (tier, state) in enumerate(_CLASSES):
        mask = (pattern.tier == tier) & (pattern.is_los == (state == LinkState.LOS))
        if not np.any(mask):
            continue
        sub = np.nonzero(mask)[0]
        local = sub[np.argmin(dist[sub])]
        r = dist[local]
        nearest[ci] = r
        power = cfg.tx_power(tier) * cfg.main_gain(tier) * cfg.main_ue * r ** (-cfg.alpha(state))
        if power > best_power:  # strict: earlier classes win ties
            best_power = power
            best_idx = local
            best_class = ci
    serving_tier, serving_state = _CLASSES[best_class]
    x = dist[best_idx]

    h0 = rng.gamma(cfg.nu(serving_state), 1.0 / cfg.nu(serving_state))
    signal = best_power * h0

    # Interferer gains: one pmf draw per station (the serving draw is unused).
    gain = np.empty(n)
    u = rng.random(n)
    for tier in (1, 2):
        pmf = cfg.directivity(tier)
        sel = pattern.tier == tier
        idx = np.searchsorted(np.cumsum(pmf.probs), u[sel], side="right")
        gain[sel] = np.asarray(pmf.gains)[np.minimum(idx, 3)]
    nu_arr = np.where(pattern.is_los, cfg.nu_los, cfg.nu_nlos)
    h = rng.gamma(nu_arr, 1.0 / nu_arr)
    alpha_arr = np.where(pattern.is_los, cfg.alpha_los, cfg.alpha_nlos)
    p_arr = np.where(pattern.tier == 1, cfg.p_macro, cfg.p_small)
    contrib = p_arr * gain * h * dist**-alpha_arr
    interference = float(np.sum(contrib)) - float(contrib[best_idx])

    sinr = signal / (cfg.noise_power + interference)
    return float(sinr), serving_tier, int(serving_state), float(x), nearest


def run_single_trial(cfg: NetworkConfig, window_radius: float, rng: np.random.Generator) -> TrialResult:
    """Sample one network and evaluate it; the spec'd single-trial entry point."""
    pattern = geometry.sample_network(cfg, window_radius, rng)
    sinr, tier, state, x, nearest = evaluate_trial(cfg, pattern, rng)
    return TrialResult(
        serving_tier=tier if tier else None,
        serving_state=LinkState(state) if state >= 0 else None,
        serving_distance=x,
        sinr=sinr,
        nearest={cls: nearest[i] for i, cls in enumerate(_CLASSES)},
    )


def _run_chunk(args):
    cfg, window, master_seed, start, count = args
    sinr = np.empty(count)
    tier = np.empty(count, dtype=np.int8)
    state = np.empty(count, dtype=np.int8)
    sdist = np.empty(count)
    nearest = np.empty((count, 4))
    for i in range(count):
        rng = trial_rng(master_seed, start + i)
        pattern = geometry.sample_network(cfg, window, rng)
        sinr[i], tier[i], state[i], sdist[i], nearest[i] = evaluate_trial(cfg, pattern, rng)
    return start, TrialBatch(sinr, tier, state, sdist, nearest)


def run_trials(
    cfg: NetworkConfig,
    n_trials: int,
    master_seed: int,
    window_radius: float | None = None,
    workers: int = 1,
) -> TrialBatch:
    """Run independent trials; bit-identical result for any worker count."""
    if n_trials < 1:
        raise ValueError("need at least one trial")
    window = window_radius if window_radius is not None else geometry.default_window_radius(cfg)
    if workers <= 1:
        return _run_chunk((cfg, window, master_seed, 0, n_trials))[1]
    chunk = max(64, math.ceil(n_trials / (4 * workers)))
    jobs = [
        (cfg, window, master_seed, start, min(chunk, n_trials - start))
        for start in range(0, n_trials, chunk)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = sorted(pool.map(_run_chunk, jobs), key=lambda p: p[0])
    return TrialBatch.concatenate([p[1] for p in parts])


def estimate_coverage(
    cfg: NetworkConfig,
    tau_db_grid,
    n_trials: int,
    master_seed: int,
    window_radius: float | None = None,
    workers: int = 1,
    batch: TrialBatch | None = None,
) -> CoverageCurve:
    """Empirical coverage over a threshold grid, one common trial set.

    No-station trials count as non-covered at every threshold. Pass a
    pre-computed `batch` to reuse trials across estimators.
    """
    tau_db = np.asarray(tau_db_grid, dtype=float)
    if batch is None:
        batch = run_trials(cfg, n_trials, master_seed, window_radius, workers)
    tau_lin = 10.0 ** (tau_db / 10.0)
    sinr = np.where(np.isnan(batch.sinr), -np.inf, batch.sinr)
    covered = sinr[None, :] > tau_lin[:, None]
    p = covered.mean(axis=1)
    stderr = np.sqrt(p * (1.0 - p) / len(batch))
    return CoverageCurve(
        sweep_variable="tau",
        values=tau_db,
        probabilities=p,
        approach="montecarlo",
        stderr=stderr,
        fingerprint=cfg.fingerprint(),
        metadata={
            "trials": len(batch),
            "master_seed": master_seed,
            "window_radius": window_radius or geometry.default_window_radius(cfg),
            "workers": workers,
        },
    )


def dump_trials(batch: TrialBatch, path) -> int:
    """Write one debug record per trial; returns the record count."""
    lines = ["trial_index,serving_tier,serving_state,serving_distance_m,sinr_db"]
    for i in range(len(batch)):
        tier = int(batch.serving_tier[i])
        if tier == 0:
            lines.append(f"{i},0,none,,")
            continue
        state = LinkState(int(batch.serving_state[i])).name.lower()
        sinr_db = 10.0 * math.log10(batch.sinr[i])
        lines.append(f"{i},{tier},{state},{float(batch.serving_distance[i])!r},{sinr_db!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(batch)


@dataclass
class AssociationEstimate:
    prob: dict  # (tier, state) -> frequency
    stderr: dict
    no_coverage: float
    trials: int


def estimate_association(
    cfg: NetworkConfig,
    n_trials: int,
    master_seed: int,
    window_radius: float | None = None,
    workers: int = 1,
    batch: TrialBatch | None = None,
) -> AssociationEstimate:
    """Frequencies of (serving tier, serving state); sums to 1 minus the
    no-coverage fraction."""
    if batch is None:
        batch = run_trials(cfg, n_trials, master_seed, window_radius, workers)
    n = len(batch)
    prob = {}
    stderr = {}
    for tier, state in _CLASSES:
        hit = (batch.serving_tier == tier) & (batch.serving_state == int(state))
        p = float(np.mean(hit))
        prob[(tier, state)] = p
        stderr[(tier, state)] = math.sqrt(p * (1.0 - p) / n)
    return AssociationEstimate(
        prob=prob,
        stderr=stderr,
        no_coverage=float(np.mean(batch.serving_tier == 0)),
        trials=n,
    )


def estimate_nearest_distance_hist(
    cfg: NetworkConfig,
    tier: int,
    state: LinkState,
    n_trials: int,
    bin_width: float,
    master_seed: int,
    window_radius: float | None = None,
    workers: int = 1,
    batch: TrialBatch | None = None,
):
    """Normalized histogram of the nearest (tier, state) station distance,
    conditional on one existing; returns (bin_edges, density)."""
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    if batch is None:
        batch = run_trials(cfg, n_trials, master_seed, window_radius, workers)
    ci = _CLASSES.index((tier, state))
    values = batch.nearest[:, ci]
    values = values[~np.isnan(values)]
    if len(values) == 0:
        raise ValueError("no trial produced a station of the requested class")
    edges = np.arange(0.0, values.max() + bin_width, bin_width)
    counts, edges = np.histogram(values, bins=edges)
    density = counts / (len(values) * bin_width)
    return edges, density
