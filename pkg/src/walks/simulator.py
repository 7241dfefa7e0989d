"""
LongJump - Walk Simulation

Seeded Monte Carlo for X_{k+1} = X_k xi_{k+1}. Walkers run in fixed-size
blocks; block b draws from Philox keyed by SeedSequence([seed, b]), so
outputs depend on (seed, walkers) only, never on the thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.config.loader import ConfigLoader
from src.groups.elements import Element
from src.measures.sampler import MeasureSampler
from src.models.results import CollisionEstimate, ExitTimeStats, OvershootEstimate, TrajectoryStats
from src.utils.logger import LongJumpLogger


@dataclass
class WalkConfig:
    """
    Monte Carlo settings.

    Attributes:
        seed: Root seed (64-bit)
        walkers: Number of independent trajectories
        n: Horizon
        start: Starting element (identity when None)
        threads: Worker threads over blocks
    """
    seed: int
    walkers: int
    n: int = 0
    start: Optional[Element] = None
    threads: int = 1

    def __post_init__(self):
        if self.walkers < 1:
            raise ValueError(f"walkers must be positive, got {self.walkers}")
        if self.n < 0:
            raise ValueError(f"horizon must be non-negative, got {self.n}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator for one walker block."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def _blocks(walkers: int) -> List[Tuple[int, int]]:
    size = int(ConfigLoader.get_instance().get("walks", "block_size", 1024))
    return [(b, min(size, walkers - start)) for b, start in enumerate(range(0, walkers, size))]


def _map_blocks(cfg: WalkConfig, work: Callable[[int, int], tuple]) -> List[tuple]:
    """Run work(block, size) for every block; results in block order."""
    blocks = _blocks(cfg.walkers)
    if cfg.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda bs: work(*bs), blocks))
    return [work(b, size) for b, size in blocks]


def _start(measure, cfg: WalkConfig) -> Element:
    group = measure.group
    return group.identity if cfg.start is None else group.validate(cfg.start)


# ============================================================================
# Trajectories
# ============================================================================

def _run_increments(measure, sampler: MeasureSampler, n: int, size: int, rng, geom=None):
    """Relative positions start^-1 X_n, and the running max of their norm when geom is given."""
    group = measure.group
    rel = np.tile(np.asarray(group.identity, dtype=np.int64), (size, 1))
    running = np.zeros(size)
    for _ in range(n):
        rel = group.batch_mul(rel, sampler.sample_batch(size, rng))
        if geom is not None:
            np.maximum(running, geom.norm_g2_batch(rel), out=running)
    return rel, running


def _control_table(sups: np.ndarray, n: int, w_star: float, eps_values: Sequence[float]) -> dict:
    """For each eps the smallest gamma with P(sup >= gamma n^w_*) <= eps."""
    if n == 0:
        return {float(eps): 0.0 for eps in eps_values}
    ordered = np.sort(sups)
    m = ordered.size
    scale = n ** w_star
    table = {}
    for eps in eps_values:
        allowed = int(math.floor(eps * m))
        if allowed >= m:
            table[float(eps)] = 0.0
            continue
        threshold = np.nextafter(ordered[m - allowed - 1], np.inf)
        table[float(eps)] = float(threshold / scale)
    return table


def simulate(measure, geom, cfg: WalkConfig) -> TrajectoryStats:
    """
    Run cfg.walkers trajectories of length cfg.n.

    Returns:
        TrajectoryStats with endpoints, quantiles of sup_k ||start^-1 X_k||_2
        and the control table
    """
    logger = LongJumpLogger.get_logger()
    defaults = ConfigLoader.get_instance().get_walk_defaults()
    sampler = MeasureSampler(measure)
    start = _start(measure, cfg)

    def work(block: int, size: int):
        rel, running = _run_increments(measure, sampler, cfg.n, size, block_rng(cfg.seed, block), geom)
        return rel, running

    logger.debug(f"Step 1: simulating {cfg.walkers} walkers for {cfg.n} steps")
    results = _map_blocks(cfg, work)
    rel = np.concatenate([r[0] for r in results])
    sups = np.concatenate([r[1] for r in results])

    logger.debug("Step 2: summarizing endpoints and displacements")
    group = measure.group
    endpoints_arr = group.batch_mul(np.asarray([start], dtype=np.int64), rel)
    unique, counts = np.unique(endpoints_arr, axis=0, return_counts=True)
    endpoints = {tuple(int(x) for x in row): int(c) for row, c in zip(unique, counts)}
    quantiles = {float(q): float(np.quantile(sups, q)) for q in defaults.get("quantiles", [0.5, 0.9])}
    control = _control_table(sups, cfg.n, geom.w_star, defaults.get("control_eps", [0.5, 0.25, 0.1]))
    return TrajectoryStats(
        n=cfg.n,
        walkers=cfg.walkers,
        endpoints=endpoints,
        max_displacement_quantiles=quantiles,
        control_table=control,
        max_displacements=sups,
    )


# ============================================================================
# Collisions
# ============================================================================

def collision_return_estimate(measure, n: int, cfg: WalkConfig) -> CollisionEstimate:
    """
    Unbiased estimate of mu^(2n)(e) from coincident endpoints of
    independent walkers: P(X_n = X'_n) = sum_x mu^(n)(x)^2 = mu^(2n)(e).
    """
    logger = LongJumpLogger.get_logger()
    m = cfg.walkers
    if m < 2:
        raise ValueError(f"Collision estimates need at least 2 walkers, got {m}")
    sampler = MeasureSampler(measure)

    def work(block: int, size: int):
        return (_run_increments(measure, sampler, n, size, block_rng(cfg.seed, block))[0],)

    endpoints = np.concatenate([r[0] for r in _map_blocks(cfg, work)])
    _, counts = np.unique(endpoints, axis=0, return_counts=True)
    counts = counts.astype(float)
    pairs_total = m * (m - 1) / 2.0
    pairs = float((counts * (counts - 1) / 2.0).sum())
    if pairs == 0:
        logger.warning(f"No collisions among {m} walkers at n={n}; reporting an upper bound")
        return CollisionEstimate(n, 0.0, 3.0 / pairs_total, m, cfg.seed, 0, True)

    p = pairs / pairs_total
    if m >= 3:
        triples_total = m * (m - 1) * (m - 2) / 6.0
        triple = float((counts * (counts - 1) * (counts - 2) / 6.0).sum()) / triples_total
    else:
        triple = p
    zeta1 = max(triple - p * p, 0.0)
    zeta2 = p * (1.0 - p)
    variance = (4.0 * (m - 2) * zeta1 + 2.0 * zeta2) / (m * (m - 1))
    return CollisionEstimate(n, p, math.sqrt(max(variance, 0.0)), m, cfg.seed, int(pairs), False)


# ============================================================================
# Exit times
# ============================================================================

def _exit_block(measure, geom, sampler: MeasureSampler, r: float, horizon: int, size: int, rng):
    """First k >= 1 with ||X_k|| > r (horizon when censored) and the exit norms."""
    group = measure.group
    rel = np.tile(np.asarray(group.identity, dtype=np.int64), (size, 1))
    tau = np.full(size, horizon, dtype=np.int64)
    exit_norm = np.full(size, np.nan)
    active = np.arange(size)
    for k in range(1, horizon + 1):
        if active.size == 0:
            break
        rel_active = group.batch_mul(rel[active], sampler.sample_batch(active.size, rng))
        rel[active] = rel_active
        norms = geom.norm_g2_batch(rel_active)
        left = norms > r
        tau[active[left]] = k
        exit_norm[active[left]] = norms[left]
        active = active[~left]
    return tau, exit_norm, active.size


def _censor_horizon(geom, r: float) -> int:
    factor = float(ConfigLoader.get_instance().get("walks", "censor_factor", 64))
    return max(1, int(math.ceil(factor * r ** (1.0 / geom.w_star))))


def _run_exits(measure, geom, r: float, cfg: WalkConfig, horizon: int):
    sampler = MeasureSampler(measure)

    def work(block: int, size: int):
        return _exit_block(measure, geom, sampler, r, horizon, size, block_rng(cfg.seed, block))

    results = _map_blocks(cfg, work)
    tau = np.concatenate([x[0] for x in results])
    exit_norm = np.concatenate([x[1] for x in results])
    censored = sum(x[2] for x in results)
    return tau, exit_norm, censored


def exit_time_stats(measure, geom, r: float, cfg: WalkConfig) -> ExitTimeStats:
    """
    Exit time of B(start, r) in the rescaled norm, censored at
    censor_factor * r^(1/w_*).
    """
    if r <= 0:
        raise ValueError(f"Radius must be positive, got {r}")
    logger = LongJumpLogger.get_logger()
    horizon = _censor_horizon(geom, r)
    logger.debug(f"Exit times from radius {r:g}, horizon {horizon}")
    tau, _, censored = _run_exits(measure, geom, r, cfg, horizon)
    fraction = censored / cfg.walkers
    if censored:
        logger.warning(f"{censored} of {cfg.walkers} walkers still inside radius {r:g} at the horizon")
    quantiles = ConfigLoader.get_instance().get("walks", "quantiles", [0.5, 0.9])
    return ExitTimeStats(
        r=float(r),
        mean=float(tau.mean()),
        quantiles={float(q): float(np.quantile(tau, q)) for q in quantiles},
        horizon=horizon,
        censored_fraction=fraction,
        all_censored=censored == cfg.walkers,
    )


def exit_overshoot_prob(measure, geom, r: float, s: float, cfg: WalkConfig) -> OvershootEstimate:
    """Fraction of exits from B(start, r) that land outside B(start, s)."""
    if r <= 0 or s < 2 * r:
        raise ValueError(f"Need r > 0 and s >= 2r, got r={r}, s={s}")
    logger = LongJumpLogger.get_logger()
    horizon = _censor_horizon(geom, r)
    tau, exit_norm, censored = _run_exits(measure, geom, r, cfg, horizon)
    exited = cfg.walkers - censored
    if exited == 0:
        logger.warning(f"No walker left radius {r:g} within {horizon} steps")
        return OvershootEstimate(float(r), float(s), 0.0, 1.0, cfg.walkers, 0)
    far = int(np.count_nonzero(exit_norm[~np.isnan(exit_norm)] > s))
    p = far / exited
    return OvershootEstimate(float(r), float(s), p, math.sqrt(p * (1.0 - p) / exited), cfg.walkers, exited)
