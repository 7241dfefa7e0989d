"""LongJump - Walk Simulation"""

from src.walks.simulator import (
    WalkConfig,
    block_rng,
    collision_return_estimate,
    exit_overshoot_prob,
    exit_time_stats,
    simulate,
)

__all__ = [
    "WalkConfig",
    "block_rng",
    "collision_return_estimate",
    "exit_overshoot_prob",
    "exit_time_stats",
    "simulate",
]
