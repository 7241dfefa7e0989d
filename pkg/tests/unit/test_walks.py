"""Unit tests for walk simulation and Monte Carlo estimators"""

import numpy as np
import pytest

from src.walks.simulator import (
    WalkConfig,
    block_rng,
    collision_return_estimate,
    exit_overshoot_prob,
    exit_time_stats,
    simulate,
)


class TestWalkConfig:
    """Tests for WalkConfig validation."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"seed": 1, "walkers": 0},
            {"seed": 1, "walkers": 10, "n": -1},
            {"seed": -1, "walkers": 10},
            {"seed": 2 ** 64, "walkers": 10},
        ],
    )
    def test_invalid(self, kwargs):
        """Test out-of-range settings are rejected."""
        with pytest.raises(ValueError):
            WalkConfig(**kwargs)

    def test_block_streams(self):
        """Test blocks are keyed by (seed, block)."""
        assert block_rng(5, 0).random() == block_rng(5, 0).random()
        assert block_rng(5, 0).random() != block_rng(5, 1).random()


class TestSimulate:
    """Tests for trajectory simulation."""

    def test_zero_horizon(self, three_atom_measure, three_atom_geometry):
        """Test every walker stays at the start."""
        stats = simulate(three_atom_measure, three_atom_geometry, WalkConfig(seed=1, walkers=50))
        assert stats.endpoints == {(0,): 50}
        assert set(stats.control_table.values()) == {0.0}
        assert all(v == 0.0 for v in stats.max_displacement_quantiles.values())

    def test_endpoints_count_walkers(self, three_atom_measure, three_atom_geometry):
        """Test endpoint counts add up and respect the step range."""
        stats = simulate(three_atom_measure, three_atom_geometry, WalkConfig(seed=3, walkers=500, n=6))
        assert sum(stats.endpoints.values()) == 500
        assert all(abs(x[0]) <= 6 for x in stats.endpoints)
        assert stats.max_displacements.shape == (500,)

    def test_start_shifts_endpoints(self, three_atom_measure, three_atom_geometry):
        """Test a non-identity start."""
        stats = simulate(three_atom_measure, three_atom_geometry, WalkConfig(seed=3, walkers=200, n=1, start=(10,)))
        assert set(stats.endpoints) <= {(9,), (10,), (11,)}

    def test_thread_count_does_not_matter(self, cauchy_measure, cauchy_geometry):
        """Test identical output for one and four threads."""
        one = simulate(cauchy_measure, cauchy_geometry, WalkConfig(seed=42, walkers=3000, n=8, threads=1))
        four = simulate(cauchy_measure, cauchy_geometry, WalkConfig(seed=42, walkers=3000, n=8, threads=4))
        assert one.endpoints == four.endpoints
        assert np.array_equal(one.max_displacements, four.max_displacements)
        assert one.control_table == four.control_table

    def test_control_table_is_monotone(self, cauchy_measure, cauchy_geometry):
        """Test smaller eps needs a larger gamma."""
        stats = simulate(cauchy_measure, cauchy_geometry, WalkConfig(seed=9, walkers=2000, n=16))
        gammas = [stats.control_table[eps] for eps in sorted(stats.control_table, reverse=True)]
        assert gammas == sorted(gammas)


class TestCollisions:
    """Tests for collision return estimates."""

    def test_zero_steps(self, three_atom_measure):
        """Test all walkers collide at n = 0."""
        estimate = collision_return_estimate(three_atom_measure, 0, WalkConfig(seed=1, walkers=100))
        assert estimate.estimate == 1.0
        assert estimate.stderr == 0.0
        assert not estimate.low_information

    def test_one_step(self, three_atom_measure):
        """Test the estimate of mu^(2)(0) = 3/8."""
        estimate = collision_return_estimate(three_atom_measure, 1, WalkConfig(seed=2024, walkers=20000))
        assert estimate.stderr > 0
        assert abs(estimate.estimate - 0.375) <= 4.0 * estimate.stderr

    def test_reproducible_across_threads(self, heisenberg_lazy_measure):
        """Test the estimate depends on the seed only."""
        one = collision_return_estimate(heisenberg_lazy_measure, 4, WalkConfig(seed=7, walkers=2500, threads=1))
        three = collision_return_estimate(heisenberg_lazy_measure, 4, WalkConfig(seed=7, walkers=2500, threads=3))
        assert one == three

    def test_needs_two_walkers(self, three_atom_measure):
        """Test a single walker is rejected."""
        with pytest.raises(ValueError):
            collision_return_estimate(three_atom_measure, 1, WalkConfig(seed=1, walkers=1))


class TestExits:
    """Tests for exit times and overshoot."""

    def test_exit_time_stats(self, cauchy_measure, cauchy_geometry):
        """Test the censoring horizon and the summary fields."""
        stats = exit_time_stats(cauchy_measure, cauchy_geometry, 1.0, WalkConfig(seed=11, walkers=1000))
        assert stats.horizon == 64
        assert 1.0 <= stats.mean <= 64.0
        assert 0.0 <= stats.censored_fraction < 1.0
        assert not stats.all_censored
        assert set(stats.quantiles) == {0.5, 0.75, 0.9, 0.95, 0.99}

    def test_exit_radius(self, cauchy_measure, cauchy_geometry):
        """Test a non-positive radius is rejected."""
        with pytest.raises(ValueError):
            exit_time_stats(cauchy_measure, cauchy_geometry, 0.0, WalkConfig(seed=1, walkers=10))

    def test_overshoot(self, cauchy_measure, cauchy_geometry):
        """Test the overshoot fraction of exiting walkers."""
        estimate = exit_overshoot_prob(cauchy_measure, cauchy_geometry, 1.0, 2.0, WalkConfig(seed=5, walkers=1000))
        assert estimate.exited > 0
        assert 0.0 < estimate.estimate < 1.0
        assert estimate.stderr > 0

    def test_overshoot_needs_wide_annulus(self, cauchy_measure, cauchy_geometry):
        """Test s < 2r is rejected."""
        with pytest.raises(ValueError):
            exit_overshoot_prob(cauchy_measure, cauchy_geometry, 2.0, 3.0, WalkConfig(seed=1, walkers=10))
