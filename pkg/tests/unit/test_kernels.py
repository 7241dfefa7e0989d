"""Unit tests for sparse kernels and convolution powers"""

import numpy as np
import pytest

from src.config.loader import ConfigLoader
from src.groups.elements import GroupKind, GroupSpec
from src.kernels.engine import (
    PowerCache,
    convolve,
    default_policy,
    identity_kernel,
    near_diagonal_profile,
    one_step_kernel,
    power,
    regularity_ratio,
    return_series,
    tv_difference,
    tv_slack,
)
from src.kernels.io import read_kernel_csv, write_kernel_csv
from src.kernels.sparse import DictKernel, LatticeKernel, TruncationPolicy
from src.measures.measure import MeasureSpec, build_measure
from src.utils.errors import KernelReliabilityError, SupportCapError

from tests.conftest import TEST_SHELL_CAP


class TestTruncationPolicy:
    """Tests for TruncationPolicy validation."""

    def test_invalid_fields(self):
        """Test negative eps, zero cap and unknown modes are rejected."""
        with pytest.raises(ValueError):
            TruncationPolicy(eps_per_step=-1.0)
        with pytest.raises(ValueError):
            TruncationPolicy(max_support=0)
        with pytest.raises(ValueError):
            TruncationPolicy(mode="random")

    def test_defaults_by_dimension(self, z1, heisenberg):
        """Test one-dimensional groups get the smaller eps."""
        assert default_policy(z1).eps_per_step == pytest.approx(1e-14)
        assert default_policy(heisenberg).eps_per_step == pytest.approx(1e-12)
        assert default_policy(z1, eps=0.0, threads=3).threads == 3


class TestConvolution:
    """Tests for exact and truncated convolution."""

    def test_second_power_of_three_atom_law(self, three_atom_measure, small_policy):
        """Test mu^(2)(0) = 3/8 with nothing dropped."""
        kernel = power(three_atom_measure, 2, small_policy)
        assert isinstance(kernel, LatticeKernel)
        assert kernel.n == 2
        assert kernel.value_at((0,)) == pytest.approx(0.375)
        assert kernel.value_at((2,)) == pytest.approx(0.0625)
        assert kernel.dropped == 0.0
        assert kernel.total_mass == pytest.approx(1.0)

    def test_identity_is_neutral(self, three_atom_measure, small_policy):
        """Test delta_e * mu = mu."""
        step = one_step_kernel(three_atom_measure, small_policy)
        result = convolve(identity_kernel(three_atom_measure.group), step, small_policy)
        assert result.entries() == pytest.approx(step.entries())
        assert result.n == 1

    def test_power_zero(self, three_atom_measure, small_policy):
        """Test mu^(0) = delta_e."""
        kernel = power(three_atom_measure, 0, small_policy)
        assert kernel.entries() == {(0,): 1.0}
        with pytest.raises(ValueError):
            power(three_atom_measure, -1, small_policy)

    def test_cache_matches_power(self, three_atom_measure, small_policy):
        """Test dyadic products agree with square-and-multiply."""
        cache = PowerCache(three_atom_measure, small_policy)
        direct = power(three_atom_measure, 5, small_policy)
        assert cache.power(5).entries() == pytest.approx(direct.entries())
        assert cache.power(5) is cache.power(5)

    def test_heisenberg_dictionary_kernel(self, heisenberg, heisenberg_lazy_measure):
        """Test mu^(2)(e) = 1/5 for the lazy walk, for any thread count."""
        single = power(heisenberg_lazy_measure, 2, default_policy(heisenberg, eps=0.0, threads=1))
        split = power(heisenberg_lazy_measure, 2, default_policy(heisenberg, eps=0.0, threads=3))
        assert isinstance(single, DictKernel)
        assert single.value_at((0, 0, 0)) == pytest.approx(0.2)
        assert np.array_equal(single.rows, split.rows)
        assert split.values == pytest.approx(single.values)

    def test_lattice_against_dictionary(self, three_atom_measure, small_policy):
        """Test FFT-free lattice convolution against the generic path."""
        step = one_step_kernel(three_atom_measure, small_policy)
        lattice = convolve(step, step, small_policy)
        generic = convolve(step.to_dict_kernel(), step.to_dict_kernel(), small_policy)
        assert lattice.entries() == pytest.approx(generic.entries())

    @pytest.mark.parametrize("n", [1, 7, 64])
    def test_exact_lattice_powers_ignore_fft_threshold(self, three_atom_measure, small_policy, monkeypatch, n):
        """Test eps = 0 powers on Z match repeated np.convolve even above the FFT threshold."""
        monkeypatch.setitem(ConfigLoader.get_instance().get_kernel_defaults(), "direct_threshold", 1)
        kernel = power(three_atom_measure, n, small_policy)
        expected = np.array([1.0])
        for _ in range(n):
            expected = np.convolve(expected, [0.25, 0.5, 0.25])
        observed = np.array([kernel.value_at((x,)) for x in range(-n, n + 1)])
        assert kernel.dropped == 0.0
        assert kernel.support_size == 2 * n + 1
        assert np.allclose(observed, expected, rtol=1e-9, atol=0.0)

    def test_exact_dihedral_powers(self):
        """Test eps = 0 powers on D_inf against brute-force convolution."""
        spec = GroupSpec(GroupKind.DIHEDRAL_INF)
        atoms = {spec.identity: 0.25, spec.generator("u"): 0.25, spec.generator("v"): 0.5}
        measure = build_measure(MeasureSpec(spec, [], 1.0, atoms))
        expected = {spec.identity: 1.0}
        for _ in range(12):
            grown = {}
            for g, p in expected.items():
                for x, q in atoms.items():
                    h = spec.mul(g, x)
                    grown[h] = grown.get(h, 0.0) + p * q
            expected = grown
        kernel = power(measure, 12, default_policy(spec, eps=0.0))
        assert kernel.dropped == 0.0
        assert kernel.entries() == pytest.approx(expected, rel=1e-12)


class TestTruncation:
    """Tests for the dropped-mass ledger."""

    def test_support_cap_threshold(self, three_atom_measure, z1):
        """Test threshold mode refuses oversized supports with a hint."""
        policy = default_policy(z1, eps=0.0, support_radius=64, max_support=2)
        with pytest.raises(SupportCapError) as excinfo:
            power(three_atom_measure, 2, policy)
        assert excinfo.value.suggested_eps == pytest.approx(0.25)

    def test_top_k(self, three_atom_measure, z1):
        """Test topK keeps the largest entries and books the rest."""
        policy = default_policy(z1, eps=0.0, support_radius=64, max_support=2, mode="topK")
        kernel = power(three_atom_measure, 2, policy)
        assert kernel.support_size == 2
        assert kernel.dropped == pytest.approx(0.375)
        assert kernel.value_at((0,)) == pytest.approx(0.375)
        assert kernel.value_at((-1,)) == pytest.approx(0.25)
        assert kernel.value_at((1,)) == 0.0

    def test_window_clip_is_booked(self, three_atom_measure, z1):
        """Test mass pushed outside the window joins the ledger."""
        policy = default_policy(z1, eps=0.0, support_radius=1)
        kernel = power(three_atom_measure, 2, policy)
        assert kernel.dropped == pytest.approx(0.125)
        assert kernel.total_mass + kernel.dropped == pytest.approx(1.0)

    def test_threshold_drops_small_entries(self, cauchy_measure, z1):
        """Test lower bounds plus the ledger cover the full mass."""
        policy = default_policy(z1, eps=1e-6, support_radius=TEST_SHELL_CAP)
        kernel = power(cauchy_measure, 4, policy)
        assert kernel.dropped > 0
        assert 1.0 - 1e-9 <= kernel.total_mass + kernel.dropped <= 1.0 + 1e-5

    def test_truncated_kernel_below_exact_kernel(self, cauchy_measure, z1):
        """Test a truncated power is pointwise below the exact one and its deficit is booked."""
        exact = power(cauchy_measure, 8, default_policy(z1, eps=0.0, support_radius=512))
        truncated = power(cauchy_measure, 8, default_policy(z1, eps=1e-4, support_radius=512))
        assert truncated.dropped > exact.dropped
        deficit = 0.0
        for g, value in exact.entries().items():
            approx_value = truncated.value_at(g)
            assert approx_value <= value * (1.0 + 1e-12)
            deficit += value - approx_value
        assert set(truncated.entries()) <= set(exact.entries())
        assert deficit <= truncated.dropped + 1e-12


class TestStatistics:
    """Tests for statistics read off kernels."""

    def test_return_series(self, three_atom_measure, small_policy):
        """Test exact return probabilities of the nearest-neighbour law."""
        rows = return_series(three_atom_measure, [0, 1, 2, 4], small_policy)
        assert [r.n for r in rows] == [0, 1, 2, 4]
        assert rows[0].lower == 1.0
        assert [r.lower for r in rows[1:]] == pytest.approx([0.5, 0.375, 70.0 / 256.0])
        assert all(r.upper == r.lower for r in rows)

    def test_return_series_requires_ascending(self, three_atom_measure, small_policy):
        """Test descending n values are rejected."""
        with pytest.raises(ValueError):
            return_series(three_atom_measure, [4, 2], small_policy)

    def test_total_variation(self, three_atom_measure, small_policy):
        """Test a unit shift of the three-atom law."""
        step = one_step_kernel(three_atom_measure, small_policy)
        assert tv_difference(step, step, (1,)) == pytest.approx(1.0)
        assert tv_difference(step, step, (0,)) == 0.0
        assert tv_difference(step.to_dict_kernel(), step.to_dict_kernel(), (1,)) == pytest.approx(1.0)
        assert tv_slack(step, step) == 0.0

    def test_regularity_needs_base_time(self, three_atom_measure, three_atom_geometry, small_policy):
        """Test n < 2 is rejected."""
        with pytest.raises(ValueError):
            regularity_ratio(three_atom_measure, three_atom_geometry, 1, [1], [(1,)], small_policy)

    def test_regularity_report(self, three_atom_measure, three_atom_geometry, small_policy):
        """Test one regularity row per (m, y) pair."""
        report = regularity_ratio(three_atom_measure, three_atom_geometry, 16, [1, 4], [(1,), (2,)], small_policy)
        assert report.n == 16
        assert [(m, y) for m, y, _ in report.rows] == [(1, "1"), (1, "2"), (4, "1"), (4, "2")]
        assert report.worst == max(c for _, _, c in report.rows)
        assert report.worst > 0

    def test_reliability_guard(self, cauchy_measure, cauchy_geometry, z1):
        """Test a narrow window refuses near-diagonal statistics."""
        policy = default_policy(z1, eps=0.0, support_radius=8)
        kernel = power(cauchy_measure, 64, policy)
        with pytest.raises(KernelReliabilityError):
            near_diagonal_profile(kernel, cauchy_geometry, 0.5)

    @pytest.mark.slow
    def test_near_diagonal_profile(self, cauchy_measure, cauchy_geometry, z1):
        """Test V(n) mu^(n) stays comparable on the near-diagonal ball."""
        policy = default_policy(z1, eps=0.0, support_radius=TEST_SHELL_CAP)
        kernel = power(cauchy_measure, 16, policy)
        profile = near_diagonal_profile(kernel, cauchy_geometry, 0.5)
        assert profile.ball_size == 17
        assert profile.min_ratio > 0
        assert profile.max_ratio / profile.min_ratio < 20.0
        assert profile.min_ratio <= profile.ratio_at_identity <= profile.max_ratio


class TestKernelFiles:
    """Tests for kernel CSV files."""

    def test_write_and_read(self, three_atom_measure, small_policy, tmp_path):
        """Test the header lines and a read back."""
        kernel = power(three_atom_measure, 2, small_policy)
        path = write_kernel_csv(kernel, tmp_path / "kernel.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[:3] == ["# n=2", "# droppedMass=0", "element_coords,prob"]
        assert lines[3] == "-2,0.0625"
        loaded = read_kernel_csv(path, three_atom_measure.group)
        assert loaded.n == 2
        assert loaded.entries() == pytest.approx(kernel.entries())

    def test_dictionary_kernel_file(self, heisenberg, heisenberg_lazy_measure, tmp_path):
        """Test coordinates are ';'-joined."""
        kernel = power(heisenberg_lazy_measure, 1, default_policy(heisenberg, eps=0.0))
        path = write_kernel_csv(kernel, tmp_path / "kernel.csv")
        assert "-1;0;0,0.20000000000000001" in path.read_text(encoding="utf-8")
        loaded = read_kernel_csv(path, heisenberg)
        assert isinstance(loaded, DictKernel)
        assert loaded.value_at((0, 1, 0)) == pytest.approx(0.2)
