"""Unit tests for jump measures and step sampling"""

import logging
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning

from src.config.loader import ConfigLoader
from src.groups.catalog import builtin_subgroups
from src.groups.elements import GroupKind, GroupSpec
from src.groups.subgroups import FiniteMap
from src.measures.measure import ComponentSpec, MeasureSpec, _quad, build_measure, default_mu0
from src.measures.sampler import MeasureSampler, sample_step
from src.utils.errors import GenerationError, MeasureError, WeightSumError

from tests.conftest import TEST_SHELL_CAP

CAUCHY_Z = 1.0 + 2.0 * (math.pi ** 2 / 6.0 - 1.0)


class TestMeasureConstruction:
    """Tests for normalization and validation."""

    def test_cauchy_normalizer(self, cauchy_measure):
        """Test Z = 1 + 2 (pi^2/6 - 1) for alpha = 1 on Z."""
        component = cauchy_measure.components[0]
        assert component.Z == pytest.approx(CAUCHY_Z, rel=1e-6)
        assert cauchy_measure.pmf((0,)) == pytest.approx(1.0 / CAUCHY_Z, rel=1e-6)
        assert cauchy_measure.pmf((3,)) == pytest.approx(1.0 / (16.0 * CAUCHY_Z), rel=1e-6)

    def test_symmetry(self, cauchy_measure):
        """Test mu(g) = mu(g^-1)."""
        for x in (1, 7, 100, 5000):
            assert cauchy_measure.pmf((x,)) == cauchy_measure.pmf((-x,))

    def test_pmf_batch_matches_scalar(self, cauchy_measure, heisenberg_lazy_measure):
        """Test batched and scalar evaluation agree."""
        rows = np.array([[0], [2], [-9], [4096], [4097]])
        batch = cauchy_measure.pmf_batch(rows)
        for row, value in zip(rows, batch):
            assert value == pytest.approx(cauchy_measure.pmf(tuple(row)))
        lazy = heisenberg_lazy_measure.pmf_batch(np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1]]))
        assert lazy.tolist() == pytest.approx([0.2, 0.2, 0.0])

    def test_tail_mass(self, cauchy_measure):
        """Test tail masses of the first component."""
        assert cauchy_measure.tail_mass(1, 0) == 1.0
        assert cauchy_measure.tail_mass(1, 1) == pytest.approx(1.0 - 1.0 / CAUCHY_Z, rel=1e-9)
        assert cauchy_measure.tail_mass(1, 10) > cauchy_measure.tail_mass(1, 100)
        with pytest.raises(MeasureError):
            cauchy_measure.tail_mass(2, 1)

    def test_truncated_atoms_account_for_all_mass(self, cauchy_measure):
        """Test kept plus dropped mass is one."""
        elements, probs, dropped = cauchy_measure.truncated_atoms(1e-3, TEST_SHELL_CAP)
        assert dropped <= 1e-3
        assert probs.sum() + dropped == pytest.approx(1.0, abs=1e-9)
        assert elements.shape == (probs.size, 1)

    def test_weight_sum(self, z1):
        """Test probabilities must sum to one."""
        component = ComponentSpec(builtin_subgroups(z1)["e1"], 0.5, 1.0)
        with pytest.raises(WeightSumError):
            build_measure(MeasureSpec(z1, [component]), shell_cap=TEST_SHELL_CAP)

    def test_asymmetric_mu0(self, z1):
        """Test mu_0 must be symmetric."""
        with pytest.raises(MeasureError):
            build_measure(MeasureSpec(z1, [], 1.0, {(0,): 0.5, (1,): 0.5}))

    def test_generation_failure(self):
        """Test atoms confined to one axis of Z^2 do not generate."""
        spec = GroupSpec(GroupKind.ZK, 2)
        component = ComponentSpec(builtin_subgroups(spec)["e1"], 0.5, 1.0)
        with pytest.raises(GenerationError):
            build_measure(MeasureSpec(spec, [component], 0.5, {(0, 0): 1.0}), shell_cap=TEST_SHELL_CAP)

    def test_default_mu0(self, heisenberg):
        """Test the lazy uniform law on the standard generators."""
        law = default_mu0(heisenberg)
        assert len(law) == 7
        assert sum(law.values()) == pytest.approx(1.0)

    def test_heisenberg_generation(self, heisenberg_lazy_measure):
        """Test s3 is reached through a commutator."""
        assert heisenberg_lazy_measure.certified_eps == pytest.approx(0.2, rel=1e-6)

    def test_to_dict(self, cauchy_measure):
        """Test the measure dump."""
        document = cauchy_measure.to_dict()
        assert document["group"] == "Z^1"
        assert document["p0"] == 0.0
        assert len(document["components"]) == 1
        assert document["components"][0]["alpha"] == 1.0
        assert document["phi_order"] == [{"key": [1.0, 0.0, 0.0], "components": [1]}]

    def test_phi_order_merges_equal_classes(self):
        """Test Phi classes sort by key and group components sharing one."""
        spec = GroupSpec(GroupKind.ZK, 2)
        catalog = builtin_subgroups(spec)
        measure = build_measure(MeasureSpec(spec, [
            ComponentSpec(catalog["e1"], 0.25, 1.0),
            ComponentSpec(catalog["e2"], 0.25, 0.5),
            ComponentSpec(catalog["all"], 0.5, 1.0),
        ]), shell_cap=TEST_SHELL_CAP)
        order = measure.validate_P_order()
        assert [cls.key for cls in order] == [(0.5, 0.0, 0.0), (1.0, 0.0, 0.0)]
        assert [cls.components for cls in order] == [(2,), (1, 3)]

    def test_finite_component(self):
        """Test a finite subgroup component with a prescribed identity mass."""
        spec = GroupSpec(GroupKind.DIHEDRAL_INF)
        catalog = builtin_subgroups(spec)
        measure = build_measure(MeasureSpec(spec, [
            ComponentSpec(catalog["u"], 0.5, 1.0, identity_mass=0.25),
            ComponentSpec(catalog["v"], 0.5, 1.0),
        ]))
        assert measure.pmf(spec.identity) == pytest.approx(0.5 * 0.25 + 0.5 * 0.5)
        assert measure.pmf(spec.generator("u")) == pytest.approx(0.5 * 0.75)


    def test_heisenberg_tails_build_quietly(self, heisenberg):
        """Test rank-2 tail integrals on the Heisenberg group raise no quadrature warning."""
        catalog = builtin_subgroups(heisenberg)
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            measure = build_measure(MeasureSpec(heisenberg, [
                ComponentSpec(catalog["s1s3"], 0.5, 1.5),
                ComponentSpec(catalog["s2"], 0.5, 1.0),
            ]), shell_cap=256)
        assert sum(c.tail_beyond_cap for c in measure.components) > 0
        assert measure.pmf((0, 0, 0)) > 0

    def test_quadrature_warning_is_logged(self, caplog):
        """Test a divergent integral is reported through the logger."""
        caplog.set_level(logging.DEBUG, logger="longjump")
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            _quad(lambda x: 1.0 / x, 0.0, 1.0, 20)
        assert "Tail integral on [0, 1]" in caplog.text

    def test_finite_subgroup_limit_from_config(self, monkeypatch):
        """Test the BFS closure honours measures.finite_subgroup_limit."""
        monkeypatch.setitem(ConfigLoader.get_instance().get_measure_defaults(), "finite_subgroup_limit", 1)
        spec = GroupSpec(GroupKind.DIHEDRAL_INF)
        with pytest.raises(MeasureError):
            FiniteMap(spec, [spec.generator("u")])
        assert FiniteMap(spec, [spec.generator("u")], limit=2).order == 2


class TestSampler:
    """Tests for i.i.d. step sampling."""

    def test_three_atom_frequencies(self, three_atom_measure):
        """Test empirical frequencies of the nearest-neighbour law."""
        steps = MeasureSampler(three_atom_measure).sample_batch(40000, np.random.default_rng(7))
        values, counts = np.unique(steps[:, 0], return_counts=True)
        assert values.tolist() == [-1, 0, 1]
        assert counts / 40000 == pytest.approx([0.25, 0.5, 0.25], abs=0.02)

    def test_reproducible(self, cauchy_measure):
        """Test equal seeds give equal draws."""
        sampler = MeasureSampler(cauchy_measure)
        a = sampler.sample_batch(500, np.random.default_rng(11))
        b = sampler.sample_batch(500, np.random.default_rng(11))
        assert a.shape == (500, 1)
        assert np.array_equal(a, b)

    def test_heavy_tail(self, cauchy_measure):
        """Test P(|X| >= 100) against the tail mass."""
        steps = MeasureSampler(cauchy_measure).sample_batch(50000, np.random.default_rng(3))
        observed = np.mean(np.abs(steps[:, 0]) >= 100)
        assert observed == pytest.approx(cauchy_measure.tail_mass(1, 100), rel=0.25)

    def test_zero_count(self, cauchy_measure):
        """Test an empty batch."""
        assert MeasureSampler(cauchy_measure).sample_batch(0, np.random.default_rng(0)).shape == (0, 1)

    def test_sample_step(self, heisenberg_lazy_measure):
        """Test a single increment is one of the atoms."""
        step, _ = sample_step(heisenberg_lazy_measure, np.random.default_rng(5))
        assert step in heisenberg_lazy_measure.mu0
