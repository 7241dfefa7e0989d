"""Pytest configuration and shared fixtures"""

import json

import pytest

from src.groups.catalog import builtin_nilpotent_approx, builtin_subgroups
from src.groups.elements import GroupKind, GroupSpec
from src.geometry.adapted import build_adapted_geometry, geometry_from_weights, power_weights
from src.kernels.engine import default_policy
from src.measures.measure import ComponentSpec, MeasureSpec, build_measure

# Exact shell sums up to this radius keep fixtures quick; the tail is integrated
TEST_SHELL_CAP = 4096


@pytest.fixture
def z1():
    """The integers."""
    return GroupSpec(GroupKind.ZK, 1)


@pytest.fixture
def heisenberg():
    """Discrete Heisenberg group."""
    return GroupSpec(GroupKind.HEISENBERG3)


@pytest.fixture
def three_atom_measure(z1):
    """mu = 1/4 delta_-1 + 1/2 delta_0 + 1/4 delta_1 on Z."""
    spec = MeasureSpec(z1, [], 1.0, {(-1,): 0.25, (0,): 0.5, (1,): 0.25})
    return build_measure(spec)


@pytest.fixture
def cauchy_measure(z1):
    """Single component on Z with alpha = 1."""
    component = ComponentSpec(builtin_subgroups(z1)["e1"], 1.0, 1.0)
    return build_measure(MeasureSpec(z1, [component]), shell_cap=TEST_SHELL_CAP)


@pytest.fixture
def cauchy_geometry(z1, cauchy_measure):
    """Adapted geometry of the alpha = 1 walk on Z."""
    return build_adapted_geometry(z1, builtin_nilpotent_approx(z1), cauchy_measure)


@pytest.fixture
def three_atom_geometry(z1, three_atom_measure):
    """Adapted geometry of the nearest-neighbour walk on Z."""
    return build_adapted_geometry(z1, builtin_nilpotent_approx(z1), three_atom_measure)


@pytest.fixture
def heisenberg_lazy_measure(heisenberg):
    """Uniform law on {e, s1^+-1, s2^+-1}."""
    atoms = {(0, 0, 0): 0.2, (1, 0, 0): 0.2, (-1, 0, 0): 0.2, (0, 1, 0): 0.2, (0, -1, 0): 0.2}
    return build_measure(MeasureSpec(heisenberg, [], 1.0, atoms))


@pytest.fixture
def heisenberg_unit_geometry(heisenberg):
    """Heisenberg geometry with unit power weights on s1, s2, s3."""
    weights = power_weights({"s1": 1.0, "s2": 1.0, "s3": 1.0})
    return geometry_from_weights(heisenberg, builtin_nilpotent_approx(heisenberg), weights)


@pytest.fixture
def small_policy(z1):
    """Exact truncation policy with a narrow window."""
    return default_policy(z1, eps=0.0, support_radius=64)


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config document and return its path."""
    def _write(document, name="experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path
    return _write
