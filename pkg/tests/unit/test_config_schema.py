"""Unit tests for experiment configs and engine defaults"""

import json

import pytest

from src.config.loader import ConfigLoader
from src.config.schema import parse_config, to_json
from src.experiments.runner import ExperimentRunner
from src.groups.elements import GroupKind
from src.utils.errors import ConfigValidationError

BASE = {
    "experiment": "return-exponent",
    "group": {"kind": "ZK", "k": 1},
    "measure": {"components": [{"subgroup": "e1", "weight": 1.0, "alpha": 1.0}]},
    "n_range": [8, 16, 32],
}


def _pointers(document) -> list:
    text = document if isinstance(document, str) else json.dumps(document)
    with pytest.raises(ConfigValidationError) as excinfo:
        parse_config(text)
    return [pointer for pointer, _ in excinfo.value.errors]


def _with(**changes) -> dict:
    document = json.loads(json.dumps(BASE))
    document.update(changes)
    return document


class TestParseConfig:
    """Tests for parse_config."""

    def test_valid(self):
        """Test a minimal return-exponent config."""
        cfg = parse_config(json.dumps(BASE))
        assert cfg.group.kind is GroupKind.ZK
        assert cfg.n_range == [8, 16, 32]
        assert cfg.uses_exact_kernels()
        assert cfg.measure_spec().components[0].alpha == 1.0

    def test_invalid_json(self):
        """Test syntax errors point at the document root."""
        assert _pointers("{not json") == [""]

    def test_unknown_key(self):
        """Test extra fields are rejected."""
        assert "/foo" in _pointers(_with(foo=1))

    def test_missing_experiment(self):
        """Test the experiment tag is required."""
        document = _with()
        del document["experiment"]
        assert "/experiment" in _pointers(document)

    def test_unknown_experiment(self):
        """Test unknown experiment tags."""
        assert "/experiment" in _pointers(_with(experiment="speedrun"))

    def test_non_positive_alpha(self):
        """Test tail indices must be positive."""
        document = _with()
        document["measure"]["components"][0]["alpha"] = 0.0
        assert "/measure/components/0/alpha" in _pointers(document)

    def test_missing_required_field(self):
        """Test experiment-specific requirements."""
        document = _with()
        del document["n_range"]
        assert _pointers(document) == ["/n_range"]

    def test_unknown_subgroup(self):
        """Test subgroup names are checked against the catalog."""
        document = _with()
        document["measure"]["components"][0]["subgroup"] = "e2"
        assert _pointers(document) == ["/measure/components/0/subgroup"]

    def test_bad_element(self):
        """Test element strings are parsed per group."""
        document = _with(experiment="poincare", trials=4, seed=1, h_list=["1", "1;2"])
        assert _pointers(document) == ["/h_list/1"]

    def test_ascending_ranges(self):
        """Test n_range must ascend."""
        assert _pointers(_with(n_range=[16, 8, 32])) == ["/n_range"]

    def test_collision_needs_walkers(self):
        """Test non-lattice groups need walkers and a seed."""
        document = _with(group={"kind": "Heisenberg3"})
        document["measure"]["components"][0]["subgroup"] = "s3"
        assert sorted(_pointers(document)) == ["/seed", "/walkers"]

    def test_holder_needs_grid(self):
        """Test holder configs need a grid or m_values with y_list."""
        document = _with(experiment="holder", n0=8)
        assert "/holder_grid" in _pointers(document)

    def test_all_errors_reported(self):
        """Test several problems are reported together."""
        document = _with(n_range=[4, 2], h_list=["x"])
        assert sorted(_pointers(document)) == ["/h_list/0", "/n_range"]


class TestResolvedValues:
    """Tests for values derived from a config."""

    def test_round_trip(self):
        """Test serializing the set fields is idempotent."""
        cfg = parse_config(json.dumps(BASE))
        once = to_json(cfg)
        assert to_json(parse_config(once)) == once
        assert "policy" not in json.loads(once)

    def test_truncation_policy(self):
        """Test policy overrides and thread count."""
        cfg = parse_config(json.dumps(_with(policy={"eps_per_step": 0.0, "support_radius": 128})))
        policy = cfg.truncation_policy(threads=2)
        assert policy.eps_per_step == 0.0
        assert policy.support_radius == 128
        assert policy.threads == 2

    def test_elements(self):
        """Test element lists are parsed."""
        cfg = parse_config(json.dumps(_with(y_list=["1", "-3"])))
        assert cfg.elements(cfg.y_list) == [(1,), (-3,)]
        assert cfg.elements(None) == []

    def test_default_w_star(self):
        """Test w_* is half the smallest merged index of the G-system."""
        heavy = ExperimentRunner(parse_config(json.dumps(BASE))).prepare()
        assert heavy.w_star == pytest.approx(0.5)
        lattice = _with(measure={
            "mu0_weight": 1.0,
            "mu0_atoms": [{"element": "-1", "mass": 0.25}, {"element": "0", "mass": 0.5}, {"element": "1", "mass": 0.25}],
        })
        assert ExperimentRunner(parse_config(json.dumps(lattice))).prepare().w_star == pytest.approx(0.25)
        mixed = _with(measure={
            "components": [{"subgroup": "e1", "weight": 0.5, "alpha": 1.0}],
            "mu0_weight": 0.5,
            "mu0_atoms": [{"element": "-1", "mass": 0.5}, {"element": "1", "mass": 0.5}],
        })
        # e1 carries max(Phi_0^-1, Phi_1^-1), whose index is 1
        assert ExperimentRunner(parse_config(json.dumps(mixed))).prepare().w_star == pytest.approx(0.5)
        assert parse_config(json.dumps(BASE)).truncation_policy().eps_per_step == pytest.approx(1e-14)

    def test_mu0_atoms(self):
        """Test explicit mu_0 atoms become a law."""
        document = _with(measure={
            "mu0_weight": 1.0,
            "mu0_atoms": [{"element": "-1", "mass": 0.25}, {"element": "0", "mass": 0.5}, {"element": "1", "mass": 0.25}],
        })
        spec = parse_config(json.dumps(document)).measure_spec()
        assert spec.mu0_atoms == {(-1,): 0.25, (0,): 0.5, (1,): 0.25}
        assert spec.components == []


class TestConfigLoader:
    """Tests for the engine defaults file."""

    def test_singleton(self):
        """Test one loader instance."""
        assert ConfigLoader.get_instance() is ConfigLoader()

    def test_sections(self):
        """Test values from config/defaults.yaml."""
        loader = ConfigLoader.get_instance()
        assert loader.get("walks", "block_size") == 1024
        assert loader.get_kernel_defaults()["dict_radius"] == 64
        assert loader.get_tolerance("return-exponent-exact") == pytest.approx(0.1)
        assert loader.get_logging_level() == "INFO"
        assert loader.get_geometry_defaults()["ball_cap"] == 50_000_000
        assert loader.get_measure_defaults()["finite_subgroup_limit"] == 10_000
        assert loader.get_tolerance("return-exponent-dihedral") == pytest.approx(0.05)
        assert loader.get_tolerance("poincare") == pytest.approx(1000.0)

    def test_unknown_tolerance(self):
        """Test missing tolerances raise KeyError."""
        with pytest.raises(KeyError):
            ConfigLoader.get_instance().get_tolerance("speedrun")

    def test_missing_file(self):
        """Test a missing defaults file."""
        with pytest.raises(FileNotFoundError):
            ConfigLoader.get_instance().load_config("does_not_exist")
