"""LongJump - Configuration Loader"""

import yaml
from pathlib import Path
from typing import Dict, Any


class ConfigLoader:
    """Load and manage engine default files."""

    _instance = None
    _config_cache: Dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        # __file__ is src/config/loader.py, config/ sits beside src/
        project_root = Path(__file__).parent.parent.parent
        self.config_dir = project_root / "config"

    @classmethod
    def get_instance(cls):
        """Get singleton instance."""
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    def load_config(self, config_name: str) -> Dict[str, Any]:
        """
        Load configuration file.

        Args:
            config_name: Name of config file (without .yaml)

        Returns:
            Configuration dictionary
        """
        if config_name in self._config_cache:
            return self._config_cache[config_name]

        config_path = self.config_dir / f"{config_name}.yaml"

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_path, 'r') as f:
            config = yaml.safe_load(f)

        self._config_cache[config_name] = config
        return config

    def get_section(self, section: str) -> Dict[str, Any]:
        """Get one top-level section of the engine defaults."""
        config = self.load_config("defaults")
        return config.get(section, {})

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """Get a single default value."""
        return self.get_section(section).get(key, default)

    def get_kernel_defaults(self) -> Dict[str, Any]:
        """Get kernel-engine defaults (eps, support caps, radii)."""
        return self.get_section("kernels")

    def get_measure_defaults(self) -> Dict[str, Any]:
        """Get measure construction defaults."""
        return self.get_section("measures")

    def get_geometry_defaults(self) -> Dict[str, Any]:
        """Get adapted-geometry defaults (ball enumeration cap)."""
        return self.get_section("geometry")

    def get_walk_defaults(self) -> Dict[str, Any]:
        """Get Monte Carlo defaults."""
        return self.get_section("walks")

    def get_tolerance(self, experiment: str) -> float:
        """Get pass/fail tolerance for an experiment tag."""
        tolerances = self.get_section("experiments").get("tolerances", {})
        if experiment not in tolerances:
            raise KeyError(f"No tolerance configured for experiment '{experiment}'")
        return float(tolerances[experiment])

    def get_logging_level(self) -> str:
        """Get configured logging level name."""
        return str(self.get_section("logging").get("level", "INFO"))
