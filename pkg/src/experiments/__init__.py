"""LongJump - Experiments"""

from src.experiments.runner import ExperimentRunner, render_csv, run_experiment

__all__ = ["ExperimentRunner", "render_csv", "run_experiment"]
