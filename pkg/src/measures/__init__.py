"""LongJump - Jump Measures"""

from src.measures.measure import (
    ComponentSpec,
    JumpComponent,
    JumpMeasure,
    MeasureSpec,
    PhiClass,
    build_measure,
    default_mu0,
)
from src.measures.sampler import MeasureSampler, sample_step

__all__ = [
    "ComponentSpec",
    "JumpComponent",
    "JumpMeasure",
    "MeasureSampler",
    "MeasureSpec",
    "PhiClass",
    "build_measure",
    "default_mu0",
    "sample_step",
]
