"""LongJump - Weighted Geometries"""

from src.geometry.adapted import (
    AdaptedGeometry,
    Certificate,
    VolumeFunction,
    WeightSystem,
    build_adapted_geometry,
    build_naive_geometry,
    geometry_from_weights,
)
from src.geometry.oracle import OracleSearch, oracle_norm
from src.geometry.weights import (
    ClassFunction,
    JumpProfile,
    LinearSqrtCapWeight,
    PowerLogWeight,
    PowerWeight,
    WeightFunction,
    phi_to_Phi,
)

__all__ = [
    "AdaptedGeometry",
    "Certificate",
    "ClassFunction",
    "JumpProfile",
    "LinearSqrtCapWeight",
    "OracleSearch",
    "PowerLogWeight",
    "PowerWeight",
    "VolumeFunction",
    "WeightFunction",
    "WeightSystem",
    "build_adapted_geometry",
    "build_naive_geometry",
    "geometry_from_weights",
    "oracle_norm",
    "phi_to_Phi",
]
