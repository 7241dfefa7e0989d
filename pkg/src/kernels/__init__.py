"""LongJump - Kernel Engine"""

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
from src.kernels.sparse import DictKernel, LatticeKernel, SparseKernel, TruncationPolicy

__all__ = [
    "DictKernel",
    "LatticeKernel",
    "PowerCache",
    "SparseKernel",
    "TruncationPolicy",
    "convolve",
    "default_policy",
    "identity_kernel",
    "near_diagonal_profile",
    "one_step_kernel",
    "power",
    "read_kernel_csv",
    "regularity_ratio",
    "return_series",
    "tv_difference",
    "tv_slack",
    "write_kernel_csv",
]
