"""
LongJump - Sparse Kernels

Finitely supported sub-probability functions on a group together with an
additive L1 ledger (dropped mass). Two storage layouts:

    DictKernel     sorted coordinate rows + values, any built-in group
    LatticeKernel  dense box array + offset, ZK only (FFT convolution)
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.groups.elements import Element, GroupKind, GroupSpec
from src.utils.errors import SupportCapError


# ============================================================================
# Truncation policy
# ============================================================================

@dataclass(frozen=True)
class TruncationPolicy:
    """
    How convolution results are pruned.

    Attributes:
        eps_per_step: Entries below this value are dropped into the ledger
        max_support: Entry cap
        mode: "threshold" (raise on overflow) or "topK" (keep the largest)
        support_radius: Optional override of the one-step / lattice window radius
        threads: Partition count for parallel convolution
    """
    eps_per_step: float = 1e-14
    max_support: int = 4_000_000
    mode: str = "threshold"
    support_radius: Optional[int] = None
    threads: int = 1

    def __post_init__(self):
        if self.eps_per_step < 0:
            raise ValueError(f"eps_per_step must be >= 0, got {self.eps_per_step}")
        if self.max_support < 1:
            raise ValueError(f"max_support must be >= 1, got {self.max_support}")
        if self.mode not in ("threshold", "topK"):
            raise ValueError(f"Unknown truncation mode '{self.mode}'")


def aggregate(rows: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum values of equal rows; output rows are lexicographically sorted."""
    if rows.shape[0] == 0:
        return rows, values
    unique, inverse = np.unique(rows, axis=0, return_inverse=True)
    sums = np.bincount(inverse.reshape(-1), weights=values, minlength=unique.shape[0])
    return unique, sums


def prune(rows: np.ndarray, values: np.ndarray, policy: TruncationPolicy) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Apply the policy to aggregated, sorted rows.

    Returns:
        (rows, values, removed mass)
    """
    keep = values > policy.eps_per_step if policy.eps_per_step > 0 else values > 0
    removed = float(values[~keep & (values > 0)].sum())
    rows, values = rows[keep], values[keep]
    if values.shape[0] > policy.max_support:
        ranked = np.sort(values)[::-1]
        if policy.mode == "threshold":
            raise SupportCapError(
                f"Support of {values.shape[0]} entries exceeds cap {policy.max_support}",
                suggested_eps=float(ranked[policy.max_support]),
            )
        # Largest values first, ties broken by element order
        order = np.lexsort(tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)) + (-values,))
        chosen = np.sort(order[: policy.max_support])
        dropped = np.ones(values.shape[0], dtype=bool)
        dropped[chosen] = False
        removed += float(values[dropped].sum())
        rows, values = rows[chosen], values[chosen]
    return rows, values, removed


# ============================================================================
# Kernels
# ============================================================================

class SparseKernel(ABC):
    """
    Pointwise lower bound of mu^(n) with an L1 deficit ledger.

    Attributes:
        group: Ambient group
        n: Convolution power represented
        dropped: Cumulative bound on the mass missing from the entries
    """

    def __init__(self, group: GroupSpec, n: int, dropped: float):
        self.group = group
        self.n = int(n)
        self.dropped = float(dropped)
        self._lookup: Optional[Dict[Element, float]] = None

    @abstractmethod
    def items(self) -> Tuple[np.ndarray, np.ndarray]:
        """Support rows (lexicographic) and their values."""

    @abstractmethod
    def values_at(self, A: np.ndarray) -> np.ndarray:
        """Kernel values at each row of A (0 off the support)."""

    @property
    def support_size(self) -> int:
        return int(self.items()[0].shape[0])

    @property
    def total_mass(self) -> float:
        return float(self.items()[1].sum())

    @property
    def sup_norm(self) -> float:
        values = self.items()[1]
        return float(values.max()) if values.size else 0.0

    def value_at(self, g) -> float:
        return float(self.values_at(np.asarray([tuple(g)], dtype=np.int64))[0])

    def entries(self) -> Dict[Element, float]:
        if self._lookup is None:
            rows, values = self.items()
            self._lookup = {tuple(int(x) for x in r): float(v) for r, v in zip(rows, values)}
        return self._lookup

    def to_dict_kernel(self) -> "DictKernel":
        rows, values = self.items()
        return DictKernel(self.group, rows, values, self.n, self.dropped)


class DictKernel(SparseKernel):
    """Kernel stored as sorted coordinate rows."""

    def __init__(self, group: GroupSpec, rows: np.ndarray, values: np.ndarray, n: int, dropped: float = 0.0):
        super().__init__(group, n, dropped)
        self.rows = np.asarray(rows, dtype=np.int64).reshape(-1, group.arity)
        self.values = np.asarray(values, dtype=float)

    @classmethod
    def delta(cls, group: GroupSpec) -> "DictKernel":
        return cls(group, np.asarray([group.identity], dtype=np.int64), np.ones(1), 0, 0.0)

    @classmethod
    def from_atoms(cls, group: GroupSpec, rows: np.ndarray, values: np.ndarray, n: int, dropped: float) -> "DictKernel":
        rows, values = aggregate(np.asarray(rows, dtype=np.int64), np.asarray(values, dtype=float))
        keep = values > 0
        return cls(group, rows[keep], values[keep], n, dropped)

    def items(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.rows, self.values

    def values_at(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64).reshape(-1, self.group.arity)
        if A.shape[0] == 0:
            return np.zeros(0)
        if self.rows.shape[0] == 0:
            return np.zeros(A.shape[0])
        stacked = np.concatenate([self.rows, A])
        _, inverse = np.unique(stacked, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        table = np.zeros(int(inverse.max()) + 1)
        table[inverse[: self.rows.shape[0]]] = self.values
        return table[inverse[self.rows.shape[0]:]]


class LatticeKernel(SparseKernel):
    """Kernel on Z^k stored as a dense box; index 0 sits at `offset`."""

    def __init__(self, group: GroupSpec, array: np.ndarray, offset: Tuple[int, ...], n: int, dropped: float = 0.0):
        if group.kind is not GroupKind.ZK:
            raise ValueError("LatticeKernel is only available for ZK")
        super().__init__(group, n, dropped)
        self.array = np.asarray(array, dtype=float)
        if self.array.ndim != group.k:
            raise ValueError(f"Lattice array has {self.array.ndim} axes, group has rank {group.k}")
        self.offset = tuple(int(o) for o in offset)
        self._items: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @classmethod
    def delta(cls, group: GroupSpec) -> "LatticeKernel":
        return cls(group, np.ones((1,) * group.k), (0,) * group.k, 0, 0.0)

    @classmethod
    def from_atoms(cls, group: GroupSpec, rows: np.ndarray, values: np.ndarray, n: int, dropped: float) -> "LatticeKernel":
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, group.k)
        lo = rows.min(axis=0)
        hi = rows.max(axis=0)
        array = np.zeros(tuple(int(x) for x in hi - lo + 1))
        np.add.at(array, tuple((rows - lo).T), values)
        return cls(group, array, tuple(int(x) for x in lo), n, dropped)

    def items(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._items is None:
            idx = np.nonzero(self.array > 0)
            rows = np.stack(idx, axis=1).astype(np.int64) + np.asarray(self.offset, dtype=np.int64)
            self._items = (rows, self.array[idx])
        return self._items

    @property
    def total_mass(self) -> float:
        return float(self.array.sum())

    @property
    def sup_norm(self) -> float:
        return float(self.array.max()) if self.array.size else 0.0

    def values_at(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64).reshape(-1, self.group.k)
        idx = A - np.asarray(self.offset, dtype=np.int64)
        shape = np.asarray(self.array.shape)
        inside = np.all((idx >= 0) & (idx < shape), axis=1)
        out = np.zeros(A.shape[0])
        if inside.any():
            out[inside] = self.array[tuple(idx[inside].T)]
        return out

    def shifted_box(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Dense copy of the kernel on the box [lo, hi] (inclusive)."""
        out = np.zeros(tuple(int(x) for x in hi - lo + 1))
        src_lo = np.maximum(np.asarray(self.offset), lo)
        src_hi = np.minimum(np.asarray(self.offset) + np.asarray(self.array.shape) - 1, hi)
        if np.any(src_hi < src_lo):
            return out
        dst = tuple(slice(int(a - l), int(b - l + 1)) for a, b, l in zip(src_lo, src_hi, lo))
        src = tuple(slice(int(a - o), int(b - o + 1)) for a, b, o in zip(src_lo, src_hi, self.offset))
        out[dst] = self.array[src]
        return out
