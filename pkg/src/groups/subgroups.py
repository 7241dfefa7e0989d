"""
LongJump - Subgroups and Coordinate Maps

A coordinate map identifies a subgroup H with Z^m (optionally with a finite
part) inside the ambient normal form. It answers membership, intrinsic word
length, shell cardinalities and uniform shell sampling.
"""

from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import binom

from src.config.loader import ConfigLoader
from src.groups.elements import Element, GroupSpec
from src.utils.errors import MeasureError, MembershipError

Coordinates = Tuple[int, ...]


class CoordinateMap(ABC):
    """Rule identifying a subgroup with its intrinsic coordinates."""

    rank: int = 0
    # Largest word length in the subgroup, None when infinite
    max_length: Optional[int] = None

    def __init__(self, spec: GroupSpec):
        self.spec = spec

    @abstractmethod
    def coordinates(self, g: Element) -> Optional[Coordinates]:
        """Intrinsic coordinates of g, or None when g is not a member."""

    @abstractmethod
    def element(self, coords: Sequence[int]) -> Element:
        """Ambient normal form of the member with the given coordinates."""

    def length(self, coords: Sequence[int]) -> int:
        raise MeasureError(f"{type(self).__name__} has no intrinsic word length")

    def shell_sizes(self, radii: np.ndarray) -> np.ndarray:
        raise MeasureError(f"{type(self).__name__} has no shell structure")

    def ball(self, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        raise MeasureError(f"{type(self).__name__} cannot enumerate balls")

    def lengths_batch(self, A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Membership mask and intrinsic lengths (0 for non-members) of each row."""
        A = np.asarray(A, dtype=np.int64)
        members = np.zeros(A.shape[0], dtype=bool)
        lengths = np.zeros(A.shape[0], dtype=np.int64)
        for i, row in enumerate(A):
            coords = self.coordinates(tuple(int(x) for x in row))
            if coords is not None:
                members[i] = True
                lengths[i] = self.length(coords)
        return members, lengths

    def sample_shell(self, radii: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise MeasureError(f"{type(self).__name__} cannot sample shells")

    def describe(self) -> Dict[str, object]:
        return {"type": type(self).__name__, "rank": self.rank}


# ============================================================================
# Z^m embedded along coordinate axes
# ============================================================================

class AxisMap(CoordinateMap):
    """
    H = { g : g_a = stride_a * c_a on the listed axes, 0 elsewhere } = Z^m.

    Word length is the l1 norm of the intrinsic coordinates c.
    """

    def __init__(self, spec: GroupSpec, axes: Sequence[int], strides: Optional[Sequence[int]] = None):
        super().__init__(spec)
        self.axes = tuple(axes)
        self.strides = tuple(strides) if strides is not None else (1,) * len(self.axes)
        self.rank = len(self.axes)
        self._others = tuple(i for i in range(spec.arity) if i not in self.axes)

    def coordinates(self, g: Element) -> Optional[Coordinates]:
        if any(g[i] != 0 for i in self._others):
            return None
        coords = []
        for axis, stride in zip(self.axes, self.strides):
            if g[axis] % stride:
                return None
            coords.append(g[axis] // stride)
        return tuple(coords)

    def element(self, coords: Sequence[int]) -> Element:
        out = [0] * self.spec.arity
        for axis, stride, c in zip(self.axes, self.strides, coords):
            out[axis] = stride * int(c)
        return tuple(out)

    def length(self, coords: Sequence[int]) -> int:
        return sum(abs(int(c)) for c in coords)

    def lengths_batch(self, A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        A = np.asarray(A, dtype=np.int64)
        members = np.all(A[:, list(self._others)] == 0, axis=1) if self._others else np.ones(A.shape[0], dtype=bool)
        lengths = np.zeros(A.shape[0], dtype=np.int64)
        for axis, stride in zip(self.axes, self.strides):
            members &= A[:, axis] % stride == 0
            lengths += np.abs(A[:, axis] // stride)
        return members, np.where(members, lengths, 0)

    def shell_sizes(self, radii: np.ndarray) -> np.ndarray:
        """
        Number of points of Z^m at l1 distance exactly r.

        N_m(r) = sum_k 2^k C(m, k) C(r-1, k-1); real r is allowed so the
        same formula feeds tail integrals.
        """
        r = np.asarray(radii, dtype=float)
        total = np.zeros_like(r)
        for k in range(1, self.rank + 1):
            total += (2.0 ** k) * binom(self.rank, k) * binom(r - 1.0, k - 1)
        return np.where(r == 0, 1.0, total)

    def ball(self, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        radius = int(radius)
        axis_range = np.arange(-radius, radius + 1, dtype=np.int64)
        grids = np.meshgrid(*([axis_range] * self.rank), indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=1)
        lengths = np.abs(coords).sum(axis=1)
        keep = lengths <= radius
        return self._embed(coords[keep]), lengths[keep]

    def sample_shell(self, radii: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        radii = np.asarray(radii, dtype=np.int64)
        count = radii.shape[0]
        if self.rank == 1:
            signs = np.where(rng.random(count) < 0.5, -1, 1)
            coords = (signs * radii)[:, None]
        elif self.rank == 2:
            coords = self._sample_plane_shell(radii, rng)
        else:
            coords = np.stack([self._sample_shell_point(int(r), rng) for r in radii]) \
                if count else np.zeros((0, self.rank), dtype=np.int64)
        return self._embed(coords)

    @staticmethod
    def _sample_plane_shell(radii: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        # The 4r points of the l1 sphere: quadrant q, offset j in [0, r)
        safe = np.maximum(radii, 1)
        idx = np.floor(rng.random(radii.shape[0]) * 4 * safe).astype(np.int64)
        idx = np.minimum(idx, 4 * safe - 1)
        q, j = idx // safe, idx % safe
        a, b = safe - j, j
        x = np.select([q == 0, q == 1, q == 2], [a, -b, -a], b)
        y = np.select([q == 0, q == 1, q == 2], [b, a, -b], -a)
        zero = radii == 0
        return np.stack([np.where(zero, 0, x), np.where(zero, 0, y)], axis=1)

    def _sample_shell_point(self, r: int, rng: np.random.Generator) -> np.ndarray:
        m = self.rank
        point = np.zeros(m, dtype=np.int64)
        if r == 0:
            return point
        ks = np.arange(1, min(m, r) + 1)
        weights = (2.0 ** ks) * binom(m, ks) * binom(r - 1, ks - 1)
        k = int(rng.choice(ks, p=weights / weights.sum()))
        support = rng.choice(m, size=k, replace=False)
        cuts = np.sort(rng.choice(np.arange(1, r), size=k - 1, replace=False)) if k > 1 else np.array([], dtype=np.int64)
        parts = np.diff(np.concatenate([[0], cuts, [r]]))
        signs = np.where(rng.random(k) < 0.5, -1, 1)
        point[support] = signs * parts
        return point

    def _embed(self, coords: np.ndarray) -> np.ndarray:
        out = np.zeros((coords.shape[0], self.spec.arity), dtype=np.int64)
        for col, (axis, stride) in enumerate(zip(self.axes, self.strides)):
            out[:, axis] = stride * coords[:, col]
        return out

    def describe(self) -> Dict[str, object]:
        return {"type": "AxisMap", "rank": self.rank, "axes": list(self.axes), "strides": list(self.strides)}


# ============================================================================
# Infinite dihedral subgroup <a, b> with a, b involutions
# ============================================================================

class DihedralMap(CoordinateMap):
    """
    H = <a, b> = { z^n a^e } with z = ab lying on one ambient axis.

    Intrinsic coordinates are (n, e); word length over {a, b} is
    2|n| for e = 0, 2n + 1 for n >= 0, e = 1 and 2|n| - 1 for n < 0, e = 1.
    """

    rank = 1

    def __init__(self, spec: GroupSpec, a: Element, b: Element, axis: int):
        super().__init__(spec)
        self.a = a
        self.b = b
        self.axis = axis
        z = spec.mul(a, b)
        expected = tuple(1 if i == axis else 0 for i in range(spec.arity))
        if z != expected:
            raise MeasureError(f"Product of dihedral generators {z} does not lie on axis {axis}")

    def _z_power(self, n: int) -> Element:
        return tuple(n if i == self.axis else 0 for i in range(self.spec.arity))

    def coordinates(self, g: Element) -> Optional[Coordinates]:
        for eps in (0, 1):
            h = g if eps == 0 else self.spec.mul(g, self.a, check=False)
            n = h[self.axis]
            if h == self._z_power(n):
                return (n, eps)
        return None

    def element(self, coords: Sequence[int]) -> Element:
        n, eps = int(coords[0]), int(coords[1])
        base = self._z_power(n)
        return self.spec.mul(base, self.a, check=False) if eps else base

    def length(self, coords: Sequence[int]) -> int:
        n, eps = int(coords[0]), int(coords[1])
        if eps == 0:
            return 2 * abs(n)
        return 2 * n + 1 if n >= 0 else 2 * abs(n) - 1

    def shell_sizes(self, radii: np.ndarray) -> np.ndarray:
        r = np.asarray(radii, dtype=float)
        return np.where(r == 0, 1.0, 2.0)

    def ball(self, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        radius = int(radius)
        rows, lengths = [], []
        half = radius // 2 + 1
        for n in range(-half, half + 1):
            for eps in (0, 1):
                length = self.length((n, eps))
                if length <= radius:
                    rows.append(self.element((n, eps)))
                    lengths.append(length)
        return np.asarray(rows, dtype=np.int64), np.asarray(lengths, dtype=np.int64)

    def sample_shell(self, radii: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        radii = np.asarray(radii, dtype=np.int64)
        coin = rng.random(radii.shape[0]) < 0.5
        odd = (radii & 1) == 1
        half = radii // 2
        # even r > 0: z^(+-r/2); odd r: z^k a or z^(-k-1) a with k = (r-1)/2
        n = np.where(odd, np.where(coin, -half - 1, half), np.where(coin, -half, half))
        n = np.where(radii == 0, 0, n)
        eps = odd.astype(np.int64)
        base = np.zeros((radii.shape[0], self.spec.arity), dtype=np.int64)
        base[:, self.axis] = n
        a_rows = np.broadcast_to(np.asarray(self.a, dtype=np.int64), base.shape)
        with_a = self.spec.batch_mul(base, a_rows) if base.shape[0] else base
        return np.where(eps[:, None] == 1, with_a, base)

    def describe(self) -> Dict[str, object]:
        return {"type": "DihedralMap", "rank": 1, "axis": self.axis, "a": list(self.a), "b": list(self.b)}


# ============================================================================
# Finite subgroups (closure by breadth-first search)
# ============================================================================

class FiniteMap(CoordinateMap):
    """Finite subgroup enumerated by BFS; the coordinate is the element index."""

    rank = 0

    def __init__(self, spec: GroupSpec, generators: Sequence[Element], limit: Optional[int] = None):
        super().__init__(spec)
        if limit is None:
            limit = int(ConfigLoader.get_instance().get_measure_defaults().get("finite_subgroup_limit", 10000))
        letters = list(generators) + [spec.inv(g) for g in generators]
        self.elements: List[Element] = [spec.identity]
        self.distances: List[int] = [0]
        self._index: Dict[Element, int] = {spec.identity: 0}
        queue = deque([spec.identity])
        while queue:
            g = queue.popleft()
            for s in letters:
                h = spec.mul(g, s, check=False)
                if h in self._index:
                    continue
                if len(self.elements) >= limit:
                    raise MeasureError(f"Subgroup generated by {list(generators)} exceeds {limit} elements")
                self._index[h] = len(self.elements)
                self.elements.append(h)
                self.distances.append(self.distances[self._index[g]] + 1)
                queue.append(h)
        self.max_length = max(self.distances)

    @property
    def order(self) -> int:
        return len(self.elements)

    def coordinates(self, g: Element) -> Optional[Coordinates]:
        idx = self._index.get(tuple(g))
        return None if idx is None else (idx,)

    def element(self, coords: Sequence[int]) -> Element:
        return self.elements[int(coords[0])]

    def length(self, coords: Sequence[int]) -> int:
        return self.distances[int(coords[0])]

    def shell_sizes(self, radii: np.ndarray) -> np.ndarray:
        counts = np.bincount(np.asarray(self.distances), minlength=self.max_length + 1).astype(float)
        r = np.asarray(radii, dtype=np.int64)
        inside = (r >= 0) & (r <= self.max_length)
        return np.where(inside, counts[np.clip(r, 0, self.max_length)], 0.0)

    def ball(self, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        dist = np.asarray(self.distances, dtype=np.int64)
        keep = dist <= radius
        return np.asarray(self.elements, dtype=np.int64)[keep], dist[keep]

    def sample_uniform(self, count: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.order, size=count)
        return np.asarray(self.elements, dtype=np.int64)[idx]

    def describe(self) -> Dict[str, object]:
        return {"type": "FiniteMap", "rank": 0, "order": self.order}


class NormalFormMap(CoordinateMap):
    """The whole group, coordinatized by its own normal form."""

    def __init__(self, spec: GroupSpec):
        super().__init__(spec)
        self.rank = spec.arity

    def coordinates(self, g: Element) -> Optional[Coordinates]:
        return tuple(g)

    def element(self, coords: Sequence[int]) -> Element:
        return self.spec.validate(coords)


# ============================================================================
# Subgroup specification
# ============================================================================

@dataclass(frozen=True)
class SubgroupSpec:
    """
    A subgroup H of a built-in group.

    Attributes:
        name: Catalog id (e.g. "s1", "H2", "u")
        generators: Named generators of H (ambient normal forms)
        growth_degree: Polynomial growth degree d of H
        coordinate_map: Membership, coordinates and intrinsic length
        core_generators: Ambient generator ids generating H ∩ N
    """
    name: str
    generators: Dict[str, Element]
    growth_degree: int
    coordinate_map: CoordinateMap
    core_generators: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        cmap = self.coordinate_map
        if isinstance(cmap, FiniteMap):
            if self.growth_degree != 0:
                raise MeasureError(f"Finite subgroup '{self.name}' must have growth degree 0")
        elif isinstance(cmap, (AxisMap, DihedralMap)) and self.growth_degree != cmap.rank:
            raise MeasureError(
                f"Subgroup '{self.name}': growth degree {self.growth_degree} "
                f"does not match coordinate rank {cmap.rank}"
            )

    @property
    def is_finite(self) -> bool:
        return isinstance(self.coordinate_map, FiniteMap)

    def contains(self, g: Element) -> bool:
        return self.coordinate_map.coordinates(tuple(g)) is not None


def subgroup_coordinates(sub: SubgroupSpec, g: Sequence[int]) -> Optional[Coordinates]:
    """Coordinates of g in the subgroup, or None when g is not a member."""
    return sub.coordinate_map.coordinates(tuple(int(x) for x in g))


def intrinsic_word_length(sub: SubgroupSpec, h: Sequence[int]) -> int:
    """Word length of h over the subgroup's own generators."""
    coords = subgroup_coordinates(sub, h)
    if coords is None:
        raise MembershipError(f"{tuple(h)} is not a member of subgroup '{sub.name}'")
    return sub.coordinate_map.length(coords)
