"""
LongJump - Built-in Groups

Exact arithmetic in canonical normal-form coordinates.

Normal forms:
    ZK(k)             (x_1, ..., x_k)
    Heisenberg3       (x_1, x_2, x_3) with (x)(y) = (x_1+y_1, x_2+y_2, x_3+y_3+x_1 y_2)
    DihedralInf       (n, e) meaning (uv)^n u^e, e in {0, 1}
    DeltaGroup        (n_1, n_2, n_3, e) meaning theta_1^n_1 theta_2^n_2 theta_3^n_3 s^e
                      with theta_1 = s't, theta_2 = st, theta_3 = st' and s theta_i s = theta_i^-1
    SemidirectZRotZ2  (k, n_1, n_2) with (k, n)(k', n') = (k+k', n + rho^k n')

Scalar products use Python integers. Batched products run on int64 arrays
and are checked against COORDINATE_BOUND.
"""

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from src.utils.errors import (
    CoordinateOverflowError,
    MalformedElementError,
    UnknownGeneratorError,
)

Element = Tuple[int, ...]
Letter = Tuple[str, int]

# Batched coordinates must stay strictly below this magnitude
COORDINATE_BOUND = 2 ** 62


class GroupKind(str, Enum):
    """Built-in group families."""
    ZK = "ZK"
    HEISENBERG3 = "Heisenberg3"
    DIHEDRAL_INF = "DihedralInf"
    DELTA = "DeltaGroup"
    SEMIDIRECT = "SemidirectZRotZ2"


# ============================================================================
# Infinite dihedral and Delta helpers
# ============================================================================

DIHEDRAL_U: Element = (0, 1)
DIHEDRAL_V: Element = (-1, 1)


def dihedral_mul(a: Element, b: Element) -> Element:
    """(n, e)(m, d) = (n + (-1)^e m, e xor d)."""
    return (a[0] + (-b[0] if a[1] else b[0]), a[1] ^ b[1])


def dihedral_inv(a: Element) -> Element:
    # (uv)^n u is an involution
    return a if a[1] else (-a[0], 0)


def delta_mul(a: Element, b: Element) -> Element:
    """(n, e)(m, d) = (n + (-1)^e m, e xor d) with n, m in Z^3."""
    if a[3]:
        return (a[0] - b[0], a[1] - b[1], a[2] - b[2], 1 ^ b[3])
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], b[3])


def delta_inv(a: Element) -> Element:
    # every theta^n s is an involution
    return a if a[3] else (-a[0], -a[1], -a[2], 0)


def delta_images(x: Element) -> Tuple[Element, Element, Element]:
    """
    Images of a Delta element under the three homomorphisms onto D_inf.

    psi_i keeps the theta_i exponent and the s parity, so psi_i sends
    theta_i to z and s to u while the other two thetas go to the identity.

    Args:
        x: Delta normal form (n_1, n_2, n_3, e)

    Returns:
        (psi_1(x), psi_2(x), psi_3(x)) as dihedral normal forms
    """
    n1, n2, n3, eps = x
    return (n1, eps), (n2, eps), (n3, eps)


def delta_from_images(p1: Element, p2: Element, p3: Element) -> Element:
    """Recover the Delta normal form from its three dihedral images."""
    if not p1[1] == p2[1] == p3[1]:
        raise MalformedElementError(f"Inconsistent dihedral images {p1}, {p2}, {p3}")
    return (p1[0], p2[0], p3[0], p1[1])


def _rotate(n1: int, n2: int, k: int) -> Tuple[int, int]:
    """rho^k (n1, n2) with rho(a, b) = (-b, a)."""
    q = k % 4
    if q == 0:
        return n1, n2
    if q == 1:
        return -n2, n1
    if q == 2:
        return -n1, -n2
    return n2, -n1


# ============================================================================
# Batched kernels
# ============================================================================

def _dihedral_mul_arrays(an, ae, bn, be):
    return an + np.where(ae == 0, bn, -bn), ae ^ be


def _delta_mul_arrays(A, B):
    flip = np.where(A[:, 3:4] == 0, 1, -1)
    out = A + flip * B
    out[:, 3] = A[:, 3] ^ B[:, 3]
    return out


def _rotate_arrays(n1, n2, k):
    q = k & 3
    r1 = np.select([q == 0, q == 1, q == 2], [n1, -n2, -n1], n2)
    r2 = np.select([q == 0, q == 1, q == 2], [n2, n1, -n2], -n1)
    return r1, r2


# ============================================================================
# Group specification
# ============================================================================

_ARITY = {
    GroupKind.HEISENBERG3: 3,
    GroupKind.DIHEDRAL_INF: 2,
    GroupKind.DELTA: 4,
    GroupKind.SEMIDIRECT: 3,
}

_FINITE_COORDINATES = {
    GroupKind.DIHEDRAL_INF: (1,),
    GroupKind.DELTA: (3,),
}


@dataclass(frozen=True)
class GroupSpec:
    """
    A built-in group together with its normal form.

    Attributes:
        kind: Group family
        k: Rank for ZK (ignored otherwise)
    """
    kind: GroupKind
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", GroupKind(self.kind))
        if self.kind is GroupKind.ZK and self.k < 1:
            raise MalformedElementError(f"ZK requires k >= 1, got k={self.k}")
        if self.kind is not GroupKind.ZK:
            object.__setattr__(self, "k", 1)

    # ------------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------------

    @property
    def arity(self) -> int:
        """Number of normal-form coordinates."""
        return self.k if self.kind is GroupKind.ZK else _ARITY[self.kind]

    @property
    def identity(self) -> Element:
        return (0,) * self.arity

    @property
    def finite_coordinates(self) -> Tuple[int, ...]:
        """Coordinates restricted to {0, 1}."""
        return _FINITE_COORDINATES.get(self.kind, ())

    @property
    def is_one_dimensional(self) -> bool:
        """Volume growth of degree one (ZK with k=1, DihedralInf)."""
        return (self.kind is GroupKind.ZK and self.k == 1) or self.kind is GroupKind.DIHEDRAL_INF

    @property
    def label(self) -> str:
        if self.kind is GroupKind.ZK:
            return f"Z^{self.k}"
        return self.kind.value

    def validate(self, a: Sequence[int]) -> Element:
        """Return `a` as a normal-form tuple or raise MalformedElementError."""
        try:
            coords = tuple(operator.index(x) for x in a)
        except TypeError as e:
            raise MalformedElementError(f"{self.label}: non-integer coordinates {a!r}") from e
        if len(coords) != self.arity:
            raise MalformedElementError(
                f"{self.label}: expected {self.arity} coordinates, got {len(coords)}"
            )
        for i in self.finite_coordinates:
            if coords[i] not in (0, 1):
                raise MalformedElementError(
                    f"{self.label}: coordinate {i} must be 0 or 1, got {coords[i]}"
                )
        return coords

    # ------------------------------------------------------------------
    # Scalar arithmetic
    # ------------------------------------------------------------------

    def mul(self, a: Sequence[int], b: Sequence[int], check: bool = True) -> Element:
        """Normal form of a*b."""
        if check:
            a, b = self.validate(a), self.validate(b)
        kind = self.kind
        if kind is GroupKind.ZK:
            return tuple(x + y for x, y in zip(a, b))
        if kind is GroupKind.HEISENBERG3:
            return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])
        if kind is GroupKind.DIHEDRAL_INF:
            return dihedral_mul(a, b)
        if kind is GroupKind.DELTA:
            return delta_mul(a, b)
        r1, r2 = _rotate(b[1], b[2], a[0])
        return (a[0] + b[0], a[1] + r1, a[2] + r2)

    def inv(self, a: Sequence[int], check: bool = True) -> Element:
        """Normal form of a^-1."""
        if check:
            a = self.validate(a)
        kind = self.kind
        if kind is GroupKind.ZK:
            return tuple(-x for x in a)
        if kind is GroupKind.HEISENBERG3:
            return (-a[0], -a[1], -a[2] + a[0] * a[1])
        if kind is GroupKind.DIHEDRAL_INF:
            return dihedral_inv(a)
        if kind is GroupKind.DELTA:
            return delta_inv(a)
        r1, r2 = _rotate(-a[1], -a[2], -a[0])
        return (-a[0], r1, r2)

    def power(self, a: Sequence[int], k: int) -> Element:
        """a^k by binary exponentiation."""
        a = self.validate(a)
        if k < 0:
            a, k = self.inv(a, check=False), -k
        result = self.identity
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base, check=False)
            base = self.mul(base, base, check=False)
            k >>= 1
        return result

    def conjugate(self, u: Sequence[int], s: Sequence[int]) -> Element:
        """u s u^-1."""
        return self.mul(self.mul(u, s), self.inv(u))

    # ------------------------------------------------------------------
    # Generators and words
    # ------------------------------------------------------------------

    def generators(self) -> Dict[str, Element]:
        """Named generators available to words, subgroups and weight systems."""
        kind = self.kind
        if kind is GroupKind.ZK:
            return {
                f"e{i + 1}": tuple(1 if j == i else 0 for j in range(self.k))
                for i in range(self.k)
            }
        if kind is GroupKind.HEISENBERG3:
            return {"s1": (1, 0, 0), "s2": (0, 1, 0), "s3": (0, 0, 1)}
        if kind is GroupKind.DIHEDRAL_INF:
            return {"u": DIHEDRAL_U, "v": DIHEDRAL_V, "z": (1, 0)}
        if kind is GroupKind.DELTA:
            return {
                "s": (0, 0, 0, 1),
                "sp": (1, -1, 0, 1),
                "t": (0, -1, 0, 1),
                "tp": (0, 0, -1, 1),
                "theta1": (1, 0, 0, 0),
                "theta2": (0, 1, 0, 0),
                "theta3": (0, 0, 1, 0),
            }
        return {"s": (1, 0, 0), "v1": (0, 1, 0), "v2": (0, 0, 1), "s4": (4, 0, 0)}

    def generator(self, name: str) -> Element:
        gens = self.generators()
        if name not in gens:
            raise UnknownGeneratorError(
                f"{self.label} has no generator '{name}' (known: {', '.join(gens)})"
            )
        return gens[name]

    def evaluate_word(self, letters: Iterable[Letter]) -> Element:
        """Left-to-right product of (generator id, exponent) letters."""
        result = self.identity
        for name, exponent in letters:
            result = self.mul(result, self.power(self.generator(name), exponent), check=False)
        return result

    # ------------------------------------------------------------------
    # Batched arithmetic
    # ------------------------------------------------------------------

    def as_array(self, elements: Iterable[Sequence[int]]) -> np.ndarray:
        """Stack elements into an (N, arity) int64 array."""
        rows = [self.validate(e) for e in elements]
        if not rows:
            return np.zeros((0, self.arity), dtype=np.int64)
        return np.asarray(rows, dtype=np.int64)

    def batch_mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Row-wise products of two (N, arity) arrays (broadcasting allowed)."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        A, B = np.broadcast_arrays(A, B)
        if A.size == 0:
            return np.zeros(A.shape, dtype=np.int64)
        self._check_bound(A, B)
        kind = self.kind
        if kind is GroupKind.ZK:
            return A + B
        if kind is GroupKind.HEISENBERG3:
            out = A + B
            out[:, 2] += A[:, 0] * B[:, 1]
            return out
        if kind is GroupKind.DIHEDRAL_INF:
            n, e = _dihedral_mul_arrays(A[:, 0], A[:, 1], B[:, 0], B[:, 1])
            return np.stack([n, e], axis=1)
        if kind is GroupKind.DELTA:
            return _delta_mul_arrays(A, B)
        r1, r2 = _rotate_arrays(B[:, 1], B[:, 2], A[:, 0])
        return np.stack([A[:, 0] + B[:, 0], A[:, 1] + r1, A[:, 2] + r2], axis=1)

    def batch_inv(self, A: np.ndarray) -> np.ndarray:
        """Row-wise inverses of an (N, arity) array."""
        A = np.asarray(A, dtype=np.int64)
        kind = self.kind
        if kind is GroupKind.ZK:
            return -A
        if kind is GroupKind.HEISENBERG3:
            self._check_bound(A, A)
            return np.stack([-A[:, 0], -A[:, 1], -A[:, 2] + A[:, 0] * A[:, 1]], axis=1)
        if kind is GroupKind.DIHEDRAL_INF:
            return np.stack([np.where(A[:, 1] == 0, -A[:, 0], A[:, 0]), A[:, 1]], axis=1)
        if kind is GroupKind.DELTA:
            flip = np.where(A[:, 3:4] == 0, -1, 1)
            out = flip * A
            out[:, 3] = A[:, 3]
            return out
        r1, r2 = _rotate_arrays(-A[:, 1], -A[:, 2], -A[:, 0])
        return np.stack([-A[:, 0], r1, r2], axis=1)

    def _check_bound(self, A: np.ndarray, B: np.ndarray):
        if A.size == 0 or B.size == 0:
            return
        max_a = int(np.abs(A).max())
        max_b = int(np.abs(B).max())
        bound = max_a + max_b + 1
        if self.kind is GroupKind.HEISENBERG3:
            # only the central coordinate picks up a product term
            bound = (
                int(np.abs(A[:, 0]).max()) * int(np.abs(B[:, 1]).max())
                + int(np.abs(A[:, 2]).max()) + int(np.abs(B[:, 2]).max()) + 1
            )
            bound = max(bound, max_a + max_b + 1)
        if bound >= COORDINATE_BOUND:
            raise CoordinateOverflowError(
                f"{self.label}: batched product may exceed 2^62 (operands up to {max_a}, {max_b})"
            )


# ============================================================================
# Module-level operations
# ============================================================================

def mul(spec: GroupSpec, a: Sequence[int], b: Sequence[int]) -> Element:
    return spec.mul(a, b)


def inv(spec: GroupSpec, a: Sequence[int]) -> Element:
    return spec.inv(a)


def evaluate_word(spec: GroupSpec, letters: Iterable[Letter]) -> Element:
    return spec.evaluate_word(letters)


def parse_element(spec: GroupSpec, text: str) -> Element:
    """Parse a semicolon-joined coordinate string such as "0;0;4"."""
    parts = [p.strip() for p in text.split(";") if p.strip()]
    try:
        values = [int(p) for p in parts]
    except ValueError as e:
        raise MalformedElementError(f"Cannot parse element '{text}'") from e
    return spec.validate(values)


def format_element(element: Sequence[int]) -> str:
    return ";".join(str(int(x)) for x in element)


def elements_from_array(A: np.ndarray) -> List[Element]:
    return [tuple(int(x) for x in row) for row in np.asarray(A)]
