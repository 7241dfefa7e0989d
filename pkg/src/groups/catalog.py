"""
LongJump - Built-in Subgroup Catalog and Nilpotent Approximations

Each built-in group ships with:
    - a standard symmetric generating set S_0,
    - named subgroups H that jump components may live on,
    - a finite-index normal nilpotent subgroup N with coset representatives,
    - layer descriptors (rank, class tag) used to assemble the volume function.

Class tags are small expression trees over generator weights:
    ("gen", id)          weight attached to the generator
    ("prod", t1, t2)     product of two classes (commutator layers)
    ("max", t1, ...)     fastest-growing class among the present ones
    ("min", t1, ...)     slowest class; absent as soon as one operand is absent
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from src.groups.elements import Element, GroupKind, GroupSpec
from src.groups.subgroups import (
    AxisMap,
    DihedralMap,
    FiniteMap,
    NormalFormMap,
    SubgroupSpec,
)
from src.utils.errors import GeometryError, UnknownSubgroupError

ClassTag = Tuple


def gen(name: str) -> ClassTag:
    return ("gen", name)


# ============================================================================
# Standard generators and subgroup catalog
# ============================================================================

def standard_generators(spec: GroupSpec) -> List[str]:
    """Ids of the standard generating set S_0 (inverses implied)."""
    kind = spec.kind
    if kind is GroupKind.ZK:
        return [f"e{i + 1}" for i in range(spec.k)]
    if kind is GroupKind.HEISENBERG3:
        return ["s1", "s2", "s3"]
    if kind is GroupKind.DIHEDRAL_INF:
        return ["u", "v"]
    if kind is GroupKind.DELTA:
        return ["s", "sp", "t", "tp"]
    return ["s", "v1", "v2"]


def builtin_subgroups(spec: GroupSpec) -> Dict[str, SubgroupSpec]:
    """All subgroups a jump component may be attached to."""
    g = spec.generators()
    kind = spec.kind
    subs: List[SubgroupSpec] = []

    if kind is GroupKind.ZK:
        for i in range(spec.k):
            name = f"e{i + 1}"
            subs.append(SubgroupSpec(name, {name: g[name]}, 1, AxisMap(spec, [i]), (name,)))
        if spec.k > 1:
            names = standard_generators(spec)
            subs.append(SubgroupSpec(
                "all", {n: g[n] for n in names}, spec.k, AxisMap(spec, range(spec.k)), tuple(names),
            ))

    elif kind is GroupKind.HEISENBERG3:
        for i, name in enumerate(("s1", "s2", "s3")):
            subs.append(SubgroupSpec(name, {name: g[name]}, 1, AxisMap(spec, [i]), (name,)))
        for name, axes, gens in (("s1s3", (0, 2), ("s1", "s3")), ("s2s3", (1, 2), ("s2", "s3"))):
            subs.append(SubgroupSpec(name, {n: g[n] for n in gens}, 2, AxisMap(spec, axes), gens))

    elif kind is GroupKind.DIHEDRAL_INF:
        for name in ("u", "v"):
            subs.append(SubgroupSpec(name, {name: g[name]}, 0, FiniteMap(spec, [g[name]])))
        subs.append(SubgroupSpec("z", {"z": g["z"]}, 1, AxisMap(spec, [0]), ("z",)))
        subs.append(SubgroupSpec("uv", {"u": g["u"], "v": g["v"]}, 1, DihedralMap(spec, g["u"], g["v"], 0), ("z",)))

    elif kind is GroupKind.DELTA:
        for i, (name, a, b) in enumerate((("H1", "sp", "t"), ("H2", "s", "t"), ("H3", "s", "tp"))):
            theta = f"theta{i + 1}"
            subs.append(SubgroupSpec(name, {a: g[a], b: g[b]}, 1, DihedralMap(spec, g[a], g[b], i), (theta,)))

    else:
        subs.append(SubgroupSpec("H1", {"s4": g["s4"], "v1": g["v1"]}, 2, AxisMap(spec, (0, 1), (4, 1)), ("s4", "v1")))
        subs.append(SubgroupSpec("H2", {"s4": g["s4"], "v2": g["v2"]}, 2, AxisMap(spec, (0, 2), (4, 1)), ("s4", "v2")))
        subs.append(SubgroupSpec("s", {"s": g["s"]}, 1, AxisMap(spec, [0]), ("s4",)))

    return {sub.name: sub for sub in subs}


def get_subgroup(spec: GroupSpec, name: str) -> SubgroupSpec:
    catalog = builtin_subgroups(spec)
    if name not in catalog:
        raise UnknownSubgroupError(
            f"{spec.label} has no built-in subgroup '{name}' (known: {', '.join(catalog)})"
        )
    return catalog[name]


# ============================================================================
# Nilpotent approximation
# ============================================================================

@dataclass(frozen=True)
class Layer:
    """
    One weight class of the volume function.

    Attributes:
        rank: Number of free coordinates governed by this class
        coordinates: Ambient coordinate indices measured by the class
        tag: Class expression resolved against generator weights
    """
    rank: int
    coordinates: Tuple[int, ...]
    tag: ClassTag


@dataclass(frozen=True)
class NilpotentApprox:
    """
    Finite-index normal nilpotent subgroup N with coset data.

    Attributes:
        N: The subgroup, with its generating set Xi_0
        coset_reps: (id, element) pairs, the first one being the identity
        layers: Weight classes of N with their ranks
    """
    N: SubgroupSpec
    coset_reps: Tuple[Tuple[str, Element], ...]
    layers: Tuple[Layer, ...]

    @property
    def index(self) -> int:
        return len(self.coset_reps)

    def rep_of(self, spec: GroupSpec, g: Element) -> Tuple[str, Element]:
        """Stored representative u with g u^-1 in N."""
        matches = [
            (name, u) for name, u in self.coset_reps
            if self.N.contains(spec.mul(g, spec.inv(u, check=False), check=False))
        ]
        if len(matches) != 1:
            raise GeometryError(f"{g} lies in {len(matches)} stored cosets of N, expected exactly one")
        return matches[0]


def builtin_nilpotent_approx(spec: GroupSpec) -> NilpotentApprox:
    g = spec.generators()
    e = spec.identity
    kind = spec.kind

    if kind is GroupKind.ZK:
        names = standard_generators(spec)
        N = SubgroupSpec("N", {n: g[n] for n in names}, spec.k, AxisMap(spec, range(spec.k)), tuple(names))
        layers = tuple(Layer(1, (i,), gen(n)) for i, n in enumerate(names))
        return NilpotentApprox(N, (("e", e),), layers)

    if kind is GroupKind.HEISENBERG3:
        N = SubgroupSpec("N", {n: g[n] for n in ("s1", "s2", "s3")}, 4, NormalFormMap(spec), ("s1", "s2", "s3"))
        layers = (
            Layer(1, (0,), gen("s1")),
            Layer(1, (1,), gen("s2")),
            Layer(1, (2,), ("max", gen("s3"), ("prod", gen("s1"), gen("s2")))),
        )
        return NilpotentApprox(N, (("e", e),), layers)

    if kind is GroupKind.DIHEDRAL_INF:
        N = SubgroupSpec("N", {"z": g["z"]}, 1, AxisMap(spec, [0]), ("z",))
        layers = (Layer(1, (0,), ("max", gen("z"), ("min", gen("u"), gen("v")))),)
        return NilpotentApprox(N, (("e", e), ("u", g["u"])), layers)

    if kind is GroupKind.DELTA:
        thetas = ("theta1", "theta2", "theta3")
        N = SubgroupSpec("N", {t: g[t] for t in thetas}, 3, AxisMap(spec, (0, 1, 2)), thetas)
        pairs = (("sp", "t"), ("s", "t"), ("s", "tp"))
        layers = tuple(
            Layer(1, (i,), ("max", gen(thetas[i]), ("min", gen(a), gen(b))))
            for i, (a, b) in enumerate(pairs)
        )
        return NilpotentApprox(N, (("e", e), ("s", g["s"])), layers)

    N = SubgroupSpec(
        "N", {n: g[n] for n in ("s4", "v1", "v2")}, 3, AxisMap(spec, (0, 1, 2), (4, 1, 1)), ("s4", "v1", "v2"),
    )
    reps = tuple((f"s{j}" if j else "e", (j, 0, 0)) for j in range(4))
    layers = (
        Layer(1, (0,), ("max", gen("s"), gen("s4"))),
        Layer(2, (1, 2), ("max", gen("v1"), gen("v2"))),
    )
    return NilpotentApprox(N, reps, layers)


def coset_decompose(spec: GroupSpec, approx: NilpotentApprox, g: Sequence[int]) -> Tuple[Element, Tuple[str, Element]]:
    """
    Write g = h u with h in N and u a stored coset representative.

    Returns:
        (h, (rep id, u))
    """
    g = spec.validate(g)
    name, u = approx.rep_of(spec, g)
    h = spec.mul(g, spec.inv(u, check=False), check=False)
    return h, (name, u)
