"""
LongJump - Adapted Geometry

Builds the weighted generating systems on G and on N from a jump measure,
resolves the nilpotent layer descriptors into class functions, and exposes
the closed-form quasi-norm, its w_*-rescaling, ball counts and bounded
product certificates.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.loader import ConfigLoader
from src.groups.catalog import ClassTag, Layer, NilpotentApprox
from src.groups.elements import Element, GroupKind, GroupSpec, format_element
from src.geometry.weights import (
    ClassFunction,
    ClassKey,
    InverseWeight,
    LinearSqrtCapWeight,
    MaxWeight,
    PowerWeight,
    WeightFunction,
    key_max,
    key_min,
    key_product,
)
from src.utils.errors import BallCapError, GeometryError
from src.utils.logger import LongJumpLogger

# Relative slack when converting class values to integer coordinate bounds
BOUND_SLACK = 1e-12


def _configured_ball_cap() -> int:
    return int(ConfigLoader.get_instance().get_geometry_defaults().get("ball_cap", 50_000_000))


# ============================================================================
# Weight systems
# ============================================================================

@dataclass
class WeightSystem:
    """
    Generators with their budget weights.

    Attributes:
        sigma: Generator id -> element (one representative per {s, s^-1})
        weights: Generator id -> weight F_s
        sources: Generator id -> where the weight came from ("S0", subgroup names)
    """
    sigma: Dict[str, Element] = field(default_factory=dict)
    weights: Dict[str, WeightFunction] = field(default_factory=dict)
    sources: Dict[str, List[str]] = field(default_factory=dict)

    def keys(self) -> Dict[str, ClassKey]:
        return {name: w.key for name, w in self.weights.items()}

    @property
    def min_index(self) -> float:
        return min(w.index for w in self.weights.values())

    @property
    def max_index(self) -> float:
        return max(w.index for w in self.weights.values())

    def ordered_classes(self) -> List[ClassKey]:
        """Distinct class keys, slowest first (ties merged)."""
        return sorted(set(self.keys().values()))

    def to_dict(self) -> List[Dict[str, Any]]:
        return [
            {
                "id": name,
                "element": list(self.sigma[name]),
                "weight": self.weights[name].describe(),
                "key": list(self.weights[name].key),
                "sources": list(self.sources[name]),
            }
            for name in self.sigma
        ]


class _SystemBuilder:
    """Collects (generator, weight) pairs and merges them modulo inverses."""

    def __init__(self, spec: GroupSpec):
        self.spec = spec
        self._names: Dict[Element, str] = {}
        self._elements: Dict[str, Element] = {}
        self._weights: Dict[str, List[WeightFunction]] = {}
        self._sources: Dict[str, List[str]] = {}

    def add(self, name: str, element: Element, weight: WeightFunction, source: str):
        if element == self.spec.identity:
            return
        canonical = min(element, self.spec.inv(element, check=False))
        existing = self._names.get(canonical)
        if existing is None:
            self._names[canonical] = name
            self._elements[name] = element
            self._weights[name] = []
            self._sources[name] = []
            existing = name
        self._weights[existing].append(weight)
        if source not in self._sources[existing]:
            self._sources[existing].append(source)

    def build(self) -> WeightSystem:
        system = WeightSystem()
        for name, element in self._elements.items():
            members = self._weights[name]
            system.sigma[name] = element
            system.weights[name] = members[0] if len(members) == 1 else MaxWeight(members)
            system.sources[name] = self._sources[name]
        return system


# ============================================================================
# Volume function
# ============================================================================

@dataclass(frozen=True)
class VolumeExponent:
    """Aggregate growth of the volume function."""
    degree: float
    log_power: float
    loglog_power: float


@dataclass
class VolumeFunction:
    """
    V(R) = prod_j class_j(R)^rank_j.

    Attributes:
        factors: (class function, rank) pairs in layer order
    """
    factors: List[Tuple[ClassFunction, int]]

    def __call__(self, R: float) -> float:
        value = 1.0
        for cls, rank in self.factors:
            value *= float(cls(R)) ** rank
        return value

    def exponent(self) -> VolumeExponent:
        return VolumeExponent(
            degree=sum(rank * cls.key[0] for cls, rank in self.factors),
            log_power=sum(rank * cls.key[1] for cls, rank in self.factors),
            loglog_power=sum(rank * cls.key[2] for cls, rank in self.factors),
        )

    def inverse(self, v: float) -> float:
        """Smallest R with V(R) >= v (bisection)."""
        if v <= 0:
            return 0.0
        lo, hi = 0.0, 1.0
        while self(hi) < v:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self(mid) < v:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * hi:
                break
        return hi


# ============================================================================
# Certificates
# ============================================================================

@dataclass
class Certificate:
    """
    Product certificate g = prod of letters.

    Attributes:
        letters: (generator id, exponent) pairs, left to right
        usage: Generator id -> |total exponent| / class value at ||g||
        constant: Largest usage ratio
    """
    letters: List[Tuple[str, int]]
    usage: Dict[str, float]
    constant: float


def resolve_tag(tag: ClassTag, keys: Dict[str, ClassKey]) -> Optional[ClassKey]:
    """
    Evaluate a layer class tag against generator keys.

    Absent generators propagate: "max" skips them, "min" and "prod" become absent.
    """
    op = tag[0]
    if op == "gen":
        return keys.get(tag[1])
    values = [resolve_tag(t, keys) for t in tag[1:]]
    if op == "max":
        present = [v for v in values if v is not None]
        return key_max(present) if present else None
    if any(v is None for v in values):
        return None
    if op == "min":
        return key_min(values)
    if op == "prod":
        out = values[0]
        for v in values[1:]:
            out = key_product(out, v)
        return out
    raise GeometryError(f"Unknown class tag operator '{op}'")


# ============================================================================
# Adapted geometry
# ============================================================================

@dataclass
class AdaptedGeometry:
    """
    Geometry adapted to a jump measure.

    Attributes:
        spec: The ambient group
        approx: Nilpotent approximation supplying layers and cosets
        system_g: Weight system on Sigma_G
        system_n: Weight system on Sigma_N
        w_star: Exponent used by the rescaled norm
        layers: (layer, class function) pairs
        volume: Volume function assembled from the layers
        label: "adapted" or "naive"
    """
    spec: GroupSpec
    approx: NilpotentApprox
    system_g: WeightSystem
    system_n: WeightSystem
    w_star: float
    layers: List[Tuple[Layer, ClassFunction]]
    volume: VolumeFunction
    label: str = "adapted"
    ball_cap: int = field(default_factory=_configured_ball_cap)

    @property
    def norm_kind(self) -> str:
        return self.spec.kind.value

    # ------------------------------------------------------------------
    # Norms
    # ------------------------------------------------------------------

    def closed_form_norm(self, g: Sequence[int]) -> float:
        """max over layer coordinates of class^-1(|x_j|), and |e| on finite coordinates."""
        g = self.spec.validate(g)
        value = 0.0
        for layer, cls in self.layers:
            for c in layer.coordinates:
                if g[c]:
                    value = max(value, float(cls.inverse(abs(g[c]))))
        for c in self.spec.finite_coordinates:
            value = max(value, float(g[c]))
        return value

    def closed_form_norm_batch(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        value = np.zeros(A.shape[0], dtype=float)
        for layer, cls in self.layers:
            for c in layer.coordinates:
                value = np.maximum(value, np.asarray(cls.inverse(np.abs(A[:, c]).astype(float))))
        for c in self.spec.finite_coordinates:
            value = np.maximum(value, A[:, c].astype(float))
        return value

    def rescale(self, N: Any) -> Any:
        """(1 + N)^w_* - 1."""
        return np.expm1(self.w_star * np.log1p(N))

    def norm_g2(self, g: Sequence[int]) -> float:
        return float(self.rescale(self.closed_form_norm(g)))

    def norm_g2_batch(self, A: np.ndarray) -> np.ndarray:
        return self.rescale(self.closed_form_norm_batch(A))

    def radius_from_g2(self, r: float) -> float:
        """Closed-norm radius matching a radius in the rescaled scale."""
        return math.expm1(math.log1p(r) / self.w_star)

    # ------------------------------------------------------------------
    # Balls
    # ------------------------------------------------------------------

    def coordinate_bounds(self, R: float) -> List[int]:
        """Largest |x_j| allowed per ambient coordinate inside the ball of radius R."""
        bounds = [0] * self.spec.arity
        for layer, cls in self.layers:
            bound = int(math.floor(float(cls(R)) * (1.0 + BOUND_SLACK))) if R > 0 else 0
            for c in layer.coordinates:
                bounds[c] = bound
        for c in self.spec.finite_coordinates:
            bounds[c] = 1 if R >= 1 else 0
        return bounds

    def ball_count(self, R: float, cap: Optional[int] = None) -> int:
        """Exact number of elements with closed_form_norm <= R."""
        if R < 0:
            raise GeometryError(f"Ball radius must be non-negative, got {R}")
        cap = self.ball_cap if cap is None else cap
        count = 1
        finite = set(self.spec.finite_coordinates)
        for c, bound in enumerate(self.coordinate_bounds(R)):
            count *= (bound + 1) if c in finite else (2 * bound + 1)
        if count > cap:
            raise BallCapError(f"Ball of radius {R} has {count} elements (cap {cap})", count)
        return count

    def enumerate_ball(self, R: float, cap: Optional[int] = None) -> np.ndarray:
        """Elements of the closed-norm ball, lexicographically sorted."""
        self.ball_count(R, cap)
        finite = set(self.spec.finite_coordinates)
        ranges = [
            np.arange(0, bound + 1) if c in finite else np.arange(-bound, bound + 1)
            for c, bound in enumerate(self.coordinate_bounds(R))
        ]
        grids = np.meshgrid(*ranges, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    # ------------------------------------------------------------------
    # Certificates
    # ------------------------------------------------------------------

    def decompose_bounded(self, g: Sequence[int]) -> Certificate:
        """Write g as powers of layer generators plus bounded connector words."""
        g = self.spec.validate(g)
        if g == self.spec.identity:
            return Certificate([], {}, 0.0)
        R = self.closed_form_norm(g)
        classes = {c: cls for layer, cls in self.layers for c in layer.coordinates}
        kind = self.spec.kind
        # generator id -> coordinate whose class measures its usage (None: finite part)
        drives: Dict[str, Optional[int]] = {}
        letters: List[Tuple[str, int]] = []

        if kind is GroupKind.ZK:
            letters = [(f"e{i + 1}", x) for i, x in enumerate(g)]
            drives = {f"e{i + 1}": i for i in range(len(g))}
        elif kind is GroupKind.HEISENBERG3:
            a, b, c = g
            letters = [("s1", a), ("s2", b)] + self._heisenberg_connectors(c - a * b, R, classes)
            drives = {"s1": 0, "s2": 1, "s3": 2}
        elif kind is GroupKind.DIHEDRAL_INF:
            letters = [("z", g[0]), ("u", g[1])]
            drives = {"z": 0, "u": None}
        elif kind is GroupKind.DELTA:
            letters = [(f"theta{i + 1}", g[i]) for i in range(3)] + [("s", g[3])]
            drives = {"theta1": 0, "theta2": 1, "theta3": 2, "s": None}
        else:
            m, j = divmod(g[0], 4)
            letters = [("s4", m), ("v1", g[1]), ("v2", g[2]), ("s", j)]
            drives = {"s4": 0, "v1": 1, "v2": 2, "s": None}

        letters = [(name, x) for name, x in letters if x]
        totals: Dict[str, int] = {}
        for name, x in letters:
            totals[name] = totals.get(name, 0) + abs(x)
        usage = {}
        for name, total in totals.items():
            coordinate = drives[name]
            scale = 1.0 if coordinate is None else max(float(classes[coordinate](R)), 1.0)
            usage[name] = total / scale
        return Certificate(letters, usage, max(usage.values()) if usage else 0.0)

    def _heisenberg_connectors(self, d: int, R: float, classes) -> List[Tuple[str, int]]:
        """Word with x_1 = x_2 = 0 and central coordinate d."""
        if d == 0:
            return []
        keys = {c: cls.key for c, cls in classes.items()}
        if keys[2] > key_product(keys[0], keys[1]):
            return [("s3", d)]
        sign = 1 if d > 0 else -1
        P = max(1, int(math.floor(float(classes[0](R)))))
        q0, r = divmod(abs(d), P)
        word: List[Tuple[str, int]] = []
        # [s1^p, s2^q] = (0, 0, pq)
        if q0:
            word += [("s1", P), ("s2", sign * q0), ("s1", -P), ("s2", -sign * q0)]
        if r:
            word += [("s1", r), ("s2", sign), ("s1", -r), ("s2", -sign)]
        return word

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        exponent = self.volume.exponent()
        return {
            "group": self.spec.label,
            "geometry": self.label,
            "w_star": self.w_star,
            "system_g": self.system_g.to_dict(),
            "system_n": self.system_n.to_dict(),
            "volume": {
                "factors": [
                    {"rank": layer.rank, "coordinates": list(layer.coordinates), **cls.describe()}
                    for layer, cls in self.layers
                ],
                "degree": exponent.degree,
                "log_power": exponent.log_power,
                "loglog_power": exponent.loglog_power,
            },
            "coset_reps": [
                {"id": name, "element": format_element(u)} for name, u in self.approx.coset_reps
            ],
        }


# ============================================================================
# Construction
# ============================================================================

def _resolve_layers(approx: NilpotentApprox, system: WeightSystem) -> List[Tuple[Layer, ClassFunction]]:
    keys = system.keys()
    layers = []
    for layer in approx.layers:
        key = resolve_tag(layer.tag, keys)
        if key is None:
            raise GeometryError(f"Layer {layer.coordinates} has no weight class (tag {layer.tag})")
        layers.append((layer, ClassFunction(key)))
    return layers


def _select_w_star(system: WeightSystem, w_star: Optional[float]) -> float:
    bound = system.min_index
    if w_star is None:
        return 0.5 * bound
    if not 0 < w_star < bound:
        raise GeometryError(f"w_star must lie in (0, {bound}), got {w_star}")
    return float(w_star)


def build_adapted_geometry(
    spec: GroupSpec,
    approx: NilpotentApprox,
    measure,
    w_star: Optional[float] = None,
    ball_cap: Optional[int] = None,
) -> AdaptedGeometry:
    """
    Geometry on G and on N adapted to a jump measure.

    Sigma_G carries Phi_0^-1 on S_0 and Phi_i^-1 on each S_i (a generating set
    of H_i ∩ N); an element in several sets keeps the pointwise maximum.
    Sigma_N carries Phi_0^-1 on the generators of N and Phi_i^-1 on the
    conjugates u S_i u^-1 over the stored coset representatives.

    Args:
        spec: Ambient group
        approx: Nilpotent approximation
        measure: Built jump measure (components with subgroup and Phi, mu_0 generators)
        w_star: Optional override, must lie strictly below the minimal index
        ball_cap: Element cap for ball enumeration (geometry.ball_cap by default)

    Returns:
        AdaptedGeometry
    """
    logger = LongJumpLogger.get_logger()
    logger.debug(f"Step 1: building Sigma_G for {spec.label}")
    sigma_g = _SystemBuilder(spec)
    for name, element in measure.mu0_generators().items():
        sigma_g.add(name, element, LinearSqrtCapWeight(), "S0")
    for component in measure.components:
        weight = InverseWeight(component.Phi)
        for gen_id in component.subgroup.core_generators:
            element = spec.generator(gen_id)
            if not approx.N.contains(element):
                raise GeometryError(f"Generator '{gen_id}' of subgroup '{component.subgroup.name}' is not in N")
            sigma_g.add(gen_id, element, weight, component.subgroup.name)
    system_g = sigma_g.build()

    logger.debug("Step 2: building Sigma_N from conjugated generating sets")
    sigma_n = _SystemBuilder(spec)
    for name, element in approx.N.generators.items():
        sigma_n.add(name, element, LinearSqrtCapWeight(), "S0")
    for component in measure.components:
        weight = InverseWeight(component.Phi)
        for gen_id in component.subgroup.core_generators:
            s = spec.generator(gen_id)
            for rep_name, u in approx.coset_reps:
                conj = spec.mul(spec.mul(u, s, check=False), spec.inv(u, check=False), check=False)
                label = gen_id if rep_name == "e" else f"{rep_name}.{gen_id}.{rep_name}^-1"
                sigma_n.add(label, conj, weight, component.subgroup.name)
    system_n = sigma_n.build()

    logger.debug("Step 3: resolving layer classes")
    layers = _resolve_layers(approx, system_g)
    geom = AdaptedGeometry(
        spec=spec,
        approx=approx,
        system_g=system_g,
        system_n=system_n,
        w_star=_select_w_star(system_g, w_star),
        layers=layers,
        volume=VolumeFunction([(cls, layer.rank) for layer, cls in layers]),
        ball_cap=_configured_ball_cap() if ball_cap is None else int(ball_cap),
    )
    logger.debug(f"Adapted geometry for {spec.label}: volume degree {geom.volume.exponent().degree:g}, w_* = {geom.w_star:g}")
    return geom


def build_naive_geometry(spec: GroupSpec, approx: NilpotentApprox, measure) -> AdaptedGeometry:
    """
    Nilpotent-style geometry: Phi_i^-1 placed directly on the generators of
    each H_i, Phi_0^-1 on the remaining standard generators.
    """
    builder = _SystemBuilder(spec)
    covered = set()
    for component in measure.components:
        weight = InverseWeight(component.Phi)
        for gen_id, element in component.subgroup.generators.items():
            builder.add(gen_id, element, weight, component.subgroup.name)
            covered.add(gen_id)
    for name, element in measure.mu0_generators().items():
        if name not in covered:
            builder.add(name, element, LinearSqrtCapWeight(), "S0")
    system = builder.build()
    layers = _resolve_layers(approx, system)
    return AdaptedGeometry(
        spec=spec,
        approx=approx,
        system_g=system,
        system_n=system,
        w_star=_select_w_star(system, None),
        layers=layers,
        volume=VolumeFunction([(cls, layer.rank) for layer, cls in layers]),
        label="naive",
    )


def geometry_from_weights(
    spec: GroupSpec,
    approx: NilpotentApprox,
    weights: Dict[str, WeightFunction],
    w_star: Optional[float] = None,
) -> AdaptedGeometry:
    """Geometry from explicit generator weights (N-system = G-system)."""
    builder = _SystemBuilder(spec)
    for name, weight in weights.items():
        builder.add(name, spec.generator(name), weight, "explicit")
    system = builder.build()
    layers = _resolve_layers(approx, system)
    return AdaptedGeometry(
        spec=spec,
        approx=approx,
        system_g=system,
        system_n=system,
        w_star=_select_w_star(system, w_star),
        layers=layers,
        volume=VolumeFunction([(cls, layer.rank) for layer, cls in layers]),
        label="explicit",
    )


def power_weights(exponents: Dict[str, float]) -> Dict[str, WeightFunction]:
    """Power weights (1+t)^w - 1 keyed by generator id."""
    return {name: PowerWeight(w) for name, w in exponents.items()}
