"""
LongJump - Jump Measures

mu = p_0 mu_0 + sum_i p_i mu_i where mu_0 is finitely supported and
symmetric, and each mu_i lives on a subgroup H_i:

    mu_i(h) = Z_i^-1 [(1 + |h|_i)^d_i phi_i(|h|_i)]^-1,    h in H_i

with phi_i(t) = (1+t)^alpha log(e+t)^beta. Finite subgroups carry the
uniform law (optionally with a prescribed mass at the identity).
"""

import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from src.config.loader import ConfigLoader
from src.geometry.weights import ClassKey, JumpProfile, TransformedWeight, phi_to_Phi
from src.groups.catalog import standard_generators
from src.groups.elements import Element, GroupSpec, format_element
from src.groups.subgroups import SubgroupSpec, subgroup_coordinates
from src.utils.errors import (
    GenerationError,
    MeasureError,
    OrderingError,
    WeightSumError,
)
from src.utils.logger import LongJumpLogger


# ============================================================================
# Specifications
# ============================================================================

@dataclass
class ComponentSpec:
    """
    One power-law component p_i mu_i.

    Attributes:
        subgroup: The subgroup H_i
        weight: Probability p_i > 0
        alpha: Tail index of phi_i
        beta: Log correction of phi_i
        identity_mass: Mass at e for finite subgroups (None: uniform)
    """
    subgroup: SubgroupSpec
    weight: float
    alpha: float
    beta: float = 0.0
    identity_mass: Optional[float] = None


@dataclass
class MeasureSpec:
    """
    Input data of a jump measure.

    Attributes:
        group: Ambient group
        components: Power-law components (i >= 1)
        mu0_weight: p_0 >= 0
        mu0_atoms: Symmetric finite law; None means uniform on {e} ∪ S_0 ∪ S_0^-1
    """
    group: GroupSpec
    components: List[ComponentSpec] = field(default_factory=list)
    mu0_weight: float = 0.0
    mu0_atoms: Optional[Dict[Element, float]] = None


@dataclass(frozen=True)
class PhiClass:
    """Components sharing one Phi class key."""
    key: ClassKey
    components: Tuple[int, ...]


# ============================================================================
# Built components
# ============================================================================

def _quad(density, a: float, b: float, limit: int) -> float:
    """Shell-density integral; quadrature warnings go to the log, not stderr."""
    rtol = float(ConfigLoader.get_instance().get("measures", "quad_rtol", 1e-8))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(density, a, b, epsabs=0.0, epsrel=rtol, limit=limit)
    for w in caught:
        if issubclass(w.category, integrate.IntegrationWarning):
            LongJumpLogger.debug(f"Tail integral on [{a:g}, {b:g}]: {value:.6g} +- {error:.2g} ({w.message})")
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return float(value)


class JumpComponent:
    """
    A normalized component mu_i with shell masses up to a cap and an
    integral tail beyond it.
    """

    def __init__(
        self,
        spec: ComponentSpec,
        component_id: int,
        shell_cap: int,
        max_jump_radius: int,
        tail_grid_points: int,
    ):
        self.spec = spec
        self.component_id = component_id
        self.subgroup = spec.subgroup
        self.p = float(spec.weight)
        self.d = spec.subgroup.growth_degree
        self.phi = JumpProfile(spec.alpha, spec.beta)
        self.Phi: TransformedWeight = phi_to_Phi(self.phi)
        self.cmap = spec.subgroup.coordinate_map
        self.is_finite = spec.subgroup.is_finite
        self.max_jump_radius = int(max_jump_radius)

        if self.is_finite:
            self._build_finite()
        else:
            self._build_infinite(int(shell_cap), int(tail_grid_points))

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def _atom_weight(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return 1.0 / (np.power(1.0 + r, self.d) * np.asarray(self.phi.eval(r)))

    def _shell_density(self, x: float) -> float:
        return float(self.cmap.shell_sizes(np.array([x]))[0] * self._atom_weight(np.array([x]))[0])

    def _build_infinite(self, shell_cap: int, tail_grid_points: int):
        self.shell_cap = shell_cap
        radii = np.arange(shell_cap + 1)
        raw = self.cmap.shell_sizes(radii) * self._atom_weight(radii)
        start = shell_cap + 0.5
        tail = _quad(self._shell_density, start, np.inf, 400)
        self.Z = float(raw.sum() + tail)
        self.shell_mass = raw / self.Z
        self.cumulative = np.cumsum(self.shell_mass)
        self.tail_beyond_cap = tail / self.Z

        # Inverse-CDF table for the lumped tail: T(x) = int_x^inf density
        top = max(float(self.max_jump_radius), start * 2.0)
        grid = np.geomspace(start, top, tail_grid_points)
        pieces = [
            _quad(self._shell_density, a, b, 200)
            for a, b in zip(grid[:-1], grid[1:])
        ]
        remaining = tail - np.concatenate([[0.0], np.cumsum(pieces)])
        remaining = np.maximum(remaining, tail * 1e-300)
        self._tail_grid = grid
        self._tail_fraction = remaining / tail

    def _build_finite(self):
        order = self.cmap.order
        self.shell_cap = self.cmap.max_length
        m = self.spec.identity_mass
        if m is None:
            masses = np.full(order, 1.0 / order)
        else:
            if not 0.0 <= m <= 1.0 or (order == 1 and m != 1.0):
                raise MeasureError(f"Identity mass {m} invalid for a subgroup of order {order}")
            masses = np.full(order, (1.0 - m) / max(order - 1, 1))
            masses[0] = m
        self.atom_masses = masses
        self.Z = float(order)
        distances = np.asarray(self.cmap.distances)
        self.shell_mass = np.bincount(distances, weights=masses, minlength=self.shell_cap + 1)
        self.cumulative = np.cumsum(self.shell_mass)
        self.tail_beyond_cap = 0.0

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def mass(self, g: Element) -> float:
        """mu_i(g) (without the factor p_i)."""
        coords = subgroup_coordinates(self.subgroup, g)
        if coords is None:
            return 0.0
        if self.is_finite:
            return float(self.atom_masses[coords[0]])
        r = self.cmap.length(coords)
        return float(self._atom_weight(np.array([r]))[0] / self.Z)

    def mass_batch(self, A: np.ndarray) -> np.ndarray:
        """mu_i at each row of A."""
        A = np.asarray(A, dtype=np.int64)
        if self.is_finite:
            return np.array([self.mass(tuple(int(x) for x in row)) for row in A])
        members, lengths = self.cmap.lengths_batch(A)
        return np.where(members, self._atom_weight(lengths) / self.Z, 0.0)

    def tail_mass(self, r: int) -> float:
        """sum of mu_i(h) over |h|_i >= r."""
        if r <= 0:
            return 1.0
        if r <= self.shell_cap:
            return float(max(1.0 - self.cumulative[r - 1], 0.0))
        if self.is_finite:
            return 0.0
        tail = _quad(self._shell_density, r - 0.5, np.inf, 400)
        return tail / self.Z

    def truncation_radius(self, budget: float, max_radius: int) -> int:
        """Smallest radius whose beyond-tail mass (times p_i) fits the budget."""
        if self.is_finite:
            return self.shell_cap
        limit = min(int(max_radius), self.shell_cap)
        tails = 1.0 - self.cumulative[: limit + 1]
        fits = np.nonzero(self.p * tails <= budget)[0]
        return int(fits[0]) if fits.size else limit

    def atoms(self, radius: int) -> Tuple[np.ndarray, np.ndarray]:
        """Elements with |h|_i <= radius and their masses mu_i(h)."""
        if self.is_finite:
            elements, _ = self.cmap.ball(radius)
            keep = np.asarray(self.cmap.distances) <= radius
            return elements, self.atom_masses[keep]
        elements, lengths = self.cmap.ball(radius)
        return elements, self._atom_weight(lengths) / self.Z

    def sample_radii(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Shell radii distributed as the law of |h|_i."""
        u = rng.random(count)
        in_table = u < self.cumulative[-1]
        radii = np.searchsorted(self.cumulative, u, side="right").astype(np.int64)
        if self.is_finite or not (~in_table).any():
            return np.minimum(radii, self.shell_cap)
        # Lumped tail: invert T(x)/T(cap + 1/2) on the log grid
        v = (u[~in_table] - self.cumulative[-1]) / max(self.tail_beyond_cap, 1e-300)
        fraction = np.clip(1.0 - v, self._tail_fraction[-1], 1.0)
        log_x = np.interp(-np.log(fraction), -np.log(self._tail_fraction), np.log(self._tail_grid))
        tail_radii = np.clip(np.rint(np.exp(log_x)), self.shell_cap + 1, self.max_jump_radius)
        radii[~in_table] = tail_radii.astype(np.int64)
        return radii

    def describe(self) -> Dict[str, Any]:
        return {
            "id": self.component_id,
            "subgroup": self.subgroup.name,
            "p": self.p,
            "alpha": self.phi.alpha,
            "beta": self.phi.beta,
            "growth_degree": self.d,
            "Z": self.Z,
            "finite": self.is_finite,
            "identity_mass": self.spec.identity_mass,
            "Phi": {"key": list(self.Phi.key), "at_one": float(self.Phi.eval(1.0))},
        }


# ============================================================================
# Measure
# ============================================================================

class JumpMeasure:
    """A built, normalized, symmetric jump measure."""

    def __init__(self, spec: MeasureSpec, components: List[JumpComponent], mu0: Dict[Element, float]):
        self.spec = spec
        self.group = spec.group
        self.components = components
        self.p0 = float(spec.mu0_weight)
        self.mu0 = mu0
        self.certified_eps: Optional[float] = None
        self.logger = LongJumpLogger.get_logger()

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def pmf(self, g: Sequence[int]) -> float:
        """mu(g)."""
        g = self.group.validate(g)
        value = self.p0 * self.mu0.get(g, 0.0)
        for component in self.components:
            value += component.p * component.mass(g)
        return value

    def pmf_batch(self, A: np.ndarray) -> np.ndarray:
        """mu at each row of an (N, arity) array."""
        A = np.asarray(A, dtype=np.int64).reshape(-1, self.group.arity)
        out = np.zeros(A.shape[0])
        if self.p0 > 0:
            for atom, m in self.mu0.items():
                out[np.all(A == np.asarray(atom), axis=1)] += self.p0 * m
        for component in self.components:
            out += component.p * component.mass_batch(A)
        return out

    def tail_mass(self, component_id: int, r: int) -> float:
        """sum over |h|_i >= r of mu_i(h), for the 1-based component id."""
        if not 1 <= component_id <= len(self.components):
            raise MeasureError(f"No component {component_id} (measure has {len(self.components)})")
        return self.components[component_id - 1].tail_mass(int(r))

    def mu0_generators(self) -> Dict[str, Element]:
        """Non-identity atoms of mu_0 modulo inverses, named after generators when possible."""
        names = {element: name for name, element in self.group.generators().items()}
        out: Dict[str, Element] = {}
        seen = set()
        for k, element in enumerate(sorted(self.mu0)):
            if element == self.group.identity:
                continue
            canonical = min(element, self.group.inv(element, check=False))
            if canonical in seen:
                continue
            seen.add(canonical)
            name = names.get(element) or names.get(self.group.inv(element, check=False)) or f"a{k}"
            out[name] = element
        return out

    def truncated_atoms(self, eps: float, max_radius: int) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Atoms of mu restricted so that the removed mass is at most eps
        (unless max_radius binds first).

        Returns:
            (elements, probabilities, dropped mass)
        """
        infinite = [c for c in self.components if not c.is_finite]
        share = eps / max(len(infinite), 1)
        rows: List[np.ndarray] = []
        probs: List[np.ndarray] = []
        dropped = 0.0
        for component in self.components:
            radius = component.truncation_radius(share, max_radius)
            elements, masses = component.atoms(radius)
            rows.append(elements)
            probs.append(component.p * masses)
            dropped += component.p * component.tail_mass(radius + 1)
        if self.p0 > 0:
            atoms = sorted(self.mu0)
            rows.append(np.asarray(atoms, dtype=np.int64).reshape(len(atoms), self.group.arity))
            probs.append(self.p0 * np.array([self.mu0[a] for a in atoms]))
        if not rows:
            return np.zeros((0, self.group.arity), dtype=np.int64), np.zeros(0), 0.0
        return np.concatenate(rows), np.concatenate(probs), float(dropped)

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate_P_order(self) -> List[PhiClass]:
        """Phi classes in increasing order; equal keys are merged."""
        keys: Dict[ClassKey, List[int]] = {}
        for i, component in enumerate(self.components, start=1):
            key = component.Phi.key
            if any(np.isnan(x) for x in key):
                raise OrderingError(f"Component {i} has no comparable Phi class")
            keys.setdefault(key, []).append(i)
        return [PhiClass(key, tuple(ids)) for key, ids in sorted(keys.items())]

    def check_generation(self, depth: int = 4, radius: int = 1) -> float:
        """
        Certify an eps with e in {mu > eps} and {mu > eps} generating G.

        Candidate atoms are the mu_0 atoms and, for each component, the atoms
        of H_i within the given intrinsic radius. Generation is checked by a
        depth-bounded BFS reaching every standard generator.

        Returns:
            The certified eps (mass of the weakest atom used)
        """
        candidates: Dict[Element, float] = {}
        for element in self.mu0:
            candidates[element] = self.pmf(element)
        for component in self.components:
            elements, _ = component.atoms(radius)
            for row in elements:
                g = tuple(int(x) for x in row)
                candidates[g] = self.pmf(g)
        identity = self.group.identity
        targets = [self.group.generator(n) for n in standard_generators(self.group)]
        levels = sorted({m for m in candidates.values() if m > 0}, reverse=True)
        for level in levels:
            atoms = [g for g, m in candidates.items() if m >= level]
            if identity not in atoms:
                continue
            if self._generates(atoms, targets, depth):
                self.certified_eps = level * (1.0 - 1e-9)
                return self.certified_eps
        raise GenerationError(
            f"High-mass atoms of the measure do not generate {self.group.label} (checked {len(levels)} levels)"
        )

    def _generates(self, atoms: List[Element], targets: List[Element], depth: int) -> bool:
        letters = set(atoms) | {self.group.inv(a, check=False) for a in atoms}
        reached = {self.group.identity}
        frontier = deque([self.group.identity])
        for _ in range(depth):
            next_frontier = deque()
            for g in frontier:
                for s in letters:
                    h = self.group.mul(g, s, check=False)
                    if h not in reached:
                        reached.add(h)
                        next_frontier.append(h)
            frontier = next_frontier
            if all(t in reached for t in targets):
                return True
        return all(t in reached for t in targets)

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group.label,
            "p0": self.p0,
            "mu0": [{"element": format_element(g), "mass": m} for g, m in sorted(self.mu0.items())],
            "components": [c.describe() for c in self.components],
            "phi_order": [
                {"key": list(cls.key), "components": list(cls.components)} for cls in self.validate_P_order()
            ],
            "certified_eps": self.certified_eps,
        }


# ============================================================================
# Construction
# ============================================================================

def default_mu0(group: GroupSpec) -> Dict[Element, float]:
    """Uniform law on {e} ∪ S_0 ∪ S_0^-1."""
    atoms = {group.identity}
    for name in standard_generators(group):
        s = group.generator(name)
        atoms.add(s)
        atoms.add(group.inv(s, check=False))
    return {a: 1.0 / len(atoms) for a in sorted(atoms)}


def _validated_mu0(group: GroupSpec, atoms: Dict[Element, float]) -> Dict[Element, float]:
    law = {group.validate(g): float(m) for g, m in atoms.items()}
    if any(m < 0 for m in law.values()):
        raise MeasureError("mu_0 masses must be non-negative")
    total = sum(law.values())
    if abs(total - 1.0) > 1e-9:
        raise WeightSumError(f"mu_0 masses sum to {total}, expected 1")
    for g, m in law.items():
        if abs(law.get(group.inv(g, check=False), 0.0) - m) > 1e-12:
            raise MeasureError(f"mu_0 is not symmetric at {format_element(g)}")
    return {g: m for g, m in law.items() if m > 0}


def build_measure(
    spec: MeasureSpec,
    shell_cap: Optional[int] = None,
    max_jump_radius: Optional[int] = None,
    check_generation: bool = True,
) -> JumpMeasure:
    """
    Normalize, validate and assemble a jump measure.

    Args:
        spec: Measure specification
        shell_cap: Largest radius tabulated exactly (default from config)
        max_jump_radius: Largest radius the sampler may return
        check_generation: Run the generation certificate

    Returns:
        JumpMeasure

    Raises:
        WeightSumError: probabilities do not sum to one
        GenerationError: high-mass atoms do not generate the group
    """
    logger = LongJumpLogger.get_logger()
    defaults = ConfigLoader.get_instance().get_measure_defaults()
    shell_cap = int(defaults.get("shell_cap", 1 << 20) if shell_cap is None else shell_cap)
    max_jump_radius = int(defaults.get("max_jump_radius", 1 << 31) if max_jump_radius is None else max_jump_radius)
    tail_points = int(defaults.get("tail_grid_points", 512))
    tolerance = float(defaults.get("normalization_tolerance", 1e-6))

    logger.debug("Step 1: checking component weights")
    if spec.mu0_weight < 0:
        raise WeightSumError(f"p_0 must be non-negative, got {spec.mu0_weight}")
    for i, c in enumerate(spec.components, start=1):
        if not c.weight > 0:
            raise WeightSumError(f"p_{i} must be positive, got {c.weight}")
    total = spec.mu0_weight + sum(c.weight for c in spec.components)
    if abs(total - 1.0) > 1e-9:
        raise WeightSumError(f"Component weights sum to {total}, expected 1")

    logger.debug("Step 2: normalizing components")
    components = [
        JumpComponent(c, i, shell_cap, max_jump_radius, tail_points)
        for i, c in enumerate(spec.components, start=1)
    ]
    for component in components:
        covered = component.cumulative[-1] + component.tail_beyond_cap
        if abs(covered - 1.0) > tolerance:
            raise MeasureError(f"Component {component.component_id} normalizes to {covered}")

    mu0 = _validated_mu0(spec.group, spec.mu0_atoms) if spec.mu0_atoms is not None else default_mu0(spec.group)
    measure = JumpMeasure(spec, components, mu0)

    logger.debug("Step 3: ordering Phi classes")
    order = measure.validate_P_order()
    logger.debug(f"Phi classes: {[cls.key for cls in order]}")

    if check_generation:
        logger.debug("Step 4: certifying generation")
        eps = measure.check_generation(depth=int(defaults.get("generation_depth", 4)))
        logger.debug(f"Generation certified with eps = {eps:.3g}")
    return measure
