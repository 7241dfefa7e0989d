"""
LongJump - Experiment Config Schema

Strict JSON experiment configs validated with pydantic. Group-dependent
defaults (policy eps, w_*) are resolved by methods and never written back,
so re-serializing with exclude_unset reproduces the input fields.
"""

import json
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.groups.catalog import builtin_subgroups
from src.groups.elements import GroupKind, GroupSpec, parse_element
from src.kernels.engine import default_policy
from src.kernels.sparse import TruncationPolicy
from src.measures.measure import ComponentSpec, MeasureSpec
from src.utils.errors import ConfigValidationError, LongJumpError

ExperimentTag = Literal[
    "return-exponent",
    "geometry-audit",
    "near-diagonal",
    "control",
    "exit",
    "holder",
    "spectral",
    "poincare",
]

STOCHASTIC = ("control", "exit", "poincare")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============================================================================
# Sections
# ============================================================================

class GroupConfig(StrictModel):
    kind: GroupKind
    k: int = Field(default=1, ge=1)


class ComponentConfig(StrictModel):
    subgroup: str
    weight: float = Field(gt=0, le=1)
    alpha: float = Field(gt=0, description="Tail index; a positive index is required")
    beta: float = 0.0
    identity_mass: Optional[float] = Field(default=None, ge=0, le=1)


class AtomConfig(StrictModel):
    element: str
    mass: float = Field(ge=0, le=1)


class MeasureConfig(StrictModel):
    components: List[ComponentConfig] = Field(default_factory=list)
    mu0_weight: float = Field(default=0.0, ge=0, le=1)
    mu0_atoms: Optional[List[AtomConfig]] = None


class PolicyConfig(StrictModel):
    eps_per_step: Optional[float] = Field(default=None, ge=0)
    max_support: Optional[int] = Field(default=None, ge=1)
    mode: Literal["threshold", "topK"] = "threshold"
    support_radius: Optional[int] = Field(default=None, ge=1)


class GeometryConfig(StrictModel):
    w_star: Optional[float] = Field(default=None, gt=0)
    weights: Optional[Dict[str, float]] = None
    naive: bool = False


class HolderPoint(StrictModel):
    m1: int = Field(ge=1)
    m2: int = Field(ge=1)
    y: str


# ============================================================================
# Experiment config
# ============================================================================

class ExperimentConfig(StrictModel):
    """One experiment run."""

    experiment: ExperimentTag
    group: GroupConfig
    subgroups: Optional[List[str]] = None
    nilpotent_approx: Literal["builtin"] = "builtin"
    measure: Optional[MeasureConfig] = None
    n_range: Optional[List[int]] = None
    r_range: Optional[List[float]] = None
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    method: Literal["auto", "exact", "collision"] = "auto"
    walkers: Optional[int] = Field(default=None, ge=2)
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)
    eta: float = Field(default=0.5, gt=0)
    m_values: Optional[List[int]] = None
    y_list: Optional[List[str]] = None
    n0: Optional[int] = Field(default=None, ge=1)
    holder_grid: Optional[List[HolderPoint]] = None
    s_factors: Optional[List[float]] = None
    trials: Optional[int] = Field(default=None, ge=1)
    h_list: Optional[List[str]] = None
    tolerance: Optional[float] = Field(default=None, gt=0)
    output_dir: Optional[str] = None

    # ------------------------------------------------------------------
    # Resolved values
    # ------------------------------------------------------------------

    def group_spec(self) -> GroupSpec:
        return GroupSpec(self.group.kind, self.group.k)

    def measure_spec(self) -> MeasureSpec:
        spec = self.group_spec()
        catalog = builtin_subgroups(spec)
        measure = self.measure or MeasureConfig()
        components = [
            ComponentSpec(catalog[c.subgroup], c.weight, c.alpha, c.beta, c.identity_mass)
            for c in measure.components
        ]
        atoms = None
        if measure.mu0_atoms is not None:
            atoms = {parse_element(spec, a.element): a.mass for a in measure.mu0_atoms}
        return MeasureSpec(spec, components, measure.mu0_weight, atoms)

    def truncation_policy(self, threads: int = 1) -> TruncationPolicy:
        return default_policy(
            self.group_spec(),
            eps=self.policy.eps_per_step,
            max_support=self.policy.max_support,
            mode=self.policy.mode,
            support_radius=self.policy.support_radius,
            threads=threads,
        )

    def uses_exact_kernels(self) -> bool:
        """Exact kernels for Z^k and the infinite dihedral group unless forced."""
        if self.method != "auto":
            return self.method == "exact"
        return self.group.kind in (GroupKind.ZK, GroupKind.DIHEDRAL_INF)

    def elements(self, texts: Optional[List[str]]):
        spec = self.group_spec()
        return [parse_element(spec, t) for t in texts or []]


# ============================================================================
# Parsing
# ============================================================================

def _pointer(loc: Tuple) -> str:
    return "".join(f"/{part}" for part in loc)


def _missing(cfg: ExperimentConfig) -> List[Tuple[str, str]]:
    """Experiment-specific required fields."""
    required: Dict[str, Tuple[str, ...]] = {
        "return-exponent": ("measure", "n_range"),
        "geometry-audit": ("r_range",),
        "near-diagonal": ("measure", "n_range"),
        "control": ("measure", "n_range", "walkers", "seed"),
        "exit": ("measure", "r_range", "walkers", "seed"),
        "holder": ("measure", "n0"),
        "spectral": ("measure", "r_range"),
        "poincare": ("measure", "trials", "h_list", "seed"),
    }
    errors = [
        (f"/{name}", f"required for experiment '{cfg.experiment}'")
        for name in required[cfg.experiment]
        if getattr(cfg, name) is None
    ]
    if cfg.experiment == "return-exponent" and not cfg.uses_exact_kernels():
        errors += [(f"/{name}", "required for collision estimates") for name in ("walkers", "seed")
                   if getattr(cfg, name) is None]
    if cfg.experiment == "geometry-audit" and cfg.measure is None and cfg.geometry.weights is None:
        errors.append(("/measure", "geometry-audit needs a measure or explicit geometry weights"))
    if cfg.experiment == "holder" and cfg.holder_grid is None and (cfg.m_values is None or cfg.y_list is None):
        errors.append(("/holder_grid", "holder needs holder_grid or m_values with y_list"))
    return errors


def _semantic_errors(cfg: ExperimentConfig) -> List[Tuple[str, str]]:
    errors: List[Tuple[str, str]] = []
    try:
        spec = cfg.group_spec()
    except LongJumpError as e:
        return [("/group", str(e))]
    catalog = builtin_subgroups(spec)
    if cfg.subgroups is not None:
        for i, name in enumerate(cfg.subgroups):
            if name not in catalog:
                errors.append((f"/subgroups/{i}", f"unknown subgroup '{name}' for {spec.label}"))
    if cfg.measure is not None:
        for i, c in enumerate(cfg.measure.components):
            if c.subgroup not in catalog:
                errors.append((f"/measure/components/{i}/subgroup", f"unknown subgroup '{c.subgroup}' for {spec.label}"))
            elif cfg.subgroups is not None and c.subgroup not in cfg.subgroups:
                errors.append((f"/measure/components/{i}/subgroup", f"'{c.subgroup}' is not listed in /subgroups"))
        for i, atom in enumerate(cfg.measure.mu0_atoms or []):
            try:
                parse_element(spec, atom.element)
            except LongJumpError as e:
                errors.append((f"/measure/mu0_atoms/{i}/element", str(e)))
    for field in ("y_list", "h_list"):
        for i, text in enumerate(getattr(cfg, field) or []):
            try:
                parse_element(spec, text)
            except LongJumpError as e:
                errors.append((f"/{field}/{i}", str(e)))
    for i, point in enumerate(cfg.holder_grid or []):
        try:
            parse_element(spec, point.y)
        except LongJumpError as e:
            errors.append((f"/holder_grid/{i}/y", str(e)))
    for field in ("n_range", "r_range"):
        values = getattr(cfg, field)
        if values is not None and any(b < a for a, b in zip(values, values[1:])):
            errors.append((f"/{field}", "values must be ascending"))
    return errors


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse and validate an experiment config.

    Raises:
        ConfigValidationError: with (json_pointer, message) pairs
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([("", f"invalid JSON: {e.msg} at line {e.lineno}")]) from e
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError([(_pointer(err["loc"]), err["msg"]) for err in e.errors()]) from e
    errors = _missing(cfg) + _semantic_errors(cfg)
    if errors:
        raise ConfigValidationError(errors)
    return cfg


def to_json(cfg: ExperimentConfig) -> str:
    """Serialize the fields that were set, in schema order."""
    return cfg.model_dump_json(exclude_unset=True, indent=2)
