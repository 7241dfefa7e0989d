"""
LongJump - Result Models

Data structures returned by the engines and serialized by the runner.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple


# ============================================================================
# Fits
# ============================================================================

@dataclass
class FitResult:
    """
    Least-squares fit on (log x, log y).

    Attributes:
        slope: Fitted exponent
        intercept: Fitted log-constant
        r2: Coefficient of determination in [0, 1]
        residual_max: Largest absolute residual in log scale
        point_count: Number of points used (>= 3)
        stderr: Standard error of the slope
    """
    slope: float
    intercept: float
    r2: float
    residual_max: float
    point_count: int
    stderr: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class HolderFit:
    """
    Fit of tv differences against the parabolic distance.

    Attributes:
        beta: Fitted exponent
        constant: Fitted constant C
        fit: Underlying log-log fit
        points: (m1, m2, y, x, tv) rows used
    """
    beta: float
    constant: float
    fit: FitResult
    points: List[Tuple[int, int, str, float, float]] = field(default_factory=list)


# ============================================================================
# Kernel statistics
# ============================================================================

@dataclass
class ReturnRow:
    """
    Interval for mu^(n)(e).

    Attributes:
        n: Convolution power
        lower: Computed kernel value at e
        upper: lower + dropped mass
        sup_norm: Largest computed entry
        dropped: Ledger of the kernel
    """
    n: int
    lower: float
    upper: float
    sup_norm: float
    dropped: float = 0.0


@dataclass
class NearDiagonalProfile:
    """Range of k(g) V(n) over the near-diagonal ball."""
    n: int
    eta: float
    min_ratio: float
    max_ratio: float
    ratio_at_identity: float
    ball_size: int
    volume: float


@dataclass
class RegularityReport:
    """
    Worst regularity constant over a (m, y) grid.

    Attributes:
        n: Base time
        worst: Smallest C satisfying the inequality on the whole grid
        rows: (m, y, C) per grid point
    """
    n: int
    worst: float
    rows: List[Tuple[int, str, float]] = field(default_factory=list)


# ============================================================================
# Monte Carlo
# ============================================================================

@dataclass
class CollisionEstimate:
    """
    Collision estimate of mu^(2n)(e).

    Attributes:
        n: Walk length of each walker
        estimate: Pair-collision frequency
        stderr: U-statistic standard error (upper bound when low_information)
        walkers: Number of walkers
        seed: Root seed
        collisions: Number of coincident pairs
        low_information: True when no pair collided
    """
    n: int
    estimate: float
    stderr: float
    walkers: int
    seed: int
    collisions: int = 0
    low_information: bool = False


@dataclass
class TrajectoryStats:
    """
    Summary of simulated trajectories.

    Attributes:
        n: Horizon
        walkers: Number of walkers
        endpoints: Distinct endpoint -> count
        max_displacement_quantiles: quantile -> value of sup_k ||start^-1 X_k||_2
        control_table: eps -> smallest gamma with P(sup >= gamma n^w_*) <= eps
        max_displacements: Per-walker sup values (walker order)
    """
    n: int
    walkers: int
    endpoints: Dict[Tuple[int, ...], int] = field(default_factory=dict)
    max_displacement_quantiles: Dict[float, float] = field(default_factory=dict)
    control_table: Dict[float, float] = field(default_factory=dict)
    max_displacements: Optional[Any] = None


@dataclass
class ExitTimeStats:
    """
    Exit times from B(start, r) in the rescaled norm.

    Attributes:
        r: Radius
        mean: Mean of min(tau, horizon) (a lower bound when censored)
        quantiles: quantile -> value
        horizon: Censoring horizon
        censored_fraction: Walkers still inside at the horizon
        all_censored: True when no walker exited
    """
    r: float
    mean: float
    quantiles: Dict[float, float]
    horizon: int
    censored_fraction: float
    all_censored: bool = False


@dataclass
class OvershootEstimate:
    """Probability of exiting B(start, r) outside B(start, s)."""
    r: float
    s: float
    estimate: float
    stderr: float
    walkers: int
    exited: int


# ============================================================================
# Analysis
# ============================================================================

@dataclass
class RayleighReport:
    """
    Rayleigh quotient of the ball test function.

    Attributes:
        R: Scale
        quotient: E(zeta, zeta) / ||zeta||^2
        ball_volume: Size of the support ball
        tail_slack: Bound on the truncation contribution
        support: Support rows of zeta
    """
    R: float
    quotient: float
    ball_volume: int
    tail_slack: float
    support: Optional[Any] = None


@dataclass
class EigenvalueReport:
    """
    Lowest Dirichlet eigenvalue of the killed walk.

    Attributes:
        value: 1 - top eigenvalue of the killed operator
        residual: Residual norm of the final iterate
        iterations: Iterations performed
        converged: Residual under the configured bound
        ball_volume: Size of the domain
    """
    value: float
    residual: float
    iterations: int
    converged: bool
    ball_volume: int


@dataclass
class PoincareReport:
    """Empirical pseudo-Poincaré constant."""
    constant: float
    trials: int
    skipped: int
    per_h: Dict[str, float] = field(default_factory=dict)


# ============================================================================
# Experiment result
# ============================================================================

@dataclass
class ExperimentResult:
    """
    Outcome of one experiment run.

    Attributes:
        experiment: Experiment tag
        success: Ran to completion without errors
        passed: Acceptance check held
        report: Report document (theory, fitted values, pass flag)
        rows: CSV rows (first row is the header)
        files: Written file name -> sha256
        errors: Error messages
        warnings: Warning messages
        metadata: Run metadata (seed, version, wall time)
    """
    experiment: str
    success: bool = False
    passed: bool = False
    report: Dict[str, Any] = field(default_factory=dict)
    rows: List[List[Any]] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def has_errors(self) -> bool:
        """Check if the run has errors."""
        return len(self.errors) > 0

    def has_warnings(self) -> bool:
        """Check if the run has warnings."""
        return len(self.warnings) > 0

    @property
    def exit_code(self) -> int:
        if not self.success or self.has_errors():
            return 1
        return 0 if self.passed else 2
