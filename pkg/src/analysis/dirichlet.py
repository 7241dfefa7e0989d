"""
LongJump - Dirichlet Forms and Spectral Surrogates

Everything here works with the killed operator of a finite set X:

    (K_X f)(x) = sum_{x' in X} mu(x^-1 x') f(x'),   x in X

For f supported in X, E(f, f) = ||f||^2 - <f, K_X f> exactly, so no jump
truncation enters. On Z^k the set is embedded in its bounding box and K_X
is an FFT convolution; elsewhere a dense pair matrix is built.
"""

from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, signal
from scipy.sparse.linalg import LinearOperator, eigsh

from src.config.loader import ConfigLoader
from src.groups.elements import Element, GroupKind, format_element
from src.kernels.sparse import DictKernel, aggregate
from src.models.results import EigenvalueReport, PoincareReport, RayleighReport
from src.utils.errors import BallCapError
from src.utils.logger import LongJumpLogger

FunctionData = Union[Dict[Element, float], Tuple[np.ndarray, np.ndarray]]


def _as_rows(group, f: FunctionData) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted support rows and values of a finitely supported function."""
    if isinstance(f, dict):
        rows = np.asarray([group.validate(g) for g in f], dtype=np.int64).reshape(len(f), group.arity)
        values = np.asarray(list(f.values()), dtype=float)
    else:
        rows = np.asarray(f[0], dtype=np.int64).reshape(-1, group.arity)
        values = np.asarray(f[1], dtype=float)
    return aggregate(rows, values)


# ============================================================================
# Killed operator
# ============================================================================

class KilledOperator:
    """K_X for a finite set X (rows of an (m, arity) array)."""

    def __init__(self, measure, rows: np.ndarray):
        self.measure = measure
        self.group = measure.group
        self.rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.group.arity)
        self.size = self.rows.shape[0]
        if self.group.kind is GroupKind.ZK:
            self._build_box()
        else:
            self._build_dense()

    def _build_box(self):
        lo = self.rows.min(axis=0)
        hi = self.rows.max(axis=0)
        self._lo = lo
        self._shape = tuple(int(x) for x in hi - lo + 1)
        self._index = tuple((self.rows - lo).T)
        span = hi - lo
        axes = [np.arange(-int(s), int(s) + 1, dtype=np.int64) for s in span]
        grids = np.meshgrid(*axes, indexing="ij")
        diffs = np.stack([g.ravel() for g in grids], axis=1)
        self._kernel = self.measure.pmf_batch(diffs).reshape(tuple(len(a) for a in axes))
        self._dense = None

    def _build_dense(self):
        limit = int(ConfigLoader.get_instance().get("analysis", "dense_limit", 2048))
        if self.size > limit:
            raise BallCapError(f"Killed operator on {self.size} points exceeds the dense limit {limit}", self.size)
        m = self.size
        left = self.group.batch_inv(self.rows)
        pairs = self.group.batch_mul(np.repeat(left, m, axis=0), np.tile(self.rows, (m, 1)))
        unique, inverse = np.unique(pairs, axis=0, return_inverse=True)
        values = self.measure.pmf_batch(unique)
        self._dense = values[inverse.reshape(-1)].reshape(m, m)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float).reshape(-1)
        if self._dense is not None:
            return self._dense @ v
        box = np.zeros(self._shape)
        box[self._index] = v
        out = signal.fftconvolve(box, self._kernel, mode="same") if box.size > 1 else box * self._kernel.ravel()[0]
        return np.asarray(out)[self._index]

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.size, self.size), matvec=self.matvec, dtype=float)

    def as_matrix(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        return np.column_stack([self.matvec(col) for col in np.eye(self.size)])


def _top_eigenpair(op: KilledOperator, iterations: int, tolerance: float) -> Tuple[float, np.ndarray, float, int]:
    """Power iteration from the positive vector; (value, vector, residual, iterations)."""
    v = np.full(op.size, 1.0 / np.sqrt(op.size))
    value = 0.0
    residual = np.inf
    done = 0
    for done in range(1, iterations + 1):
        w = op.matvec(v)
        value = float(v @ w)
        residual = float(np.linalg.norm(w - value * v))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0, v, 0.0, done
        v = w / norm
        if residual <= tolerance:
            break
    return value, v, residual, done


def killed_eigenvalue(measure, rows: np.ndarray, iterations: Optional[int] = None) -> EigenvalueReport:
    """
    Lowest Dirichlet eigenvalue 1 - lambda_max(K_X) on an arbitrary finite set.

    Power iteration first; when the residual bound is not met, a Lanczos
    (or dense) solve refines the value and `converged` reflects its residual.
    """
    logger = LongJumpLogger.get_logger()
    defaults = ConfigLoader.get_instance().get_section("analysis")
    iterations = int(defaults.get("power_iteration_max", 5000) if iterations is None else iterations)
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    bound = float(defaults.get("eigen_residual_bound", 1e-6))
    tolerance = float(defaults.get("power_iteration_tolerance", 1e-9))

    op = KilledOperator(measure, rows)
    value, vector, residual, used = _top_eigenpair(op, iterations, tolerance)
    if residual > bound:
        logger.debug(f"Power iteration stopped at residual {residual:.3g}; refining")
        if op.size <= 2:
            eigenvalues, eigenvectors = linalg.eigh(op.as_matrix())
            value, vector = float(eigenvalues[-1]), eigenvectors[:, -1]
        else:
            eigenvalues, eigenvectors = eigsh(op.as_linear_operator(), k=1, which="LA", v0=vector, tol=tolerance)
            value, vector = float(eigenvalues[0]), eigenvectors[:, 0]
        residual = float(np.linalg.norm(op.matvec(vector) - value * vector))
    converged = residual <= bound
    if not converged:
        logger.warning(f"Killed eigenvalue on {op.size} points did not converge (residual {residual:.3g})")
    return EigenvalueReport(
        value=float(1.0 - value),
        residual=residual,
        iterations=used,
        converged=converged,
        ball_volume=op.size,
    )


def dirichlet_eigenvalue(measure, geom, R: float, iterations: Optional[int] = None) -> EigenvalueReport:
    """Killed eigenvalue on B(e, R), R in the rescaled norm."""
    ball = geom.enumerate_ball(geom.radius_from_g2(R))
    return killed_eigenvalue(measure, ball, iterations)


# ============================================================================
# Dirichlet form
# ============================================================================

def _tail_slack(values: np.ndarray) -> float:
    delta = float(ConfigLoader.get_instance().get("analysis", "normalization_slack", 1e-8))
    if values.size == 0:
        return 0.0
    return 2.0 * delta * float(np.abs(values).max()) ** 2 * values.size


def dirichlet_form(measure, f: FunctionData) -> Tuple[float, float]:
    """
    E(f, f) = 1/2 sum_{x,y} |f(xy) - f(x)|^2 mu(y).

    Returns:
        (value, tail slack)
    """
    rows, values = _as_rows(measure.group, f)
    if rows.shape[0] == 0:
        return 0.0, 0.0
    op = KilledOperator(measure, rows)
    value = float(values @ values - values @ op.matvec(values))
    return max(value, 0.0), _tail_slack(values)


def rayleigh_zeta(measure, geom, R: float) -> RayleighReport:
    """
    Rayleigh quotient of zeta_R(g) = (R - ||g||_1)_+, where ||g||_1 composes
    the closed-form norm with the exponent 2 * (largest weight index).
    """
    exponent = 2.0 * geom.system_g.max_index
    radius = float(np.expm1(np.log1p(R) / exponent)) if R > 0 else 0.0
    ball = geom.enumerate_ball(radius)
    norms = np.expm1(exponent * np.log1p(geom.closed_form_norm_batch(ball)))
    inside = norms < R
    support = ball[inside]
    zeta = R - norms[inside]
    value, slack = dirichlet_form(measure, (support, zeta))
    mass = float(zeta @ zeta)
    return RayleighReport(
        R=float(R),
        quotient=value / mass,
        ball_volume=int(support.shape[0]),
        tail_slack=slack / mass,
        support=support,
    )


# ============================================================================
# Pseudo-Poincaré
# ============================================================================

def poincare_ratio(measure, geom, f: FunctionData, h: Sequence[int]) -> Optional[float]:
    """
    sum_x |f(xh) - f(x)|^2 / (||h||_2^(1/w_*) E(f, f)); None when E(f, f) = 0.
    """
    group = measure.group
    h = group.validate(h)
    rows, values = _as_rows(group, f)
    energy, _ = dirichlet_form(measure, (rows, values))
    if energy <= 0.0:
        return None
    if h == group.identity:
        return 0.0
    lookup = DictKernel(group, rows, values, 0)
    moved = group.batch_mul(rows, np.asarray([h], dtype=np.int64))
    overlap = float(values @ lookup.values_at(moved))
    # sum_x |f(xh) - f(x)|^2 = 2||f||^2 - 2 sum_x f(x) f(xh)
    numerator = 2.0 * float(values @ values) - 2.0 * overlap
    return numerator / (geom.norm_g2(h) ** (1.0 / geom.w_star) * energy)


def pseudo_poincare_constant(
    measure,
    geom,
    trial_count: int,
    h_list: Sequence[Sequence[int]],
    seed: int,
) -> PoincareReport:
    """
    Largest poincare_ratio over seeded trial functions: independent +-1
    signs on B(e, rho) with rho uniform in the configured radius range.
    """
    if not h_list:
        raise ValueError("h_list must not be empty")
    logger = LongJumpLogger.get_logger()
    defaults = ConfigLoader.get_instance().get_section("analysis")
    lo = int(defaults.get("poincare_min_radius", 1))
    hi = int(defaults.get("poincare_max_radius", 4))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed)])))
    balls = {rho: geom.enumerate_ball(rho) for rho in range(lo, hi + 1)}

    per_h: Dict[str, float] = {format_element(h): 0.0 for h in h_list}
    skipped = 0
    for _ in range(trial_count):
        rows = balls[int(rng.integers(lo, hi + 1))]
        values = np.where(rng.random(rows.shape[0]) < 0.5, -1.0, 1.0)
        for h in h_list:
            ratio = poincare_ratio(measure, geom, (rows, values), h)
            if ratio is None:
                skipped += 1
                break
            key = format_element(h)
            per_h[key] = max(per_h[key], ratio)
    if skipped:
        logger.debug(f"Skipped {skipped} constant trial functions")
    return PoincareReport(constant=max(per_h.values()), trials=trial_count, skipped=skipped, per_h=per_h)
