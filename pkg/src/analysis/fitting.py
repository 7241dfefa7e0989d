"""
LongJump - Exponent Fits

Log-log regression turning two-sided growth statements into slopes, and the
Hölder fit of total-variation differences of convolution powers.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.groups.elements import format_element
from src.kernels.engine import PowerCache, tv_difference
from src.kernels.sparse import TruncationPolicy
from src.models.results import FitResult, HolderFit
from src.utils.errors import FitError, HolderGridError


def _regress(log_x: np.ndarray, log_y: np.ndarray) -> FitResult:
    if log_x.size < 3:
        raise FitError(f"Need at least 3 points for a slope, got {log_x.size}")
    if np.ptp(log_x) == 0:
        raise FitError("All x values coincide")
    result = stats.linregress(log_x, log_y)
    residuals = log_y - (result.intercept + result.slope * log_x)
    r2 = float(result.rvalue ** 2) if np.ptp(log_y) > 0 else 1.0
    return FitResult(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r2=min(max(r2, 0.0), 1.0),
        residual_max=float(np.abs(residuals).max()),
        point_count=int(log_x.size),
        stderr=float(result.stderr),
    )


def fit_loglog(series: Sequence[Tuple[float, float]], window: Optional[Tuple[float, float]] = None) -> FitResult:
    """
    Least squares on (log x, log y).

    Args:
        series: (x, y) pairs with x strictly increasing and y > 0
        window: Optional inclusive x range

    Raises:
        FitError: fewer than 3 points, non-increasing x or non-positive values
    """
    points = [(float(x), float(y)) for x, y in series]
    if window is not None:
        points = [(x, y) for x, y in points if window[0] <= x <= window[1]]
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    if x.size and (np.any(x <= 0) or np.any(y <= 0)):
        raise FitError("Log-log fit needs positive x and y")
    if np.any(np.diff(x) <= 0):
        raise FitError("x values must be strictly increasing")
    return _regress(np.log(x), np.log(y))


def holder_fit(
    measure,
    geom,
    n0: int,
    grid: Sequence[Tuple[int, int, Sequence[int]]],
    policy: TruncationPolicy,
    cache: Optional[PowerCache] = None,
) -> HolderFit:
    """
    Fit tv(m1, m2, y) = sum_x |mu^(m1)(x) - mu^(m2)(xy)| against
    ((|m1 - m2|^w_* + ||y||_2) / n0^w_*)^beta.

    Raises:
        HolderGridError: a grid point is invalid or fewer than 3 remain usable
    """
    group = measure.group
    cache = PowerCache(measure, policy) if cache is None else cache
    w = geom.w_star
    points: List[Tuple[int, int, str, float, float]] = []
    for m1, m2, y in grid:
        y = group.validate(y)
        if m1 < n0 or m2 < n0:
            raise HolderGridError(f"Grid point ({m1}, {m2}) lies below n0 = {n0}")
        if m1 == m2 and y == group.identity:
            raise HolderGridError(f"Grid point ({m1}, {m2}, e) has zero distance")
        tv = tv_difference(cache.power(m1), cache.power(m2), y)
        x = (abs(m1 - m2) ** w + geom.norm_g2(y)) / n0 ** w
        if tv > 0:
            points.append((int(m1), int(m2), format_element(y), float(x), float(tv)))
    if len(points) < 3:
        raise HolderGridError(f"Only {len(points)} usable grid points")
    log_x = np.log([p[3] for p in points])
    log_y = np.log([p[4] for p in points])
    try:
        fit = _regress(log_x, log_y)
    except FitError as e:
        raise HolderGridError(str(e)) from e
    return HolderFit(beta=fit.slope, constant=float(np.exp(fit.intercept)), fit=fit, points=points)
