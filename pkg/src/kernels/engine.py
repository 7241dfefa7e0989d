"""
LongJump - Kernel Engine

Convolution powers of a jump measure with an L1 deficit ledger, and the
statistics read off them: return probabilities, near-diagonal ratios,
total-variation differences and regularity constants.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from src.config.loader import ConfigLoader
from src.groups.elements import GroupKind, GroupSpec, format_element
from src.kernels.sparse import (
    DictKernel,
    LatticeKernel,
    SparseKernel,
    TruncationPolicy,
    aggregate,
    prune,
)
from src.models.results import NearDiagonalProfile, RegularityReport, ReturnRow
from src.utils.errors import KernelReliabilityError, SupportCapError
from src.utils.logger import LongJumpLogger


# ============================================================================
# Policy
# ============================================================================

def default_policy(group: GroupSpec, eps: Optional[float] = None, **overrides) -> TruncationPolicy:
    """
    Truncation policy with the configured defaults for this group.

    Args:
        group: Ambient group (its dimension picks the default eps)
        eps: Explicit per-step threshold
        **overrides: Any other TruncationPolicy field

    Returns:
        TruncationPolicy
    """
    defaults = ConfigLoader.get_instance().get_kernel_defaults()
    if eps is None:
        key = "eps_one_dimensional" if group.is_one_dimensional else "eps_multi_dimensional"
        eps = float(defaults.get(key, 1e-14))
    fields = {
        "eps_per_step": float(eps),
        "max_support": int(defaults.get("max_support", 4_000_000)),
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return TruncationPolicy(**fields)


def _window_radius(group: GroupSpec, policy: TruncationPolicy) -> int:
    if policy.support_radius is not None:
        return int(policy.support_radius)
    defaults = ConfigLoader.get_instance().get_kernel_defaults()
    if group.kind is GroupKind.ZK:
        key = "lattice_radius" if group.k == 1 else "lattice_radius_multi"
        return int(defaults.get(key, 1 << 20 if group.k == 1 else 256))
    return int(defaults.get("dict_radius", 64))


# ============================================================================
# Building blocks
# ============================================================================

def identity_kernel(group: GroupSpec) -> SparseKernel:
    """delta_e as the kernel of the 0-th power."""
    if group.kind is GroupKind.ZK:
        return LatticeKernel.delta(group)
    return DictKernel.delta(group)


def one_step_kernel(measure, policy: TruncationPolicy) -> SparseKernel:
    """mu truncated once so that the removed mass is at most eps_per_step."""
    group = measure.group
    radius = _window_radius(group, policy)
    rows, probs, dropped = measure.truncated_atoms(policy.eps_per_step, radius)
    if group.kind is GroupKind.ZK:
        return LatticeKernel.from_atoms(group, rows, probs, 1, dropped)
    return DictKernel.from_atoms(group, rows, probs, 1, dropped)


# ============================================================================
# Convolution
# ============================================================================

def convolve(a: SparseKernel, b: SparseKernel, policy: TruncationPolicy) -> SparseKernel:
    """
    (a * b)(x) = sum_y a(y) b(y^-1 x), truncated by the policy.

    Raises:
        SupportCapError: threshold mode and the result has too many entries
    """
    if a.group != b.group:
        raise ValueError(f"Cannot convolve kernels on {a.group.label} and {b.group.label}")
    if isinstance(a, LatticeKernel) and isinstance(b, LatticeKernel):
        return _convolve_lattice(a, b, policy)
    return _convolve_dict(a.to_dict_kernel() if isinstance(a, LatticeKernel) else a,
                          b.to_dict_kernel() if isinstance(b, LatticeKernel) else b,
                          policy)


def _convolve_lattice(a: LatticeKernel, b: LatticeKernel, policy: TruncationPolicy) -> LatticeKernel:
    group = a.group
    defaults = ConfigLoader.get_instance().get_kernel_defaults()
    direct_threshold = int(defaults.get("direct_threshold", 4_000_000))
    # FFT round-off would fill an untruncated kernel with spurious mass
    exact = policy.eps_per_step == 0.0
    method = "direct" if exact or a.array.size * b.array.size <= direct_threshold else "fft"
    array = signal.convolve(a.array, b.array, mode="full", method=method)
    np.maximum(array, 0.0, out=array)
    offset = np.asarray(a.offset) + np.asarray(b.offset)
    removed = 0.0

    # Clip to the window |x_j| <= W
    W = _window_radius(group, policy)
    lo = np.maximum(offset, -W)
    hi = np.minimum(offset + np.asarray(array.shape) - 1, W)
    inner = tuple(slice(int(l - o), int(h - o + 1)) for l, h, o in zip(lo, hi, offset))
    total = float(array.sum())
    array = array[inner]
    removed += total - float(array.sum())
    offset = lo

    small = array <= policy.eps_per_step
    removed += float(array[small].sum())
    array = np.where(small, 0.0, array)

    count = int(np.count_nonzero(array))
    if count > policy.max_support:
        ranked = np.sort(array[array > 0])[::-1]
        if policy.mode == "threshold":
            raise SupportCapError(
                f"Support of {count} entries exceeds cap {policy.max_support}",
                suggested_eps=float(ranked[policy.max_support]),
            )
        # Row-major flat order is element order on Z^k
        flat = array.ravel()
        order = np.lexsort((np.arange(flat.size), -flat))
        keep = np.zeros(flat.size, dtype=bool)
        keep[order[: policy.max_support]] = True
        removed += float(flat[~keep].sum())
        array = np.where(keep.reshape(array.shape), array, 0.0)

    nonzero = np.nonzero(array)
    if nonzero[0].size == 0:
        return LatticeKernel(group, np.zeros((1,) * group.k), tuple(0 for _ in range(group.k)),
                             a.n + b.n, a.dropped + b.dropped + removed)
    box_lo = np.array([idx.min() for idx in nonzero])
    box_hi = np.array([idx.max() for idx in nonzero])
    array = array[tuple(slice(int(l), int(h + 1)) for l, h in zip(box_lo, box_hi))]
    return LatticeKernel(group, array, tuple(int(x) for x in offset + box_lo),
                         a.n + b.n, a.dropped + b.dropped + removed)


def _partial_products(group: GroupSpec, left_rows, left_values, right_rows, right_values, chunk_pairs: int):
    """Aggregated products of a slice of the left kernel with the whole right kernel."""
    nb = right_rows.shape[0]
    step = max(1, chunk_pairs // max(nb, 1))
    rows_out: List[np.ndarray] = []
    values_out: List[np.ndarray] = []
    for start in range(0, left_rows.shape[0], step):
        ra = left_rows[start:start + step]
        va = left_values[start:start + step]
        products = group.batch_mul(np.repeat(ra, nb, axis=0), np.tile(right_rows, (ra.shape[0], 1)))
        weights = np.repeat(va, nb) * np.tile(right_values, ra.shape[0])
        rows, values = aggregate(products, weights)
        rows_out.append(rows)
        values_out.append(values)
    if not rows_out:
        return np.zeros((0, group.arity), dtype=np.int64), np.zeros(0)
    if len(rows_out) == 1:
        return rows_out[0], values_out[0]
    return aggregate(np.concatenate(rows_out), np.concatenate(values_out))


def _convolve_dict(a: DictKernel, b: DictKernel, policy: TruncationPolicy) -> DictKernel:
    group = a.group
    chunk_pairs = int(ConfigLoader.get_instance().get_kernel_defaults().get("chunk_pairs", 1 << 22))
    bounds = np.linspace(0, a.rows.shape[0], max(policy.threads, 1) + 1).astype(int)
    parts = [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def work(part: Tuple[int, int]):
        lo, hi = part
        return _partial_products(group, a.rows[lo:hi], a.values[lo:hi], b.rows, b.values, chunk_pairs)

    if len(parts) > 1:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            partials = list(pool.map(work, parts))
    else:
        partials = [work(p) for p in parts]

    # Merge in partition order
    if not partials:
        rows, values = np.zeros((0, group.arity), dtype=np.int64), np.zeros(0)
    elif len(partials) == 1:
        rows, values = partials[0]
    else:
        rows, values = aggregate(np.concatenate([p[0] for p in partials]),
                                 np.concatenate([p[1] for p in partials]))
    rows, values, removed = prune(rows, values, policy)
    return DictKernel(group, rows, values, a.n + b.n, a.dropped + b.dropped + removed)


# ============================================================================
# Powers
# ============================================================================

def power(measure, n: int, policy: TruncationPolicy, step: Optional[SparseKernel] = None) -> SparseKernel:
    """
    mu^(n) by square-and-multiply from the most significant bit.

    Args:
        measure: Built jump measure
        n: Power (>= 0)
        policy: Truncation policy
        step: Pre-built one-step kernel (built from the policy otherwise)

    Returns:
        SparseKernel with kernel.n == n
    """
    if n < 0:
        raise ValueError(f"Power must be non-negative, got {n}")
    if n == 0:
        return identity_kernel(measure.group)
    step = one_step_kernel(measure, policy) if step is None else step
    result = step
    for bit in bin(n)[3:]:
        result = convolve(result, result, policy)
        if bit == "1":
            result = convolve(result, step, policy)
    return result


class PowerCache:
    """
    Dyadic powers mu^(2^j) computed once; mu^(n) is the product over set bits.
    """

    def __init__(self, measure, policy: TruncationPolicy):
        self.measure = measure
        self.policy = policy
        self.logger = LongJumpLogger.get_logger()
        self._dyadic: List[SparseKernel] = []
        self._powers: Dict[int, SparseKernel] = {}

    def dyadic(self, j: int) -> SparseKernel:
        while len(self._dyadic) <= j:
            if not self._dyadic:
                self._dyadic.append(one_step_kernel(self.measure, self.policy))
            else:
                last = self._dyadic[-1]
                self._dyadic.append(convolve(last, last, self.policy))
            self.logger.debug(f"Computed mu^({1 << (len(self._dyadic) - 1)}), "
                              f"support {self._dyadic[-1].support_size}, dropped {self._dyadic[-1].dropped:.3g}")
        return self._dyadic[j]

    def power(self, n: int) -> SparseKernel:
        if n < 0:
            raise ValueError(f"Power must be non-negative, got {n}")
        if n in self._powers:
            return self._powers[n]
        if n == 0:
            return identity_kernel(self.measure.group)
        result: Optional[SparseKernel] = None
        for j in range(n.bit_length()):
            if n >> j & 1:
                factor = self.dyadic(j)
                result = factor if result is None else convolve(result, factor, self.policy)
        self._powers[n] = result
        return result


# ============================================================================
# Statistics
# ============================================================================

def return_series(
    measure,
    n_list: Sequence[int],
    policy: TruncationPolicy,
    cache: Optional[PowerCache] = None,
) -> List[ReturnRow]:
    """
    Interval-valued series for mu^(n)(e).

    Args:
        measure: Built jump measure
        n_list: Ascending powers
        policy: Truncation policy
        cache: Shared power cache

    Returns:
        One ReturnRow per n
    """
    logger = LongJumpLogger.get_logger()
    n_list = [int(n) for n in n_list]
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise ValueError(f"n values must be ascending, got {n_list}")
    cache = PowerCache(measure, policy) if cache is None else cache
    identity = measure.group.identity
    rows = []
    for n in n_list:
        if n == 0:
            rows.append(ReturnRow(0, 1.0, 1.0, 1.0, 0.0))
            continue
        kernel = cache.power(n)
        lower = kernel.value_at(identity)
        rows.append(ReturnRow(n, lower, lower + kernel.dropped, kernel.sup_norm, kernel.dropped))
        logger.info(f"n={n}: mu^(n)(e) in [{lower:.6g}, {lower + kernel.dropped:.6g}]")
    return rows


def _check_reliability(kernel: SparseKernel, volume: float):
    fraction = float(ConfigLoader.get_instance().get("kernels", "reliability_fraction", 0.25))
    if kernel.dropped > fraction / volume:
        raise KernelReliabilityError(
            f"Dropped mass {kernel.dropped:.3g} of mu^({kernel.n}) exceeds {fraction:g}/V(n) = {fraction / volume:.3g}"
        )


def near_diagonal_profile(kernel: SparseKernel, geom, eta: float) -> NearDiagonalProfile:
    """
    Range of k(g) V(n) over {g : ||g|| <= eta n}.

    Raises:
        KernelReliabilityError: ledger not small against 1/V(n)
    """
    n = kernel.n
    volume = float(geom.volume(float(n)))
    _check_reliability(kernel, volume)
    ball = geom.enumerate_ball(eta * n)
    ratios = kernel.values_at(ball) * volume
    return NearDiagonalProfile(
        n=n,
        eta=float(eta),
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        ratio_at_identity=kernel.value_at(geom.spec.identity) * volume,
        ball_size=int(ball.shape[0]),
        volume=volume,
    )


def _shifted_difference(k1: SparseKernel, k2: SparseKernel, y: Sequence[int]) -> np.ndarray:
    """Values of k1(x) - k2(x y) over the union of both supports."""
    group = k1.group
    y = group.validate(y)
    if isinstance(k1, LatticeKernel) and isinstance(k2, LatticeKernel):
        # x y = x + y on Z^k: shift k2 by -y
        offset2 = np.asarray(k2.offset) - np.asarray(y)
        lo = np.minimum(np.asarray(k1.offset), offset2)
        hi = np.maximum(np.asarray(k1.offset) + np.asarray(k1.array.shape),
                        offset2 + np.asarray(k2.array.shape)) - 1
        shifted = LatticeKernel(group, k2.array, tuple(int(x) for x in offset2), k2.n, k2.dropped)
        return (k1.shifted_box(lo, hi) - shifted.shifted_box(lo, hi)).ravel()
    rows1, values1 = k1.items()
    rows2, values2 = k2.items()
    y_inv = np.asarray([group.inv(y, check=False)], dtype=np.int64)
    moved = group.batch_mul(rows2, y_inv) if rows2.shape[0] else rows2
    _, diff = aggregate(np.concatenate([rows1, moved]), np.concatenate([values1, -values2]))
    return diff


def tv_difference(k1: SparseKernel, k2: SparseKernel, y: Sequence[int]) -> float:
    """sum_x |k1(x) - k2(x y)|; the ledger slack is tv_slack(k1, k2)."""
    if k1.group != k2.group:
        raise ValueError("Kernels live on different groups")
    return float(np.abs(_shifted_difference(k1, k2, y)).sum())


def tv_slack(k1: SparseKernel, k2: SparseKernel) -> float:
    """Bound on how much the truncation can move tv_difference."""
    return k1.dropped + k2.dropped


def regularity_ratio(
    measure,
    geom,
    n: int,
    m_values: Sequence[int],
    y_list: Sequence[Sequence[int]],
    policy: TruncationPolicy,
    cache: Optional[PowerCache] = None,
) -> RegularityReport:
    """
    Smallest C with |mu^(n+m)(x y) - mu^(n)(x)| <= C (m/n + ||y||^(1/2w_*) / sqrt(n)) mu^(n)(e)
    over the (m, y) grid and every x.

    Raises:
        KernelReliabilityError: ledgers not small against 1/V(n)
    """
    if n < 2:
        raise ValueError(f"Base time must be >= 2, got {n}")
    cache = PowerCache(measure, policy) if cache is None else cache
    volume = float(geom.volume(float(n)))
    base = cache.power(n)
    _check_reliability(base, volume)
    at_identity = base.value_at(measure.group.identity)
    exponent = 1.0 / (2.0 * geom.w_star)
    rows: List[Tuple[int, str, float]] = []
    for m in m_values:
        later = cache.power(n + int(m))
        _check_reliability(later, volume)
        for y in y_list:
            y = measure.group.validate(y)
            worst = float(np.abs(_shifted_difference(base, later, y)).max(initial=0.0))
            scale = (m / n + geom.norm_g2(y) ** exponent / np.sqrt(n)) * at_identity
            ratio = 0.0 if worst == 0.0 else worst / scale if scale > 0 else float("inf")
            rows.append((int(m), format_element(y), float(ratio)))
    return RegularityReport(n=int(n), worst=max((r[2] for r in rows), default=0.0), rows=rows)
