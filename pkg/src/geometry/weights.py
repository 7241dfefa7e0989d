"""
LongJump - Weight Functions

Increasing weights F with F(0) = 0 that are regularly varying at infinity.
Every weight carries a class key (index, log power, log-log power): the
weight behaves like t^index * log(t)^log_power * loglog(t)^loglog_power.
Keys order weights at infinity lexicographically.
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from src.utils.errors import WeightFunctionError

ClassKey = Tuple[float, float, float]
ArrayLike = Union[float, np.ndarray]

# Relative tolerance of numeric inverses
INVERSE_RTOL = 1e-12
_MONOTONE_GRID = np.concatenate([[0.0], np.geomspace(1e-6, 1e12, 400)])


def _as_array(t: ArrayLike) -> np.ndarray:
    return np.asarray(t, dtype=float)


def _restore(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def bisect_inverse(func, y: ArrayLike, rtol: float = INVERSE_RTOL) -> ArrayLike:
    """Vectorized inverse of an increasing function with func(0) = 0."""
    target = np.atleast_1d(_as_array(y)).astype(float)
    lo = np.zeros_like(target)
    hi = np.maximum(target, 1.0)
    for _ in range(2100):
        short = func(hi) < target
        if not short.any():
            break
        hi = np.where(short, hi * 2.0, hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        below = func(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(hi, 1e-300)):
            break
    result = np.where(target <= 0, 0.0, 0.5 * (lo + hi))
    return _restore(result if np.ndim(y) else result[0], y)


def key_max(keys: Sequence[ClassKey]) -> ClassKey:
    return max(keys)


def key_min(keys: Sequence[ClassKey]) -> ClassKey:
    return min(keys)


def key_product(a: ClassKey, b: ClassKey) -> ClassKey:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def key_inverse(key: ClassKey) -> ClassKey:
    a, b, c = key
    return (1.0 / a, -b / a, -c / a)


def _check_increasing(values: np.ndarray, name: str):
    if not np.all(np.diff(values) > 0) or values[0] != 0:
        raise WeightFunctionError(f"{name} is not strictly increasing from 0")


# ============================================================================
# Weight families
# ============================================================================

class WeightFunction(ABC):
    """Increasing budget function t -> F(t) with F(0) = 0."""

    family: str = "abstract"

    @abstractmethod
    def eval(self, t: ArrayLike) -> ArrayLike:
        """Evaluate F on a scalar or array."""

    @property
    @abstractmethod
    def key(self) -> ClassKey:
        """Class key at infinity."""

    def __call__(self, t: ArrayLike) -> ArrayLike:
        return self.eval(t)

    @property
    def index(self) -> float:
        return self.key[0]

    @property
    def log_power(self) -> float:
        return self.key[1]

    @property
    def loglog_power(self) -> float:
        return self.key[2]

    def inverse(self, y: ArrayLike) -> ArrayLike:
        return bisect_inverse(lambda t: _as_array(self.eval(t)), y)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "key": list(self.key)}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class PowerWeight(WeightFunction):
    """F(t) = (1+t)^w - 1."""

    family = "Power"

    def __init__(self, w: float):
        if not w > 0:
            raise WeightFunctionError(f"Power weight needs a positive index, got {w}")
        self.w = float(w)

    def eval(self, t: ArrayLike) -> ArrayLike:
        return _restore(np.expm1(self.w * np.log1p(_as_array(t))), t)

    def inverse(self, y: ArrayLike) -> ArrayLike:
        return _restore(np.expm1(np.log1p(_as_array(y)) / self.w), y)

    @property
    def key(self) -> ClassKey:
        return (self.w, 0.0, 0.0)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "w": self.w}


class LinearSqrtCapWeight(PowerWeight):
    """Inverse of max(t, t^2) up to constants: (1+t)^(1/2) - 1."""

    family = "LinearSqrtCap"

    def __init__(self):
        super().__init__(0.5)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family}


class PowerLogWeight(WeightFunction):
    """F(t) = t^w log(e+t)^beta for t >= 1, linear on [0, 1]."""

    family = "PowerLog"

    def __init__(self, w: float, beta: float):
        if not w > 0:
            raise WeightFunctionError(f"PowerLog weight needs a positive index, got {w}")
        self.w = float(w)
        self.beta = float(beta)
        self._at_one = math.log(math.e + 1.0) ** self.beta
        _check_increasing(_as_array(self.eval(_MONOTONE_GRID)), f"PowerLog(w={w}, beta={beta})")

    def eval(self, t: ArrayLike) -> ArrayLike:
        x = _as_array(t)
        tail = np.power(np.maximum(x, 1.0), self.w) * np.power(np.log(np.e + np.maximum(x, 1.0)), self.beta)
        return _restore(np.where(x >= 1.0, tail, x * self._at_one), t)

    @property
    def key(self) -> ClassKey:
        return (self.w, self.beta, 0.0)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "w": self.w, "beta": self.beta}


class InverseWeight(WeightFunction):
    """Functional inverse of another weight."""

    family = "Inverse"

    def __init__(self, base: WeightFunction):
        self.base = base

    def eval(self, t: ArrayLike) -> ArrayLike:
        return self.base.inverse(t)

    def inverse(self, y: ArrayLike) -> ArrayLike:
        return self.base.eval(y)

    @property
    def key(self) -> ClassKey:
        return key_inverse(self.base.key)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "of": self.base.describe()}


class MaxWeight(WeightFunction):
    """Pointwise maximum of several weights."""

    family = "Max"

    def __init__(self, members: Sequence[WeightFunction]):
        if not members:
            raise WeightFunctionError("MaxWeight needs at least one member")
        self.members = list(members)

    def eval(self, t: ArrayLike) -> ArrayLike:
        values = np.max([_as_array(m.eval(t)) for m in self.members], axis=0)
        return _restore(values, t)

    def inverse(self, y: ArrayLike) -> ArrayLike:
        values = np.min([_as_array(m.inverse(y)) for m in self.members], axis=0)
        return _restore(values, y)

    @property
    def key(self) -> ClassKey:
        return key_max([m.key for m in self.members])

    def describe(self) -> Dict[str, Any]:
        if len(self.members) == 1:
            return self.members[0].describe()
        return {"family": self.family, "of": [m.describe() for m in self.members]}


# ============================================================================
# Jump profiles and their transforms
# ============================================================================

class JumpProfile(WeightFunction):
    """
    Tail profile phi(t) = (1+t)^alpha log(e+t)^beta of a jump component.

    Unlike the budget weights, phi(0) = 1.
    """

    family = "JumpProfile"

    def __init__(self, alpha: float, beta: float = 0.0):
        if not alpha > 0:
            raise WeightFunctionError(f"Jump profile needs a positive index, got alpha={alpha}")
        self.alpha = float(alpha)
        self.beta = float(beta)
        values = _as_array(self.eval(_MONOTONE_GRID))
        if not np.all(np.diff(values) > 0):
            raise WeightFunctionError(f"phi(t) = (1+t)^{alpha} log(e+t)^{beta} is not increasing")

    def eval(self, t: ArrayLike) -> ArrayLike:
        x = _as_array(t)
        value = np.power(1.0 + x, self.alpha) * np.power(np.log(np.e + x), self.beta)
        return _restore(value, t)

    @property
    def key(self) -> ClassKey:
        return (self.alpha, self.beta, 0.0)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}


def transformed_key(alpha: float, beta: float) -> ClassKey:
    """Class key of Phi(t) = t^2 / int_0^t 2s/phi(s) ds."""
    if alpha < 2:
        return (alpha, beta, 0.0)
    if alpha == 2:
        if beta < 1:
            return (2.0, beta - 1.0, 0.0)
        if beta == 1:
            return (2.0, 0.0, -1.0)
    return (2.0, 0.0, 0.0)


class TransformedWeight(WeightFunction):
    """
    Phi(t) = t^2 / I(t) with I(t) = int_0^t 2s/phi(s) ds on [1, inf),
    extended linearly to [0, 1].

    Pure power profiles use closed forms; log-corrected profiles integrate
    numerically on a geometric grid and finish each point with Simpson's rule.
    """

    family = "Phi"
    _GRID_TOP = 1e20
    _GRID_POINTS = 4097

    def __init__(self, phi: JumpProfile):
        self.phi = phi
        self._closed = phi.beta == 0.0
        self._grid = None
        self._cumulative = None
        if not self._closed:
            self._build_table()
        self._at_one = 1.0 / float(self._integral(np.array([1.0]))[0])

    def _integrand(self, s: np.ndarray) -> np.ndarray:
        return 2.0 * s / _as_array(self.phi.eval(s))

    def _build_table(self):
        grid = np.geomspace(1.0, self._GRID_TOP, self._GRID_POINTS)
        head, _ = integrate.quad(lambda s: 2.0 * s / self.phi.eval(s), 0.0, 1.0, epsabs=0.0, epsrel=1e-12)
        pieces = [
            integrate.quad(lambda s: 2.0 * s / self.phi.eval(s), a, b, epsabs=0.0, epsrel=1e-12)[0]
            for a, b in zip(grid[:-1], grid[1:])
        ]
        self._grid = grid
        self._cumulative = head + np.concatenate([[0.0], np.cumsum(pieces)])

    def _integral(self, t: np.ndarray) -> np.ndarray:
        """I(t) for t >= 1."""
        alpha = self.phi.alpha
        if self._closed:
            u = 1.0 + t
            if alpha == 1.0:
                return 2.0 * (t - np.log1p(t))
            if alpha == 2.0:
                return 2.0 * (np.log1p(t) + 1.0 / u - 1.0)
            return 2.0 * (
                (np.power(u, 2.0 - alpha) - 1.0) / (2.0 - alpha)
                - (np.power(u, 1.0 - alpha) - 1.0) / (1.0 - alpha)
            )
        beyond = t > self._GRID_TOP
        if beyond.any():
            raise WeightFunctionError(f"Phi evaluated beyond {self._GRID_TOP:g}")
        k = np.clip(np.searchsorted(self._grid, t, side="right") - 1, 0, self._GRID_POINTS - 1)
        a = self._grid[k]
        mid = 0.5 * (a + t)
        simpson = (t - a) / 6.0 * (self._integrand(a) + 4.0 * self._integrand(mid) + self._integrand(t))
        return self._cumulative[k] + simpson

    def eval(self, t: ArrayLike) -> ArrayLike:
        x = _as_array(t)
        big = np.maximum(x, 1.0)
        tail = big * big / self._integral(big)
        return _restore(np.where(x >= 1.0, tail, x * self._at_one), t)

    @property
    def key(self) -> ClassKey:
        return transformed_key(self.phi.alpha, self.phi.beta)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "alpha": self.phi.alpha, "beta": self.phi.beta}


def phi_to_Phi(phi: JumpProfile) -> TransformedWeight:
    """Effective time scaling Phi of a jump profile phi."""
    if not isinstance(phi, JumpProfile):
        raise WeightFunctionError(f"Expected a jump profile, got {type(phi).__name__}")
    return TransformedWeight(phi)


# ============================================================================
# Class functions (volume factors)
# ============================================================================

class ClassFunction:
    """
    R -> R^W log(e+R)^B log(e+log(e+R))^C, the canonical representative of
    a class key. Products add keys; max and min select by key.
    """

    def __init__(self, key: ClassKey):
        self.key = tuple(float(x) for x in key)
        if not self.key[0] > 0:
            raise WeightFunctionError(f"Class function needs a positive index, got {self.key}")

    @classmethod
    def of(cls, weight: WeightFunction) -> "ClassFunction":
        return cls(weight.key)

    @property
    def index(self) -> float:
        return self.key[0]

    @property
    def is_pure_power(self) -> bool:
        return self.key[1] == 0.0 and self.key[2] == 0.0

    def __call__(self, R: ArrayLike) -> ArrayLike:
        W, B, C = self.key
        x = _as_array(R)
        value = np.power(x, W)
        if B:
            value = value * np.power(np.log(np.e + x), B)
        if C:
            value = value * np.power(np.log(np.e + np.log(np.e + x)), C)
        return _restore(value, R)

    def inverse(self, y: ArrayLike) -> ArrayLike:
        if self.is_pure_power:
            return _restore(np.power(_as_array(y), 1.0 / self.key[0]), y)
        return bisect_inverse(lambda t: _as_array(self(t)), y)

    def __mul__(self, other: "ClassFunction") -> "ClassFunction":
        return ClassFunction(key_product(self.key, other.key))

    def __eq__(self, other) -> bool:
        return isinstance(other, ClassFunction) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"ClassFunction{self.key}"

    def describe(self) -> Dict[str, Any]:
        return {"index": self.key[0], "log_power": self.key[1], "loglog_power": self.key[2]}
