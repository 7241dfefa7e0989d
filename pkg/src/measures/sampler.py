"""
LongJump - Step Sampling

Draws i.i.d. increments from a jump measure: a component by its weight,
then a radius by the shell-mass law, then a uniform point of the shell.
"""

from typing import Tuple

import numpy as np

from src.groups.elements import Element
from src.measures.measure import JumpComponent, JumpMeasure


class MeasureSampler:
    """Vectorized sampler bound to one measure."""

    def __init__(self, measure: JumpMeasure):
        self.measure = measure
        self.group = measure.group
        weights = [measure.p0] + [c.p for c in measure.components]
        self.choice_cdf = np.cumsum(weights)
        self.choice_cdf[-1] = 1.0
        self._mu0_atoms = np.asarray(sorted(measure.mu0), dtype=np.int64).reshape(-1, self.group.arity)
        self._mu0_cdf = np.cumsum([measure.mu0[tuple(a)] for a in map(tuple, self._mu0_atoms.tolist())])
        if self._mu0_cdf.size:
            self._mu0_cdf[-1] = 1.0

    def sample_batch(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw `count` increments as an (count, arity) int64 array."""
        out = np.zeros((count, self.group.arity), dtype=np.int64)
        if count == 0:
            return out
        which = np.searchsorted(self.choice_cdf, rng.random(count), side="right")
        mask = which == 0
        if mask.any():
            out[mask] = self._sample_mu0(int(mask.sum()), rng)
        for i, component in enumerate(self.measure.components, start=1):
            mask = which == i
            if mask.any():
                out[mask] = self._sample_component(component, int(mask.sum()), rng)
        return out

    def _sample_mu0(self, count: int, rng: np.random.Generator) -> np.ndarray:
        idx = np.searchsorted(self._mu0_cdf, rng.random(count), side="right")
        return self._mu0_atoms[idx]

    @staticmethod
    def _sample_component(component: JumpComponent, count: int, rng: np.random.Generator) -> np.ndarray:
        cmap = component.cmap
        if component.is_finite:
            cdf = np.cumsum(component.atom_masses)
            cdf[-1] = 1.0
            idx = np.searchsorted(cdf, rng.random(count), side="right")
            return np.asarray(cmap.elements, dtype=np.int64)[idx]
        radii = component.sample_radii(count, rng)
        return cmap.sample_shell(radii, rng)


def sample_step(measure: JumpMeasure, rng: np.random.Generator) -> Tuple[Element, np.random.Generator]:
    """One increment; the generator is advanced in place and returned."""
    row = MeasureSampler(measure).sample_batch(1, rng)[0]
    return tuple(int(x) for x in row), rng
