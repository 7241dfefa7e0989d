"""
LongJump - Brute-force Quasi-norm Oracle

The quasi-norm of g is the least R such that g is a word using each
generator s (or its inverse) at most floor(F_s(R)) times. For a fixed cap
the search keeps, for every reachable element, the Pareto-minimal letter
usage vectors; the norm is then

    min over labels u of max_s F_s^-1(u_s),

which is the exact infimum over the finite grid where some floor(F_s(R))
increments.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

from src.groups.elements import Element, GroupSpec
from src.geometry.adapted import WeightSystem
from src.utils.logger import LongJumpLogger

Usage = Tuple[int, ...]


def _dominates(a: Usage, b: Usage) -> bool:
    return all(x <= y for x, y in zip(a, b))


class OracleSearch:
    """Pareto breadth-first search over (element, usage vector) states."""

    def __init__(self, spec: GroupSpec, system: WeightSystem, cap: float):
        self.spec = spec
        self.system = system
        self.cap = float(cap)
        self.logger = LongJumpLogger.get_logger()
        self.names = list(system.sigma)
        self.budgets = [
            int(math.floor(float(system.weights[n].eval(self.cap)) * (1.0 + 1e-12))) for n in self.names
        ]
        self.letters: List[Tuple[int, Element]] = []
        for j, name in enumerate(self.names):
            s = system.sigma[name]
            s_inv = spec.inv(s, check=False)
            self.letters.append((j, s))
            if s_inv != s:
                self.letters.append((j, s_inv))
        self._labels: Optional[Dict[Element, List[Usage]]] = None

    def run(self) -> Dict[Element, List[Usage]]:
        """Pareto labels of every element reachable within the budgets."""
        if self._labels is not None:
            return self._labels
        start: Usage = (0,) * len(self.names)
        labels: Dict[Element, List[Usage]] = {self.spec.identity: [start]}
        frontier = [(self.spec.identity, start)]
        depth = 0
        while frontier:
            depth += 1
            next_frontier = []
            for g, usage in frontier:
                if usage not in labels.get(g, ()):
                    continue
                for j, s in self.letters:
                    if usage[j] >= self.budgets[j]:
                        continue
                    new_usage = usage[:j] + (usage[j] + 1,) + usage[j + 1:]
                    h = self.spec.mul(g, s, check=False)
                    current = labels.get(h, [])
                    if any(_dominates(old, new_usage) for old in current):
                        continue
                    labels[h] = [old for old in current if not _dominates(new_usage, old)] + [new_usage]
                    next_frontier.append((h, new_usage))
            frontier = next_frontier
            self.logger.debug(f"Oracle depth {depth}: {len(frontier)} new states, {len(labels)} elements")
        self._labels = labels
        return labels

    def _value(self, usage: Usage) -> float:
        value = 0.0
        for j, u in enumerate(usage):
            if u:
                value = max(value, float(self.system.weights[self.names[j]].inverse(float(u))))
        return value

    def norm(self, g: Sequence[int]) -> Optional[float]:
        """Exact quasi-norm of g, or None when g needs more than the cap."""
        labels = self.run().get(self.spec.validate(g))
        if not labels:
            return None
        return min(self._value(u) for u in labels)

    def all_norms(self) -> Dict[Element, float]:
        return {g: min(self._value(u) for u in ls) for g, ls in self.run().items()}


def oracle_norm(spec: GroupSpec, system: WeightSystem, g: Sequence[int], cap: float) -> Optional[float]:
    """Minimal R <= cap such that g is a budget-respecting word; None if unreachable."""
    return OracleSearch(spec, system, cap).norm(g)
