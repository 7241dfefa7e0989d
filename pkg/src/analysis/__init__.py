"""LongJump - Analysis"""

from src.analysis.dirichlet import (
    KilledOperator,
    dirichlet_eigenvalue,
    dirichlet_form,
    killed_eigenvalue,
    poincare_ratio,
    pseudo_poincare_constant,
    rayleigh_zeta,
)
from src.analysis.fitting import fit_loglog, holder_fit

__all__ = [
    "KilledOperator",
    "dirichlet_eigenvalue",
    "dirichlet_form",
    "fit_loglog",
    "holder_fit",
    "killed_eigenvalue",
    "poincare_ratio",
    "pseudo_poincare_constant",
    "rayleigh_zeta",
]
