"""Eisenstein series on Gamma_0(q) and level-aspect equidistribution experiments."""

__version__ = "0.1.0"

from .eisenstein import (
    EisensteinSeries,
    coset_sum_eval,
    cusp_expansion,
    eval_abs2,
    eval_eisenstein,
    scattering_matrix,
)
from .errors import (
    CapabilityError,
    ConditioningError,
    DomainError,
    LevelQueError,
    MapsToCuspError,
    PoleError,
    QuadratureBudgetError,
)
from .halfplane import Cusp, GroupElement, HalfPlanePoint, reduce_to_fundamental_domain
from .kernels import BACKEND
from .quadrature import Region, TestFunction, integrate_abs2, que_ratio

__all__ = [
    "__version__", "BACKEND",
    "EisensteinSeries", "coset_sum_eval", "cusp_expansion", "eval_abs2", "eval_eisenstein",
    "scattering_matrix", "Cusp", "GroupElement", "HalfPlanePoint", "reduce_to_fundamental_domain",
    "Region", "TestFunction", "integrate_abs2", "que_ratio",
    "LevelQueError", "DomainError", "CapabilityError", "PoleError", "ConditioningError",
    "MapsToCuspError", "QuadratureBudgetError",
]
