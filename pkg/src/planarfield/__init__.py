"""Numerical analysis of planar vector fields given as expression pairs."""

__version__ = "0.1.0"

from .exprcore import DomainError, FieldExpr, ParseError, eval_field, jacobian, parse, parse_field  # noqa: E402
from .spectral import FieldClass, Region, SpectralClass, classify_point, spectral_survey  # noqa: E402
from .singular import LocalClass, Trichotomy, classify_singularity, find_singularities  # noqa: E402
from .topo import CircleSpec, poincare_index, perturb_constant  # noqa: E402
from .flow import build_rectangle, classify_omega_limit, green_check, integrate, orthogonal_field  # noqa: E402
from .verdict import (  # noqa: E402
    Conclusion,
    Theorem,
    Verdict,
    check_corollaries,
    check_theorem_A,
    check_theorem_B,
    check_theorem_C,
)

__all__ = [
    "CircleSpec", "Conclusion", "DomainError", "FieldClass", "FieldExpr", "LocalClass", "ParseError",
    "Region", "SpectralClass", "Theorem", "Trichotomy", "Verdict", "build_rectangle", "check_corollaries",
    "check_theorem_A", "check_theorem_B", "check_theorem_C", "classify_omega_limit", "classify_point",
    "classify_singularity", "eval_field", "find_singularities", "green_check", "integrate", "jacobian",
    "orthogonal_field", "parse", "parse_field", "perturb_constant", "poincare_index", "spectral_survey",
]
