"""Numerical laboratory for extremal-operator equations with quadratic
gradient terms: operator evaluation, the gradient-removing change of
variables, radial shooting, decay classification, critical exponents,
ball eigenvalues, and Dirichlet problems on balls."""

__version__ = "0.1.0"

from .pucci import (Ellipticity, OperatorSign, Spectrum, SymMatrix,
                    eigenvalues_sym, invert_pucci_1d, outer, pucci_eval,
                    pucci_radial_eval, weight_1d)
from .dsl import Expr, eval_expr, format_expr, parse_expr
from .pairs import BUILTIN_NAMES, GradientPair, builtin_pair, pair_from_exprs, pair_from_json
from .transform import (GrowthReport, TransformTable, classify_growth,
                        compute_G, compute_phi, invert_phi, transformed_h)
from .shooting import (CriticalExponents, DecayClass, LinearSource,
                       LocatedExponent, PowerSource, ShootConfig, Trajectory,
                       TransformedSource, classify_decay, critical_constants,
                       find_critical_p, first_eigenvalue_ball, integrate_shoot,
                       radial_rhs)
from .dirichlet import (AutonomousSpec, DecomposedSpec, RadialSolution,
                        ScanResult, crossing_radius, residual_original,
                        solve_ball, uniqueness_scan)

__all__ = [
    "Ellipticity", "OperatorSign", "Spectrum", "SymMatrix",
    "eigenvalues_sym", "invert_pucci_1d", "outer", "pucci_eval",
    "pucci_radial_eval", "weight_1d",
    "Expr", "eval_expr", "format_expr", "parse_expr",
    "BUILTIN_NAMES", "GradientPair", "builtin_pair", "pair_from_exprs", "pair_from_json",
    "GrowthReport", "TransformTable", "classify_growth",
    "compute_G", "compute_phi", "invert_phi", "transformed_h",
    "CriticalExponents", "DecayClass", "LinearSource", "LocatedExponent",
    "PowerSource", "ShootConfig", "Trajectory", "TransformedSource",
    "classify_decay", "critical_constants", "find_critical_p",
    "first_eigenvalue_ball", "integrate_shoot", "radial_rhs",
    "AutonomousSpec", "DecomposedSpec", "RadialSolution", "ScanResult",
    "crossing_radius", "residual_original", "solve_ball", "uniqueness_scan",
    "__version__",
]
