"""Approximation and integration in Hermite spaces of analytic functions.

Functions on R^s are expanded in normalized Hermite polynomials; the
spaces weight coefficient ``k`` by ``omega^{sum_j a_j k_j^{b_j}}``. The
package provides Gauss-Hermite rules, the tensor-product approximation
algorithm with its a-priori error bound, the recipes that pick its
parameters for a target error, and an experiment harness.
"""

from .approximate import (
    ApproximationPlan,
    ErrorReport,
    a_priori_bound,
    exact_l2_error,
    exp_recipe,
    manual_plan,
    matched_M,
    run,
    spt_recipe,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    DimensionMismatchError,
    EvaluationError,
    HermiteSpaceError,
    SpaceOverflowError,
)
from .hermite import eval_all, eval_multi, linearize_product
from .integrate import IntegrationRule, integrate_tensor, reduce_approximation
from .quadrature import GaussHermiteRule, GPerpSpec, TensorRule, apply_1d, apply_tensor, make_rule, tail_F
from .spectral import (
    ExpLinear,
    FiniteSeries,
    KernelSection,
    SpectralFunction,
    coefficients_exp_linear,
    l2_norm,
    space_norm,
)
from .weights import IndexSet, WeightSpec, enumerate_index_set, exponent, weight

__version__ = "0.1.0"

__all__ = [
    "ApproximationPlan", "BudgetExceededError", "ConfigError", "DimensionMismatchError",
    "ErrorReport", "EvaluationError", "ExpLinear", "FiniteSeries", "GPerpSpec",
    "GaussHermiteRule", "HermiteSpaceError", "IndexSet", "IntegrationRule", "KernelSection",
    "SpaceOverflowError", "SpectralFunction", "TensorRule", "WeightSpec",
    "a_priori_bound", "apply_1d", "apply_tensor", "coefficients_exp_linear",
    "enumerate_index_set", "eval_all", "eval_multi", "exact_l2_error", "exp_recipe",
    "exponent", "integrate_tensor", "l2_norm", "linearize_product", "make_rule",
    "manual_plan", "matched_M", "reduce_approximation", "run", "space_norm",
    "spt_recipe", "tail_F", "weight",
]
