"""The tensor Gauss-Hermite approximation algorithm and its error analysis.

For ``M > 1`` and tensor orders ``m_1..m_s`` the algorithm returns

    A(f) = sum_{h in A(s, M)} Q_{n,s}(f H_h) H_h,

using only the ``n = prod_j m_j`` point values of ``f`` at the tensor
nodes. Its worst-case error over the unit ball of the Hermite space
satisfies

    e^2 <= 1/M + M^{2 B(s) + K} D F_n,

and the two recipes below choose ``M`` and the orders from a target error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

from .errors import BudgetExceededError, DimensionMismatchError
from .quadrature import DEFAULT_POINT_BUDGET, SQRT_8PI, TensorRule, hermite_moments, log_tail_F
from .spectral import SpectralFunction
from .weights import IndexSet, K_of_omega, WeightSpec, big_B, enumerate_index_set, log_D

#: maximum of n * |A(s, M)| for a plan to be run
DEFAULT_COST_BUDGET = 10**9


@dataclass(frozen=True, eq=False)
class ApproximationPlan:
    """Everything needed to run the algorithm: the space, ``M`` and the orders."""

    spec: WeightSpec
    M: float
    orders: tuple[int, ...]
    provenance: dict[str, Any] = field(default_factory=lambda: {"recipe": "manual"})

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))
        object.__setattr__(self, "M", float(self.M))
        if len(self.orders) != self.spec.s:
            raise DimensionMismatchError(f"{len(self.orders)} orders for s={self.spec.s}")
        if min(self.orders) < 1:
            raise ValueError(f"orders must all be >= 1, got {self.orders}")
        if not self.M > 1.0:
            raise ValueError(f"M must be > 1, got {self.M}")

    @property
    def n(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def index_set(self) -> IndexSet:
        return enumerate_index_set(self.spec, self.M)

    @cached_property
    def tensor(self) -> TensorRule:
        return TensorRule(self.orders)

    @property
    def cost(self) -> int:
        return self.n * len(self.index_set)

    def check_budget(self, point_budget: int = DEFAULT_POINT_BUDGET, cost_budget: int = DEFAULT_COST_BUDGET) -> None:
        if self.n > point_budget:
            raise BudgetExceededError(
                f"plan needs n={self.n} points (budget {point_budget})",
                n=self.n, orders=self.orders, M=self.M,
                **{k: v for k, v in self.provenance.items() if k in ("m", "recipe", "epsilon")},
            )
        if self.cost > cost_budget:
            raise BudgetExceededError(
                f"plan needs n={self.n} points and n*|A|={self.cost} operations "
                f"(budgets {point_budget}, {cost_budget})",
                n=self.n, orders=self.orders, index_size=len(self.index_set), M=self.M,
                **{k: v for k, v in self.provenance.items() if k in ("m", "recipe", "epsilon")},
            )


def manual_plan(spec: WeightSpec, M: float, orders: Sequence[int]) -> ApproximationPlan:
    return ApproximationPlan(spec, M, tuple(orders), {"recipe": "manual"})


def matched_M(spec: WeightSpec, orders: Sequence[int]) -> float:
    """``M`` just below ``omega^{-min_j a_j m_j^{b_j}}``.

    Then ``A(s, M)`` keeps only indices with ``h_j < m_j`` in every
    coordinate, which is where an ``m_j``-point rule still resolves
    ``f H_h``. The factor ``1 - 1e-9`` keeps indices exactly on the
    boundary out regardless of rounding.
    """
    t = min(a * math.pow(m, b) for a, b, m in zip(spec.a, spec.b, orders))
    return math.exp(t * spec.log_inv_omega) * (1.0 - 1e-9)


def run(
    plan: ApproximationPlan,
    f: Callable[[np.ndarray], np.ndarray],
    point_budget: int = DEFAULT_POINT_BUDGET,
    cost_budget: int = DEFAULT_COST_BUDGET,
) -> SpectralFunction:
    """Apply the algorithm to ``f``; returns ``h -> Q_{n,s}(f H_h)`` on A(s, M).

    ``f`` maps an ``(N, s)`` array of points to ``N`` values, is evaluated
    once per tensor node, and is never asked for anything except point
    values.
    """
    plan.check_budget(point_budget, cost_budget)
    A = plan.index_set
    moments = hermite_moments(plan.tensor, f, A.max_degrees, budget=point_budget)
    return SpectralFunction(plan.spec.s, A.array, moments[tuple(A.array.T)])


@dataclass(frozen=True)
class ErrorReport:
    """A-priori worst-case bound ``sqrt(1/M + M^{2B+K} D F_n)`` and its parts."""

    a_priori_bound: float
    truncation: float  # 1/M
    amplification: float  # M^{2B(s)+K}, may be inf
    D: float
    F_n: float
    B: float
    K: float
    log_aliasing: float  # log(M^{2B+K} D F_n)
    n_points: int
    measured_l2_error: float | None = None

    def recompute(self) -> float:
        """The bound reassembled from its parts."""
        return math.sqrt(self.truncation + self.amplification * self.D * self.F_n)

    def with_measured(self, err: float) -> "ErrorReport":
        return ErrorReport(**{**self.__dict__, "measured_l2_error": float(err)})

    def to_json(self) -> dict[str, Any]:
        return dict(self.__dict__)


def a_priori_bound(spec: WeightSpec, M: float, orders: Sequence[int]) -> ErrorReport:
    """Assemble the worst-case bound for the plan ``(M, orders)``.

    The aliasing term is combined in log space; when it overflows the bound
    is reported as ``inf``.
    """
    if not M > 1.0:
        raise ValueError(f"M must be > 1, got {M}")
    B = big_B(spec)
    _, K = K_of_omega(spec.omega)
    lD = log_D(spec)
    lF = log_tail_F(spec, orders)
    log_amp = (2.0 * B + K) * math.log(M)
    log_alias = log_amp + lD + lF
    alias = math.exp(log_alias) if log_alias < 709.0 else math.inf
    return ErrorReport(
        a_priori_bound=math.sqrt(1.0 / M + alias),
        truncation=1.0 / M,
        amplification=math.exp(log_amp) if log_amp < 709.0 else math.inf,
        D=math.exp(lD) if lD < 709.0 else math.inf,
        F_n=math.exp(lF),
        B=B,
        K=K,
        log_aliasing=log_alias,
        n_points=math.prod(int(m) for m in orders),
    )


def _floor_root(m: int, p: float) -> int:
    """``floor(m ** p)``, corrected for rounding at exact integer roots."""
    r = math.floor(math.pow(m, p))
    if math.pow(r + 1, 1.0 / p) <= m * (1.0 + 1e-15):
        r += 1
    elif r > 1 and math.pow(r, 1.0 / p) > m * (1.0 + 1e-15):
        r -= 1
    return max(1, r)


def _log_log1p_exp(x: float) -> float:
    """``log(log(1 + e^x))`` without underflow for very negative ``x``."""
    return x if x < -30.0 else math.log(math.log1p(math.exp(x)))


def exp_recipe_parameters(spec: WeightSpec, eps: float) -> dict[str, Any]:
    """Parameters of the exponential-convergence recipe for target error ``eps``.

    ``eta = (eps^2 / (2 D^{1/kappa}))^{kappa/2}`` with ``kappa = 2B(s)+K+1``;
    ``m = max_j ceil((2^{b_j+1}/a_j * log(1 + s sqrt(8 pi) / ((1 - omega^{1/2}) log(1 + eta^2))) / log(1/omega))^{B(s)})``;
    ``m_j = floor(m^{1/(B(s) b_j)})`` and ``M = 2/eps^2``. All of it is
    computed in log space; ``m`` is returned as an exact integer.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    s, L = spec.s, spec.log_inv_omega
    B = big_B(spec)
    _, K = K_of_omega(spec.omega)
    kappa = 2.0 * B + K + 1.0
    lD = log_D(spec)
    log_eta = 0.5 * kappa * (2.0 * math.log(eps) - math.log(2.0) - lD / kappa)
    # log(1 + X) with X = s sqrt(8 pi) / ((1 - sqrt(omega)) log(1 + eta^2))
    log_X = math.log(s * SQRT_8PI / (1.0 - math.sqrt(spec.omega))) - _log_log1p_exp(2.0 * log_eta)
    inner = log_X + math.log1p(math.exp(-log_X)) if log_X > 0 else math.log1p(math.exp(log_X))
    log_m_real = max(
        B * (math.log(2.0 ** (b + 1) / a) + math.log(inner) - math.log(L)) for a, b in zip(spec.a, spec.b)
    )
    if log_m_real > 700.0:
        m = math.inf
        orders: tuple[int, ...] | None = None
    else:
        m = max(1, math.ceil(math.exp(log_m_real)))
        orders = tuple(_floor_root(m, 1.0 / (B * b)) for b in spec.b)
    return {
        "recipe": "exp",
        "epsilon": eps,
        "m": m,
        "log_eta": log_eta,
        "orders": orders,
        "M": 2.0 / eps**2,
        "B": B,
        "K": K,
    }


def exp_recipe(
    spec: WeightSpec,
    eps: float,
    point_budget: int | None = DEFAULT_POINT_BUDGET,
    cost_budget: int | None = DEFAULT_COST_BUDGET,
) -> ApproximationPlan:
    """Plan guaranteeing worst-case error <= ``eps`` with ``n = O(log^{B(s)}(1 + 1/eps))``.

    Verifies ``F_n <= eta^2`` and that the assembled a-priori bound is at
    most ``eps``. Raises :class:`BudgetExceededError` (with ``m``, the orders
    and ``n`` in ``details``) when the plan is too large to run; pass
    ``None`` budgets to obtain the plan regardless.
    """
    p = exp_recipe_parameters(spec, eps)
    if p["orders"] is None:
        raise BudgetExceededError(f"recipe size m overflows for eps={eps}", m=p["m"], epsilon=eps, n=math.inf)
    orders = p["orders"]
    lF = log_tail_F(spec, orders)
    if lF > 2.0 * p["log_eta"] + 1e-9:
        raise ArithmeticError(f"F_n = e^{lF} exceeds eta^2 = e^{2 * p['log_eta']}")
    report = a_priori_bound(spec, p["M"], orders)
    if report.a_priori_bound > eps * (1.0 + 1e-9):
        raise ArithmeticError(f"a-priori bound {report.a_priori_bound} exceeds eps={eps}")
    provenance = {k: v for k, v in p.items() if k not in ("orders", "M")}
    plan = ApproximationPlan(spec, p["M"], orders, provenance)
    if point_budget is not None and cost_budget is not None:
        plan.check_budget(point_budget, cost_budget)
    return plan


def spt_orders(spec: WeightSpec, M: float, beta: float) -> tuple[int, ...]:
    """``m_j = 2 ceil((log M / (a_j^beta log(1/omega~)))^{1/b_j}) - 1`` with ``omega~ = omega^{1/(2K+2)}``."""
    _, K = K_of_omega(spec.omega)
    log_inv_tilde = spec.log_inv_omega / (2.0 * K + 2.0)
    x = math.log(M) / log_inv_tilde
    return tuple(2 * math.ceil((x / a**beta) ** (1.0 / b)) - 1 for a, b in zip(spec.a, spec.b))


def spt_recipe(
    spec: WeightSpec,
    eps: float,
    beta: float,
    delta: float,
    M: float | None = None,
    point_budget: int | None = DEFAULT_POINT_BUDGET,
    cost_budget: int | None = DEFAULT_COST_BUDGET,
) -> ApproximationPlan:
    """Odd-order plan whose size stays bounded in ``s`` when ``a_j`` grows exponentially.

    ``delta`` is the caller's claimed growth rate ``a_j >= e^{delta j}``; it
    is recorded, not checked. The constants that would fix ``M`` for a
    guaranteed error are existence-only, so ``M`` defaults to ``2/eps^2``
    and the choice is recorded in the provenance.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if not delta > 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    M_source = "caller"
    if M is None:
        M, M_source = 2.0 / eps**2, "default 2/eps^2"
    if not M > 1.0:
        raise ValueError(f"M must be > 1, got {M}")
    orders = spt_orders(spec, M, beta)
    provenance = {"recipe": "spt", "epsilon": eps, "beta": beta, "delta": delta, "M_source": M_source}
    plan = ApproximationPlan(spec, M, orders, provenance)
    if point_budget is not None and cost_budget is not None:
        plan.check_budget(point_budget, cost_budget)
    return plan


def _encode(indices: np.ndarray, radix: np.ndarray) -> np.ndarray:
    code = np.zeros(indices.shape[0], dtype=np.int64)
    for j in range(indices.shape[1]):
        code = code * radix[j] + indices[:, j]
    return code


def exact_l2_error(output: SpectralFunction, truth: SpectralFunction, index_set: IndexSet) -> float:
    """``||f - A f||_{L2}`` by Parseval.

    ``sqrt(sum_{h in A} (f_hat(h) - out(h))^2 + sum_{h not in A} f_hat(h)^2)``.
    ``truth`` must carry every non-negligible coefficient of ``f``.
    """
    s = index_set.spec.s
    if output.s != s or truth.s != s:
        raise DimensionMismatchError(f"dimensions {output.s}, {truth.s} for s={s}")
    A = index_set.array
    stacked = [a for a in (A, truth.indices, output.indices) if a.size]
    radix = np.max(np.vstack(stacked), axis=0).astype(np.int64) + 1
    if float(np.prod(radix.astype(float))) > 2.0**62:
        raise OverflowError("multi-index range too large to encode")
    code_A = _encode(A, radix)
    code_out = _encode(output.indices, radix)
    code_truth = _encode(truth.indices, radix)
    if not np.all(np.isin(code_out, code_A)):
        raise ValueError("output has coefficients outside the index set")
    out_on_A = np.zeros(len(A))
    out_on_A[np.searchsorted(code_A, code_out)] = output.values
    truth_on_A = np.zeros(len(A))
    in_A = np.isin(code_truth, code_A)
    truth_on_A[np.searchsorted(code_A, code_truth[in_A])] = truth.values[in_A]
    inside = math.fsum((truth_on_A - out_on_A) ** 2)
    outside = math.fsum(truth.values[~in_A] ** 2)
    return math.sqrt(inside + outside)
