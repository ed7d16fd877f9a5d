"""Integration against the standard Gaussian measure on R^s.

Two routes are provided: direct tensor Gauss-Hermite integration, and the
reduction of the approximation algorithm to an integration rule. For the
latter the weight attached to node ``x_k`` is ``beta_k = int alpha_k phi``
where ``A f = sum_k f(x_k) alpha_k``. Since every ``alpha_k`` is a
combination of ``H_h`` with ``h`` in A(s, M), and only ``H_0`` has non-zero
mean, ``beta_k`` equals the tensor weight of node ``k``. The reduced rule
is checked numerically rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .approximate import ApproximationPlan
from .errors import DimensionMismatchError
from .hermite import eval_all
from .quadrature import DEFAULT_POINT_BUDGET, TensorRule, _evaluate, apply_tensor, make_rule

#: number of non-zero indices of A(s, M) whose Gaussian mean is re-checked
CHECK_INDICES = 16


@dataclass(frozen=True, eq=False)
class IntegrationRule:
    """``Q(f) = sum_k weights[k] f(nodes[k])`` with nodes an ``(n, s)`` array."""

    nodes: np.ndarray
    weights: np.ndarray
    provenance: str = "tensor"
    derivation: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.shape[0] != weights.size:
            raise DimensionMismatchError(f"{nodes.shape[0]} nodes but {weights.size} weights")
        if self.provenance not in ("tensor", "reduced_from_approximation"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def s(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return self.weights.size

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        vals = _evaluate(f, self.nodes)
        return float(np.dot(self.weights, vals))


def integrate_tensor(rule: TensorRule, f: Callable, budget: int = DEFAULT_POINT_BUDGET) -> float:
    """Tensor Gauss-Hermite approximation of ``INT_s(f)``."""
    return apply_tensor(rule, f, budget=budget)


def tensor_integration_rule(rule: TensorRule) -> IntegrationRule:
    return IntegrationRule(rule.nodes_grid(), rule.weights_grid(), "tensor")


def _independent_means(plan: ApproximationPlan, indices: np.ndarray) -> np.ndarray:
    """``int H_h phi`` for each row ``h``, from rules exact at twice the needed degree."""
    degs = indices.max(axis=0)
    means = np.ones(len(indices))
    for j in range(plan.spec.s):
        rule = make_rule(int(degs[j]) + 1)
        col = rule.weights @ eval_all(rule.nodes, int(degs[j]))
        means = means * col[indices[:, j]]
    return means


def reduce_approximation(plan: ApproximationPlan, point_budget: int = DEFAULT_POINT_BUDGET) -> IntegrationRule:
    """Integration rule induced by the plan's approximation algorithm.

    The derivation log records, for a sample of indices ``h`` in A(s, M),
    the quadrature value of ``int H_h phi`` (``0`` for ``h != 0``) and the
    recomputed ``beta_k = sum_h w_k H_h(x_k) int H_h phi``; the rule's
    weights are the tensor weights, and ``max_beta_deviation`` says how far
    the recomputation lands from them.
    """
    tensor = plan.tensor
    if tensor.total_points > point_budget:
        plan.check_budget(point_budget)
    A = plan.index_set.array
    nonzero = A[np.any(A != 0, axis=1)][:CHECK_INDICES]
    sample = np.vstack([np.zeros((1, plan.spec.s), dtype=A.dtype), nonzero])
    means = _independent_means(plan, sample)

    nodes = tensor.nodes_grid()
    weights = tensor.weights_grid()
    # beta_k through the sampled part of the alpha expansion
    beta = np.zeros_like(weights)
    for h, mu in zip(sample, means):
        Hh = np.ones(len(weights))
        for j in range(plan.spec.s):
            Hh = Hh * eval_all(nodes[:, j], int(h[j]))[:, h[j]]
        beta += weights * Hh * mu
    derivation = {
        "identity": "beta_k = w_k * H_0(x_k) * int H_0 phi",
        "checked_indices": [list(map(int, h)) for h in sample],
        "means": [float(v) for v in means],
        "max_abs_mean_nonzero": float(np.max(np.abs(means[1:]))) if len(means) > 1 else 0.0,
        "max_beta_deviation": float(np.max(np.abs(beta - weights))),
        "index_size": int(len(A)),
        "orders": list(plan.orders),
    }
    return IntegrationRule(nodes, weights, "reduced_from_approximation", derivation)


def integral_reference(f) -> float | None:
    """Exact ``INT_s(f)`` when the test function knows it, else ``None``."""
    try:
        value = f.integral()
    except (AttributeError, NotImplementedError):
        return None
    return float(value) if math.isfinite(value) else None
