"""Gauss-Hermite rules for the standard Gaussian measure and their tensor products."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import logsumexp

from .errors import BudgetExceededError, DimensionMismatchError, EvaluationError
from .hermite import eval_all
from .weights import WeightSpec

DEFAULT_POINT_BUDGET = 10**8
CHUNK_POINTS = 2**18
SQRT_8PI = math.sqrt(8.0 * math.pi)
FOURTH_ROOT_8PI = (8.0 * math.pi) ** 0.25

_RESCALE = 1e150


@dataclass(frozen=True, eq=False)
class GaussHermiteRule:
    """n-point rule ``Q_n(f) = sum_i weights[i] f(nodes[i])`` for ``int f phi``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.order


def _scaled_top_pair(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(p, q, log_scale)`` with ``H_{n-1} = p e^log_scale``, ``H_n = q e^log_scale``.

    The recurrence is renormalized whenever the iterates grow past 1e150 so
    that rules with several hundred nodes stay finite out to the extreme
    nodes.
    """
    p = np.ones_like(x)
    q = x.copy()
    log_scale = np.zeros_like(x)
    for k in range(1, n):
        p, q = q, (x * q - math.sqrt(k) * p) / math.sqrt(k + 1)
        big = np.maximum(np.abs(p), np.abs(q))
        over = big > _RESCALE
        if over.any():
            f = np.where(over, big, 1.0)
            p, q = p / f, q / f
            log_scale = log_scale + np.log(f)
    return p, q, log_scale


@lru_cache(maxsize=256)
def make_rule(n: int) -> GaussHermiteRule:
    """Gauss-Hermite rule of order ``n``, exact for polynomials of degree < 2n.

    Nodes start from the eigenvalues of the Jacobi matrix of the normalized
    recurrence and receive two Newton steps on ``H_n``. Weights come from
    ``1 / (n H_{n-1}(x_i)^2)``. Both are then symmetrized about 0, and the
    weights rescaled to sum to one. For very large ``n`` the outermost
    weights underflow to 0.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"rule order must be >= 1, got {n}")
    if n == 1:
        x = np.zeros(1)
    else:
        x = eigh_tridiagonal(np.zeros(n), np.sqrt(np.arange(1.0, n)), eigvals_only=True)
        for _ in range(2):
            p, q, _scale = _scaled_top_pair(x, n)
            x = x - q / (math.sqrt(n) * p)
        x = np.sort(x)
    p, _q, log_scale = _scaled_top_pair(x, n)
    w = np.exp(-math.log(n) - 2.0 * (np.log(np.abs(p)) + log_scale))
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / math.fsum(w)
    x.setflags(write=False)
    w.setflags(write=False)
    return GaussHermiteRule(n, x, w)


def _evaluate(f: Callable, points: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(points), dtype=float)
    if vals.shape != points.shape[:1]:
        vals = vals.reshape(points.shape[:1])
    if not np.all(np.isfinite(vals)):
        bad = points[~np.isfinite(vals)][0]
        raise EvaluationError(f"non-finite function value at node {np.asarray(bad).tolist()}")
    return vals


def apply_1d(rule: GaussHermiteRule, f: Callable) -> float:
    """``Q_n(f)`` for a function accepting an array of nodes."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        vals = np.array([float(f(float(x))) for x in rule.nodes])
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"non-finite function value at node {rule.nodes[~np.isfinite(vals)][0]}")
    return float(np.sum(rule.weights * vals))


@dataclass(frozen=True, eq=False)
class TensorRule:
    """Full tensor product of one-dimensional rules of orders ``m_1..m_s``."""

    orders: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))
        if not self.orders or min(self.orders) < 1:
            raise ValueError(f"tensor orders must all be >= 1, got {self.orders}")

    @property
    def s(self) -> int:
        return len(self.orders)

    @property
    def total_points(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def rules(self) -> tuple[GaussHermiteRule, ...]:
        return tuple(make_rule(m) for m in self.orders)

    def nodes_grid(self) -> np.ndarray:
        """All nodes as an ``(n, s)`` array in C order (last coordinate fastest)."""
        grids = np.meshgrid(*[r.nodes for r in self.rules], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def weights_grid(self) -> np.ndarray:
        w = np.ones(1)
        for r in self.rules:
            w = np.multiply.outer(w, r.weights).ravel()
        return w


def hermite_moments(
    rule: TensorRule,
    f: Callable,
    max_degrees: Sequence[int],
    budget: int = DEFAULT_POINT_BUDGET,
    chunk: int = CHUNK_POINTS,
) -> np.ndarray:
    """``Q_{n,s}(f H_h)`` for every ``h`` in the box ``0 <= h_j <= max_degrees[j]``.

    ``f`` maps an ``(N, s)`` array of points to ``N`` values and is called
    once per tensor node, block by block. Each block is contracted against
    the per-dimension tables ``alpha_i H_d(x_i)`` as soon as it is
    evaluated, so no node grid larger than ``chunk`` points is held in
    memory. Blocks are visited and summed in a fixed order.
    """
    s = rule.s
    if len(max_degrees) != s:
        raise DimensionMismatchError(f"{len(max_degrees)} degree caps for an s={s} rule")
    if rule.total_points > budget:
        raise BudgetExceededError(
            f"tensor rule has {rule.total_points} points, budget is {budget}",
            orders=rule.orders, n=rule.total_points, budget=budget,
        )
    nodes = [r.nodes for r in rule.rules]
    tables = [r.weights[:, None] * eval_all(r.nodes, int(d)) for r, d in zip(rule.rules, max_degrees)]
    trailing = [math.prod(rule.orders[k + 1:]) for k in range(s)]

    def block_points(prefix: tuple[float, ...], k: int, idx: slice) -> np.ndarray:
        axes = [np.array([v]) for v in prefix] + [nodes[k][idx]] + nodes[k + 1:]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def accumulate(prefix: tuple[float, ...], k: int) -> np.ndarray:
        m_k = rule.orders[k]
        if trailing[k] <= chunk:
            step = max(1, chunk // trailing[k])
            total = None
            for start in range(0, m_k, step):
                idx = slice(start, min(start + step, m_k))
                vals = _evaluate(f, block_points(prefix, k, idx))
                T = vals.reshape((idx.stop - idx.start,) + rule.orders[k + 1:])
                for j in range(k + 1, s):
                    T = np.tensordot(T, tables[j], axes=([1], [0]))
                part = np.tensordot(tables[k][idx], T, axes=([0], [0]))
                total = part if total is None else total + part
            return total
        total = None
        for i in range(m_k):
            part = np.multiply.outer(tables[k][i], accumulate(prefix + (float(nodes[k][i]),), k + 1))
            total = part if total is None else total + part
        return total

    return accumulate((), 0)


def apply_tensor(rule: TensorRule, f: Callable, budget: int = DEFAULT_POINT_BUDGET) -> float:
    """``Q_{n,s}(f)`` for ``f`` mapping ``(N, s)`` points to ``N`` values."""
    return float(hermite_moments(rule, f, (0,) * rule.s, budget=budget).reshape(-1)[0])


@dataclass(frozen=True)
class GPerpSpec:
    """The set G-perp of indices the tensor rule of ``orders`` does not annihilate."""

    orders: tuple[int, ...]

    def __contains__(self, v: object) -> bool:
        v = tuple(v)  # type: ignore[arg-type]
        if len(v) != len(self.orders):
            raise DimensionMismatchError(f"index of length {len(v)} for s={len(self.orders)}")
        return all(vj == 0 or (vj % 2 == 0 and vj >= 2 * m) for vj, m in zip(v, self.orders))

    @staticmethod
    def star(v: Sequence[int]) -> int:
        """``|v|_*``: the number of non-zero coordinates."""
        return sum(1 for vj in v if vj != 0)


def grile_error_bound(g, gperp: GPerpSpec) -> float:
    """``sum_{v in G-perp, v != 0} |g_hat(v)| (8 pi)^{|v|_* / 4}`` for a finite series ``g``."""
    total = []
    for v, c in g.coeffs.items():
        if any(v) and v in gperp:
            total.append(abs(c) * FOURTH_ROOT_8PI ** GPerpSpec.star(v))
    return math.fsum(total)


def _log_inner_tail(a: float, b: float, m: int, L: float, rtol: float = 1e-18) -> float:
    """``log sum_{l >= m} omega^{a l^b / 2}`` with ``L = log(1/omega)``."""
    base = 0.5 * a * math.pow(m, b) * L
    total, start, block = 0.0, m, 256
    while True:
        ell = np.arange(start, start + block, dtype=float)
        terms = np.exp(-(0.5 * a * L * np.power(ell, b) - base))
        total += math.fsum(terms)
        if terms[-1] < rtol * total:
            break
        start += block
        block = min(2 * block, 1 << 16)
    return math.log(total) - base


def log_tail_F(spec: WeightSpec, orders: Sequence[int]) -> float:
    """``log F_n``; finite even when ``F_n`` itself underflows."""
    if len(orders) != spec.s:
        raise DimensionMismatchError(f"{len(orders)} orders for s={spec.s}")
    L = spec.log_inv_omega
    log_g = np.array([
        math.log(SQRT_8PI) + _log_inner_tail(a, b, int(m), L)
        for a, b, m in zip(spec.a, spec.b, orders)
    ])
    if log_g.max() < -600.0:
        return float(logsumexp(log_g))
    S = math.fsum(np.log1p(np.exp(log_g)))
    return math.log(math.expm1(S))


def tail_F(spec: WeightSpec, orders: Sequence[int]) -> float:
    """``F_n = -1 + prod_j (1 + sqrt(8 pi) sum_{l >= m_j} omega^{a_j l^{b_j} / 2})``.

    Equals the sum over ``v`` in G-perp minus the origin of
    ``sqrt(8 pi)^{|v|_*} omega^{sum_j a_j (v_j/2)^{b_j} / 2}``.
    """
    return math.exp(log_tail_F(spec, orders))
