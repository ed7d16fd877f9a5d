"""Hermite-series representations, Parseval norms and test functions.

A :class:`SpectralFunction` stores a finite set of Hermite coefficients
``f_hat(k) = int f H_k phi``. The test functions used by the experiments
know their coefficients in closed form and evaluate pointwise, so the
approximation algorithm (which only sees point values) can be checked
against exact truth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import BudgetExceededError, ConfigError, DimensionMismatchError, SpaceOverflowError
from .hermite import eval_all
from .weights import (
    MultiIndex,
    WeightSpec,
    cardinality_bound,
    coordinate_caps,
    enumerate_index_set,
    exponents,
)

_LOG_MAX = math.log(np.finfo(float).max)


def _lexsorted(indices: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort(indices.T[::-1])
    return indices[order], values[order]


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Finite Hermite series ``sum_k coeffs[k] H_k`` on R^s.

    Indices are kept unique and in lexicographic order; absent indices have
    coefficient zero.
    """

    s: int
    indices: np.ndarray  # (N, s) int64
    values: np.ndarray  # (N,)

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.s)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values differ in length")
        if idx.size and idx.min() < 0:
            raise ValueError("negative multi-index entry")
        idx, val = _lexsorted(idx, val)
        if idx.shape[0] > 1 and np.any(np.all(idx[1:] == idx[:-1], axis=1)):
            raise ValueError("duplicate multi-index in spectral function")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, s: int, coeffs: Mapping[Sequence[int], float]) -> "SpectralFunction":
        for k in coeffs:
            if len(k) != s:
                raise DimensionMismatchError(f"multi-index {tuple(k)} has length != {s}")
        idx = np.array([tuple(k) for k in coeffs], dtype=np.int64).reshape(-1, s)
        return cls(s, idx, np.array(list(coeffs.values()), dtype=float))

    @cached_property
    def coeffs(self) -> dict[MultiIndex, float]:
        return {tuple(int(v) for v in k): float(c) for k, c in zip(self.indices, self.values)}

    def __len__(self) -> int:
        return self.values.shape[0]

    def items(self) -> Iterator[tuple[MultiIndex, float]]:
        return iter(self.coeffs.items())

    def get(self, k: Sequence[int], default: float = 0.0) -> float:
        return self.coeffs.get(tuple(k), default)

    def scaled(self, c: float) -> "SpectralFunction":
        return SpectralFunction(self.s, self.indices, c * self.values)

    @property
    def max_degrees(self) -> tuple[int, ...]:
        if len(self) == 0:
            return (0,) * self.s
        return tuple(int(v) for v in self.indices.max(axis=0))

    def __call__(self, X, chunk: int = 4096) -> np.ndarray:
        """Evaluate the series at the rows of an ``(N, s)`` array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.s:
            raise DimensionMismatchError(f"points of dimension {X.shape[1]} for s={self.s}")
        out = np.zeros(X.shape[0])
        if len(self) == 0:
            return out
        degs = self.max_degrees
        for start in range(0, X.shape[0], chunk):
            P = X[start:start + chunk]
            prod = np.ones((P.shape[0], len(self)))
            for j in range(self.s):
                prod *= eval_all(P[:, j], degs[j])[:, self.indices[:, j]]
            out[start:start + chunk] = prod @ self.values
        return out

    def to_csv(self) -> str:
        """CSV rows ``k_1,...,k_s,coefficient`` (17 significant digits)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"k{j + 1}" for j in range(self.s)] + ["coefficient"])
        for k, c in zip(self.indices, self.values):
            w.writerow([int(v) for v in k] + [f"{c:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectralFunction":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        s = len(header) - 1
        idx = np.array([[int(v) for v in r[:s]] for r in body], dtype=np.int64).reshape(-1, s)
        return cls(s, idx, np.array([float(r[s]) for r in body]))


def l2_norm(f: SpectralFunction) -> float:
    """``||f||_{L2(phi)} = sqrt(sum_k f_hat(k)^2)`` by Parseval."""
    return math.sqrt(math.fsum(f.values**2))


def space_norm(spec: WeightSpec, f: SpectralFunction) -> float:
    """Hermite-space norm ``sqrt(sum_k f_hat(k)^2 / omega_k)``.

    Each term is formed as ``exp(log f_hat^2 + exponent * log(1/omega))``;
    terms that would overflow raise :class:`SpaceOverflowError`.
    """
    if f.s != spec.s:
        raise DimensionMismatchError(f"series of dimension {f.s} for s={spec.s}")
    nz = f.values != 0.0
    if not nz.any():
        return 0.0
    logs = 2.0 * np.log(np.abs(f.values[nz])) + exponents(spec, f.indices[nz]) * spec.log_inv_omega
    if logs.max() > _LOG_MAX - math.log(len(logs)) - 1.0:
        raise SpaceOverflowError("f is numerically outside the space at this truncation")
    return math.sqrt(math.fsum(np.exp(logs)))


def _box(caps: Sequence[int]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(c + 1) for c in caps], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def coefficients_exp_linear(lam: Sequence[float], caps: Sequence[int]) -> SpectralFunction:
    """Coefficients of ``exp(lam . x)``: ``e^{|lam|^2/2} prod_j lam_j^{k_j} / sqrt(k_j!)``, ``k <= caps``."""
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if len(caps) != lam.size:
        raise DimensionMismatchError(f"{len(caps)} caps for lambda of length {lam.size}")
    if min(caps) < 0:
        raise ValueError("caps must be >= 0")
    idx = _box(caps)
    vals = np.full(idx.shape[0], math.exp(0.5 * float(lam @ lam)))
    for j, lj in enumerate(lam):
        k = np.arange(caps[j] + 1)
        one_d = np.where(k == 0, 1.0, np.power(lj, k) / np.exp(0.5 * gammaln(k + 1.0)))
        vals = vals * one_d[idx[:, j]]
    keep = vals != 0.0
    return SpectralFunction(lam.size, idx[keep], vals[keep])


def exp_linear_caps(lam: Sequence[float], tol: float = 1e-12) -> tuple[int, ...]:
    """Per-coordinate caps dropping at most ``tol * ||f||_{L2}`` of ``exp(lam . x)``.

    ``f_hat^2 / ||f||^2`` factorizes into Poisson(lam_j^2) masses, so the
    dropped squared mass is bounded by the sum of the per-coordinate
    Poisson tails, each kept below ``tol^2 / s``.
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    target = tol**2 / lam.size
    caps = []
    for lj in lam:
        mu = lj * lj
        if mu == 0.0:
            caps.append(0)
            continue
        c = int(mu)
        while poisson.sf(c, mu) > target:
            c += 1
        caps.append(c)
    return tuple(caps)


def _phi_s(x: np.ndarray) -> float:
    return float(np.exp(-0.5 * x @ x) / (2.0 * math.pi) ** (x.size / 2.0))


def _log_root_weight_sum(spec: WeightSpec, theta: float) -> float:
    """``log prod_j sum_l omega^{theta a_j l^{b_j}}``."""
    L = spec.log_inv_omega
    total = 0.0
    for a, b in zip(spec.a, spec.b):
        ell = np.arange(0, 64, dtype=float)
        acc = 0.0
        while True:
            terms = np.exp(-theta * a * L * np.power(ell, b))
            acc += math.fsum(terms)
            if terms[-1] < 1e-18 * acc:
                break
            ell = ell + ell.size
        total += math.log(acc)
    return total


def kernel_eval(
    spec: WeightSpec,
    x: Sequence[float],
    y: Sequence[float],
    tail_tol: float = 1e-12,
    budget: int = 10**6,
) -> tuple[float, float]:
    """Truncated reproducing kernel ``sum_{k in A(s, M)} omega_k H_k(x) H_k(y)``.

    Returns ``(value, tail_bound)``. ``M`` is chosen so that the Cramér tail
    estimate ``(phi_s(x) phi_s(y))^{-1/2} sum_{k not in A} omega_k`` is at
    most ``tail_tol``. The omitted weight sum is bounded through
    ``omega_k < 1/M`` outside A, which gives
    ``sum_{k not in A} omega_k <= M^{-1/2} sum_k omega_k^{1/2}``.
    """
    if not tail_tol > 0.0:
        raise ValueError("tail_tol must be > 0")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != spec.s or y.size != spec.s:
        raise DimensionMismatchError(f"points of dimension {x.size}, {y.size} for s={spec.s}")
    log_c = 0.5 * spec.s * math.log(2.0 * math.pi) + 0.25 * float(x @ x + y @ y)
    log_P = _log_root_weight_sum(spec, 0.5)
    log_M = max(2.0 * (log_c + log_P - math.log(tail_tol)), 1e-9)
    M = math.exp(log_M)
    if not math.isfinite(M) or cardinality_bound(spec, M) > budget:
        raise BudgetExceededError(
            "kernel truncation needs too many terms", M=M, bound=cardinality_bound(spec, M), budget=budget
        )
    A = enumerate_index_set(spec, M)
    degs = A.max_degrees
    prod = np.exp(-exponents(spec, A.array) * spec.log_inv_omega)
    for j in range(spec.s):
        hx = eval_all(x[j], degs[j])[A.array[:, j]]
        hy = eval_all(y[j], degs[j])[A.array[:, j]]
        prod = prod * (hx * hy)
    value = float(np.sum(prod))
    tail = math.exp(log_c + log_P - 0.5 * log_M)
    return value, tail


# ---------------------------------------------------------------------------
# test functions


class TestFunction:
    """A pointwise-evaluable function with exactly known Hermite coefficients.

    Subclasses implement ``__call__`` on ``(N, s)`` arrays, ``truth`` (the
    coefficient map, truncated so the dropped L2 mass is negligible),
    ``integral`` and ``space_norm``.
    """

    __test__ = False  # not a pytest class
    s: int
    scale: float

    def __call__(self, X) -> np.ndarray:
        raise NotImplementedError

    def truth(self, tol: float = 1e-13) -> SpectralFunction:
        raise NotImplementedError

    def integral(self) -> float:
        raise NotImplementedError

    def space_norm(self, spec: WeightSpec) -> float:
        return space_norm(spec, self.truth())

    def with_scale(self, scale: float) -> "TestFunction":
        return replace(self, scale=scale)

    def unit(self, spec: WeightSpec) -> "TestFunction":
        """This function rescaled to unit norm in the space of ``spec``."""
        return self.with_scale(self.scale / self.space_norm(spec))

    def describe(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class ExpLinear(TestFunction):
    """``scale * exp(lam . x)``."""

    lam: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", tuple(float(v) for v in np.atleast_1d(self.lam)))

    @property
    def s(self) -> int:
        return len(self.lam)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.scale * np.exp(X @ np.asarray(self.lam))

    def truth(self, tol: float = 1e-13) -> SpectralFunction:
        return coefficients_exp_linear(self.lam, exp_linear_caps(self.lam, tol)).scaled(self.scale)

    def integral(self) -> float:
        lam = np.asarray(self.lam)
        return self.scale * math.exp(0.5 * float(lam @ lam))

    def space_norm(self, spec: WeightSpec) -> float:
        if spec.s != self.s:
            raise DimensionMismatchError(f"lambda of length {self.s} for s={spec.s}")
        if all(b == 1.0 for b in spec.b):
            # sum_k e^{|lam|^2} prod_j (lam_j^2 / omega^{a_j})^{k_j} / k_j!
            log_sq = sum(l * l * (1.0 + spec.omega ** (-a)) for l, a in zip(self.lam, spec.a))
            return abs(self.scale) * math.exp(0.5 * log_sq)
        if all(l == 0.0 for l in self.lam):
            return abs(self.scale)
        raise SpaceOverflowError("exp(lam . x) with lam != 0 is not in a space with some b_j > 1")

    def describe(self) -> dict[str, Any]:
        return {"kind": "exp_linear", "lambda": list(self.lam), "scale": self.scale}


@dataclass(frozen=True, eq=False)
class FiniteSeries(TestFunction):
    """``scale * sum_k c_k H_k``, a polynomial given by its Hermite coefficients."""

    series: SpectralFunction
    scale: float = 1.0

    @property
    def s(self) -> int:
        return self.series.s

    def __call__(self, X) -> np.ndarray:
        return self.scale * self.series(X)

    def truth(self, tol: float = 1e-13) -> SpectralFunction:
        return self.series.scaled(self.scale)

    def integral(self) -> float:
        return self.scale * self.series.get((0,) * self.s)

    def describe(self) -> dict[str, Any]:
        return {
            "kind": "finite_series",
            "coeffs": [list(map(int, k)) + [float(c)] for k, c in zip(self.series.indices, self.series.values)],
            "scale": self.scale,
        }


def _mehler(rho: float, x: np.ndarray, y: float) -> np.ndarray:
    # sum_k rho^k H_k(x) H_k(y) for the normalized probabilists' family
    q = 1.0 - rho * rho
    return np.exp((2.0 * rho * x * y - rho * rho * (x * x + y * y)) / (2.0 * q)) / math.sqrt(q)


@dataclass(frozen=True, eq=False)
class KernelSection(TestFunction):
    """``scale * K(., y)`` for the reproducing kernel of ``spec``.

    Its coefficients ``omega_k H_k(y)`` decay exactly like the weights, which
    makes it the natural worst-case-like probe. Coordinates with ``b_j = 1``
    are summed in closed form (Mehler's formula); others are truncated
    where ``omega^{a_j k^{b_j}}`` drops below ``1e-34``, and the function is
    defined as that truncated sum.
    """

    spec: WeightSpec
    y: tuple[float, ...]
    scale: float = 1.0
    cutoff: float = 1e-34

    def __post_init__(self) -> None:
        object.__setattr__(self, "y", tuple(float(v) for v in np.atleast_1d(self.y)))
        if len(self.y) != self.spec.s:
            raise DimensionMismatchError(f"y of length {len(self.y)} for s={self.spec.s}")

    @property
    def s(self) -> int:
        return self.spec.s

    @cached_property
    def _caps(self) -> tuple[int, ...]:
        return coordinate_caps(self.spec, 1.0 / self.cutoff)

    def _factor(self, j: int, xj: np.ndarray) -> np.ndarray:
        a, b, yj = self.spec.a[j], self.spec.b[j], self.y[j]
        if b == 1.0:
            return _mehler(self.spec.omega**a, xj, yj)
        cap = self._caps[j]
        k = np.arange(cap + 1, dtype=float)
        w = np.exp(-a * np.power(k, b) * self.spec.log_inv_omega) * eval_all(yj, cap)
        return eval_all(xj, cap) @ w

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], self.scale)
        for j in range(self.s):
            out = out * self._factor(j, X[:, j])
        return out

    def kernel_diagonal(self) -> float:
        """``K(y, y)``, the squared space norm of the unscaled section."""
        return float(np.prod([self._factor(j, np.array([self.y[j]]))[0] for j in range(self.s)]))

    def truth(self, tol: float = 1e-13) -> SpectralFunction:
        # dropped mass <= sum_{omega_k < 1/M'} omega_k^2 H_k(y)^2 <= K(y,y)/(phi(y) M')
        y = np.asarray(self.y)
        log_M = max(1e-9, math.log(self.kernel_diagonal() / (_phi_s(y) * tol**2)))
        A = enumerate_index_set(self.spec, math.exp(log_M))
        caps = self._caps
        keep = np.ones(len(A), dtype=bool)
        for j, b in enumerate(self.spec.b):
            if b != 1.0:
                keep &= A.array[:, j] <= caps[j]
        idx = A.array[keep]
        degs = idx.max(axis=0)
        vals = self.scale * np.exp(-exponents(self.spec, idx) * self.spec.log_inv_omega)
        for j in range(self.s):
            vals = vals * eval_all(self.y[j], int(degs[j]))[idx[:, j]]
        return SpectralFunction(self.s, idx, vals)

    def integral(self) -> float:
        return self.scale

    def space_norm(self, spec: WeightSpec) -> float:
        if spec == self.spec:
            return abs(self.scale) * math.sqrt(self.kernel_diagonal())
        return space_norm(spec, self.truth())

    def describe(self) -> dict[str, Any]:
        return {"kind": "kernel_section", "y": list(self.y), "scale": self.scale}


def test_function_from_json(desc: Mapping[str, Any], spec: WeightSpec) -> TestFunction:
    """Build a test function from ``{"kind": ..., ...}``.

    Kinds: ``exp_linear`` (``lambda``: number or list), ``kernel_section``
    (``y``: number or list), ``finite_series`` / ``polynomial`` (``coeffs``:
    rows ``[k_1, ..., k_s, c]``). ``"normalize": true`` rescales to unit
    space norm; ``"scale"`` multiplies.
    """
    kind = desc.get("kind")
    s = spec.s

    def vec(value: Any, name: str) -> tuple[float, ...]:
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            arr = np.full(s, float(arr[0]))
        if arr.size != s:
            raise ConfigError(f"function.{name}: expected {s} values, got {arr.size}")
        return tuple(arr.tolist())

    try:
        if kind == "exp_linear":
            f: TestFunction = ExpLinear(vec(desc.get("lambda", 1.0), "lambda"))
        elif kind == "kernel_section":
            f = KernelSection(spec, vec(desc.get("y", 0.5), "y"))
        elif kind in ("finite_series", "polynomial"):
            rows = desc["coeffs"]
            coeffs = {}
            for row in rows:
                if len(row) != s + 1:
                    raise ConfigError(f"function.coeffs: row {row} should have {s + 1} entries")
                coeffs[tuple(int(v) for v in row[:s])] = float(row[s])
            f = FiniteSeries(SpectralFunction.from_dict(s, coeffs))
        else:
            raise ConfigError(f"function: unknown kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"function: missing field {exc.args[0]!r}") from None
    if desc.get("normalize", False):
        f = f.unit(spec)
    if "scale" in desc:
        f = f.with_scale(f.scale * float(desc["scale"]))
    return f
