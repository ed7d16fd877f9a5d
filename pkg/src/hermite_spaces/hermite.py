r"""Normalized probabilists' Hermite polynomials.

The polynomials :math:`H_k = He_k / \sqrt{k!}` are orthonormal in
:math:`L_2(\mathbb{R}, \varphi)` and obey

.. math:: \sqrt{k+1}\, H_{k+1}(x) = x H_k(x) - \sqrt{k}\, H_{k-1}(x),

with :math:`H_0 = 1`, :math:`H_1 = x`. Running the recurrence on the
normalized family directly keeps both :math:`He_k` (which overflows) and
:math:`1/\sqrt{k!}` (which underflows) out of the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatchError


def eval_all(x, max_degree: int) -> np.ndarray:
    """Evaluate ``H_0, ..., H_max_degree`` at ``x``.

    Parameters
    ----------
    x : float or ndarray
        Evaluation point(s).
    max_degree : int
        Highest degree, ``>= 0``.

    Returns
    -------
    ndarray
        Array of shape ``np.shape(x) + (max_degree + 1,)``; the last axis
        runs over the degree.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = x
    for k in range(1, max_degree):
        out[..., k + 1] = (x * out[..., k] - math.sqrt(k) * out[..., k - 1]) / math.sqrt(k + 1)
    return out


def eval_multi(x: Sequence[float], k: Sequence[int]) -> float:
    """``H_k(x) = prod_j H_{k_j}(x_j)`` for a single point."""
    if len(x) != len(k):
        raise DimensionMismatchError(f"point of length {len(x)} with multi-index of length {len(k)}")
    value = 1.0
    for xj, kj in zip(x, k):
        value *= eval_all(xj, kj)[kj]
    return float(value)


def recurrence_residual(x, table: np.ndarray) -> np.ndarray:
    """``|sqrt(k+1) H_{k+1} - x H_k + sqrt(k) H_{k-1}|`` for ``k = 1..deg-1``."""
    x = np.asarray(x, dtype=float)[..., None]
    k = np.arange(1, table.shape[-1] - 1)
    return np.abs(
        np.sqrt(k + 1) * table[..., 2:] - x * table[..., 1:-1] + np.sqrt(k) * table[..., :-2]
    )


def cramer_bound_margin(x: float, k: int) -> float:
    """``1/sqrt(phi(x)) - |H_k(x)|``; Cramér's inequality says this is >= 0."""
    if k < 0:
        raise ValueError("k must be >= 0")
    bound = (2.0 * math.pi) ** 0.25 * math.exp(x * x / 4.0)
    return bound - abs(float(eval_all(x, k)[k]))


@dataclass(frozen=True)
class LinearizationExpansion:
    """``H_h H_v = sum_r coefficients[r] * H_{degrees[r]}``."""

    h: int
    v: int
    degrees: tuple[int, ...]
    coefficients: tuple[float, ...]

    @property
    def terms(self) -> list[tuple[int, float]]:
        return list(zip(self.degrees, self.coefficients))

    def __call__(self, x) -> np.ndarray:
        table = eval_all(x, self.h + self.v)
        return table[..., list(self.degrees)] @ np.asarray(self.coefficients)


def linearize_product(h: int, v: int) -> LinearizationExpansion:
    r"""Expand ``H_h H_v`` in the Hermite basis.

    With ``t = min(h, v)``, ``T = max(h, v)`` the coefficient of
    :math:`H_{|h-v|+2r}` is
    :math:`\sqrt{t!/T!}\binom{T}{t-r}\sqrt{(|h-v|+2r)!}/r!`, evaluated
    through log-gamma so that large factorials never materialize.
    """
    if h < 0 or v < 0:
        raise ValueError("degrees must be >= 0")
    t, T = min(h, v), max(h, v)
    degrees, coefs = [], []
    for r in range(t + 1):
        d = T - t + 2 * r
        log_c = (
            0.5 * (gammaln(t + 1) - gammaln(T + 1))
            + gammaln(T + 1) - gammaln(t - r + 1) - gammaln(T - t + r + 1)
            + 0.5 * gammaln(d + 1)
            - gammaln(r + 1)
        )
        degrees.append(d)
        coefs.append(float(np.exp(log_c)))
    return LinearizationExpansion(h, v, tuple(degrees), tuple(coefs))
