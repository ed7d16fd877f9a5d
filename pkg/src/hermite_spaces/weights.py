"""Weight sequences, exponential weights and the index sets A(s, M).

A Hermite space is fixed by two sequences ``a``, ``b`` and a parameter
``omega`` in (0, 1). The weight attached to a multi-index ``k`` is

    omega_k = omega ** (sum_j a_j * k_j ** b_j).

Every comparison between weights is made on the exponent
``sum_j a_j * k_j ** b_j`` rather than on ``omega_k`` itself, because the
weights underflow double precision long before the index sets of interest
stop growing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatchError

MultiIndex = tuple[int, ...]

#: exponent * log(1/omega) above which omega_k is reported as 0.0
UNDERFLOW_GUARD = 700.0


def _generate(desc: Any, s: int, name: str) -> tuple[float, ...]:
    """Expand a sequence descriptor into ``s`` concrete values."""
    if isinstance(desc, (int, float)):
        return (float(desc),) * s
    if isinstance(desc, (list, tuple)):
        desc = {"kind": "explicit", "values": list(desc)}
    if not isinstance(desc, Mapping) or "kind" not in desc:
        raise ConfigError(f"{name}: expected a number, a list or an object with 'kind'")
    kind = desc["kind"]
    try:
        if kind == "explicit":
            values = [float(v) for v in desc["values"]]
            if len(values) < s:
                raise ConfigError(f"{name}: {len(values)} explicit values given, need {s}")
            return tuple(values[:s])
        if kind == "constant":
            return (float(desc["value"]),) * s
        if kind == "geometric":
            # x_j = first * ratio**(j-1)
            first = float(desc.get("first", 1.0))
            ratio = float(desc["ratio"])
            return tuple(first * ratio**j for j in range(s))
        if kind == "power":
            # x_j = scale * j**exponent
            scale = float(desc.get("scale", 1.0))
            exponent = float(desc["exponent"])
            return tuple(scale * (j + 1) ** exponent for j in range(s))
    except KeyError as exc:
        raise ConfigError(f"{name}: missing field {exc.args[0]!r} for kind {kind!r}") from None
    raise ConfigError(f"{name}: unknown sequence kind {kind!r}")


@dataclass(frozen=True)
class WeightSpec:
    """Parameters ``(a, b, omega)`` of the Hermite space over R^s.

    Parameters
    ----------
    a : sequence of float
        Non-decreasing weights with ``a[0] >= 1``.
    b : sequence of float
        Exponents, each ``>= 1``.
    omega : float
        Base of the exponential weights, in (0, 1).
    """

    a: tuple[float, ...]
    b: tuple[float, ...]
    omega: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        object.__setattr__(self, "omega", float(self.omega))
        if len(self.a) == 0:
            raise ValueError("dimension must be at least 1")
        if len(self.a) != len(self.b):
            raise DimensionMismatchError(f"len(a)={len(self.a)} but len(b)={len(self.b)}")
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if self.a[0] < 1.0:
            raise ValueError(f"a[0] must be >= 1, got {self.a[0]}")
        if any(y < x for x, y in zip(self.a, self.a[1:])):
            raise ValueError("a must be non-decreasing")
        if any(not math.isfinite(x) for x in self.a):
            raise ValueError("a must be finite")
        if any(not (x >= 1.0 and math.isfinite(x)) for x in self.b):
            raise ValueError("every b[j] must be a finite number >= 1")

    @property
    def s(self) -> int:
        return len(self.a)

    @property
    def log_inv_omega(self) -> float:
        return -math.log(self.omega)

    def truncated(self, s: int) -> "WeightSpec":
        """The same space restricted to the first ``s`` coordinates."""
        if not 1 <= s <= self.s:
            raise ValueError(f"prefix {s} outside 1..{self.s}")
        return WeightSpec(self.a[:s], self.b[:s], self.omega)

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], s: int | None = None) -> "WeightSpec":
        """Build a spec from its JSON form.

        ``a`` and ``b`` are either explicit lists or generator objects
        ``{"kind": "geometric", "first": c, "ratio": r}`` (``c r^(j-1)``),
        ``{"kind": "power", "scale": c, "exponent": p}`` (``c j^p``) or
        ``{"kind": "constant", "value": c}``. ``s`` overrides ``obj["s"]``.
        """
        if s is None:
            if "s" in obj:
                s = int(obj["s"])
            elif isinstance(obj.get("a"), (list, tuple)):
                s = len(obj["a"])
            else:
                raise ConfigError("space: dimension 's' is required")
        if s < 1:
            raise ConfigError(f"space: dimension must be >= 1, got {s}")
        for key in ("a", "b", "omega"):
            if key not in obj:
                raise ConfigError(f"space: missing field {key!r}")
        try:
            return cls(_generate(obj["a"], s, "a"), _generate(obj["b"], s, "b"), float(obj["omega"]))
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"space: {exc}") from None

    def to_json(self) -> dict[str, Any]:
        return {
            "s": self.s,
            "a": {"kind": "explicit", "values": list(self.a)},
            "b": {"kind": "explicit", "values": list(self.b)},
            "omega": self.omega,
        }


def _check_index(spec: WeightSpec, k: Sequence[int]) -> None:
    if len(k) != spec.s:
        raise DimensionMismatchError(f"multi-index of length {len(k)} used with s={spec.s}")


def exponent(spec: WeightSpec, k: Sequence[int]) -> float:
    """Return ``sum_j a_j k_j^{b_j}``, so that ``omega_k = omega**exponent``."""
    _check_index(spec, k)
    e = 0.0
    for a_j, b_j, k_j in zip(spec.a, spec.b, k):
        if k_j < 0:
            raise ValueError(f"negative multi-index entry {k_j}")
        if k_j:
            e = e + a_j * math.pow(k_j, b_j)
    return e


def exponents(spec: WeightSpec, ks: np.ndarray) -> np.ndarray:
    """Vectorised :func:`exponent` for an ``(N, s)`` integer array.

    Uses the same left-to-right accumulation as the scalar version, so both
    agree bit for bit.
    """
    ks = np.asarray(ks)
    if ks.ndim != 2 or ks.shape[1] != spec.s:
        raise DimensionMismatchError(f"expected shape (N, {spec.s}), got {ks.shape}")
    e = np.zeros(ks.shape[0])
    for j in range(spec.s):
        col = ks[:, j].astype(float)
        e = e + np.where(col > 0, spec.a[j] * np.power(col, spec.b[j]), 0.0)
    return e


def weight(spec: WeightSpec, k: Sequence[int]) -> float:
    """``omega_k``, or 0.0 once ``exponent * log(1/omega)`` passes the guard."""
    x = exponent(spec, k) * spec.log_inv_omega
    return math.exp(-x) if x < UNDERFLOW_GUARD else 0.0


def threshold(spec: WeightSpec, M: float) -> float:
    """Exponent threshold ``log M / log(1/omega)`` defining A(s, M)."""
    return math.log(M) / spec.log_inv_omega


def coordinate_caps(spec: WeightSpec, M: float) -> tuple[int, ...]:
    """Per-coordinate bound ``ceil((log M / (a_j log 1/omega))^{1/b_j}) - 1``."""
    t = threshold(spec, M)
    return tuple(max(0, math.ceil((t / a) ** (1.0 / b)) - 1) for a, b in zip(spec.a, spec.b))


def cardinality_bound(spec: WeightSpec, M: float) -> float:
    """Upper bound ``prod_j (1 + (log M / (a_j log 1/omega))^{1/b_j})`` on |A(s, M)|."""
    t = threshold(spec, M)
    return math.prod(1.0 + (t / a) ** (1.0 / b) for a, b in zip(spec.a, spec.b))


@dataclass(frozen=True, eq=False)
class IndexSet:
    """The set A(s, M) = {h : omega_h^{-1} < M}, in lexicographic order."""

    spec: WeightSpec
    M: float
    array: np.ndarray  # (N, s) int64, lexicographically sorted

    @cached_property
    def members(self) -> tuple[MultiIndex, ...]:
        return tuple(tuple(int(v) for v in row) for row in self.array)

    @cached_property
    def _lookup(self) -> dict[MultiIndex, int]:
        return {h: i for i, h in enumerate(self.members)}

    def __len__(self) -> int:
        return self.array.shape[0]

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.members)

    def __contains__(self, h: object) -> bool:
        return tuple(h) in self._lookup  # type: ignore[arg-type]

    def position(self, h: Sequence[int]) -> int:
        return self._lookup[tuple(h)]

    @property
    def max_degrees(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.array.max(axis=0))


def enumerate_index_set(spec: WeightSpec, M: float) -> IndexSet:
    """Enumerate A(s, M) exactly.

    Coordinates are expanded one at a time; a prefix stops growing as soon as
    its partial exponent reaches the threshold, which is the per-coordinate
    cap of :func:`coordinate_caps` in action. Exponents equal to the
    threshold are excluded.
    """
    if not M > 1.0:
        raise ValueError(f"M must be > 1, got {M}")
    t = threshold(spec, M)
    prefixes = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for j in range(spec.s):
        a_j, b_j = spec.a[j], spec.b[j]
        blocks, sums = [], []
        h = 0
        while True:
            inc = a_j * math.pow(h, b_j) if h else 0.0
            new = partial + inc
            keep = new < t
            if not keep.any():
                break
            col = np.full((int(keep.sum()), 1), h, dtype=np.int64)
            blocks.append(np.hstack([prefixes[keep], col]))
            sums.append(new[keep])
            h += 1
        prefixes = np.vstack(blocks)
        partial = np.concatenate(sums)
    order = np.lexsort(prefixes.T[::-1])
    arr = prefixes[order]
    arr.setflags(write=False)
    return IndexSet(spec, float(M), arr)


def big_B(spec: WeightSpec, s_prefix: int | None = None) -> float:
    """``B(s) = sum_{j <= s} 1/b_j``."""
    if s_prefix is None:
        s_prefix = spec.s
    if not 1 <= s_prefix <= spec.s:
        raise ValueError(f"prefix {s_prefix} outside 1..{spec.s}")
    return math.fsum(1.0 / b for b in spec.b[:s_prefix])


def K_of_omega(omega: float) -> tuple[int, float]:
    """Return ``(k, K)`` with ``k = max(1, ceil(log(omega^{-1/8} - 1) / log omega))``.

    ``K = 3k - 1 + 2 log(1 + omega^k) / log(1/omega)`` is the exponent of the
    aliasing amplification ``M^K`` in the error bound. ``k`` is the smallest
    positive integer with ``log(1 + omega^k) <= log(1/omega) / 8``.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {omega}")
    L = -math.log(omega)
    k = max(1, math.ceil(math.log(omega ** (-1.0 / 8.0) - 1.0) / math.log(omega)))
    if math.log1p(omega**k) > L / 8.0 * (1.0 + 1e-12):
        raise ArithmeticError(f"k={k} violates log(1+omega^k) <= log(1/omega)/8 for omega={omega}")
    K = 3 * k - 1 + 2.0 * math.log1p(omega**k) / L
    return k, K


def D_of(spec: WeightSpec) -> float:
    """``D(s, omega, b) = 8^s prod_j (1 + log(1/omega)^{-1/b_j})^2``."""
    L = spec.log_inv_omega
    return 8.0**spec.s * math.prod((1.0 + L ** (-1.0 / b)) ** 2 for b in spec.b)


def log_D(spec: WeightSpec) -> float:
    """``log D(s, omega, b)``, finite even when D itself overflows."""
    L = spec.log_inv_omega
    return spec.s * math.log(8.0) + 2.0 * math.fsum(math.log1p(L ** (-1.0 / b)) for b in spec.b)
