"""Experiment harness: sweeps over epsilon, orders or dimension.

A study is described by a JSON-compatible config::

    {
      "space":    {"a": ..., "b": ..., "omega": ...},
      "function": {"kind": "kernel_section", "normalize": true},
      "recipe":   {"kind": "exp" | "spt" | "manual", "beta": .., "delta": .., "M": .., "orders": ..},
      "sweep":    {"kind": "epsilon_ladder" | "order_ladder" | "dimension_ladder", "values": [...]},
      "search":   true
    }

Each sweep point becomes one :class:`StudyRow`. Points that exceed the
budget are kept with their predicted ``n`` and an empty measured error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .approximate import (
    DEFAULT_COST_BUDGET,
    ApproximationPlan,
    a_priori_bound,
    exact_l2_error,
    exp_recipe,
    matched_M,
    run,
    spt_recipe,
)
from .errors import BudgetExceededError, ConfigError
from .quadrature import DEFAULT_POINT_BUDGET
from .spectral import SpectralFunction, TestFunction, test_function_from_json
from .weights import WeightSpec, big_B

COLUMNS = (
    "s", "epsilon", "orders", "n", "index_size", "M", "a_priori_bound",
    "measured_error", "n_search", "ratio", "status", "wall_time",
)
SWEEP_KINDS = ("epsilon_ladder", "order_ladder", "dimension_ladder")
RECIPE_KINDS = ("exp", "spt", "manual")


@dataclass
class StudyRow:
    s: int
    epsilon: float | None
    orders: tuple[int, ...] | None
    n: float
    index_size: int | None
    M: float | None
    a_priori_bound: float | None
    measured_error: float | None = None
    n_search: int | None = None
    ratio: float | None = None
    status: str = "ok"
    wall_time: float = 0.0

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        d["orders"] = None if self.orders is None else list(self.orders)
        return d

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "StudyRow":
        d = dict(d)
        if d.get("orders") is not None:
            d["orders"] = tuple(d["orders"])
        return cls(**d)


@dataclass(frozen=True)
class ExperimentConfig:
    space: Mapping[str, Any]
    sweep_kind: str
    values: tuple[Any, ...]
    recipe: Mapping[str, Any] = field(default_factory=lambda: {"kind": "exp"})
    function: Mapping[str, Any] | None = None
    epsilon: float | None = None
    search: bool = False
    point_budget: int = DEFAULT_POINT_BUDGET
    cost_budget: int = DEFAULT_COST_BUDGET
    threads: int = 1

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], **overrides: Any) -> "ExperimentConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("config: top level must be a JSON object")
        if "space" not in obj:
            raise ConfigError("config: missing field 'space'")
        sweep = obj.get("sweep", {"kind": "epsilon_ladder", "values": []})
        kind = sweep.get("kind")
        if kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep.kind: expected one of {SWEEP_KINDS}, got {kind!r}")
        values = sweep.get("values", [])
        if not isinstance(values, list):
            raise ConfigError("sweep.values: expected a list")
        recipe = obj.get("recipe", {"kind": "exp"})
        if recipe.get("kind") not in RECIPE_KINDS:
            raise ConfigError(f"recipe.kind: expected one of {RECIPE_KINDS}, got {recipe.get('kind')!r}")
        if kind == "order_ladder" and recipe.get("kind") != "manual":
            raise ConfigError("recipe.kind: an order_ladder sweep needs the manual recipe")
        eps = sweep.get("epsilon", recipe.get("epsilon"))
        if kind == "dimension_ladder" and recipe["kind"] != "manual" and eps is None:
            raise ConfigError("sweep.epsilon: a dimension_ladder needs a fixed epsilon")
        cfg = cls(
            space=obj["space"],
            sweep_kind=kind,
            values=tuple(values),
            recipe=recipe,
            function=obj.get("function"),
            epsilon=None if eps is None else float(eps),
            search=bool(obj.get("search", False)),
            point_budget=int(obj.get("budget", DEFAULT_POINT_BUDGET)),
            cost_budget=int(obj.get("cost_budget", DEFAULT_COST_BUDGET)),
            threads=int(obj.get("threads", 1)),
        )
        overrides = {k: v for k, v in overrides.items() if v is not None}
        cfg = cls(**{**cfg.__dict__, **overrides})
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        for i, v in enumerate(self.values):
            where = f"sweep.values[{i}]"
            if self.sweep_kind == "epsilon_ladder" and not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
                raise ConfigError(f"{where}: epsilon must lie in (0, 1), got {v!r}")
            if self.sweep_kind == "dimension_ladder" and not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{where}: dimension must be a positive integer, got {v!r}")
            if self.sweep_kind == "order_ladder":
                ok = isinstance(v, int) or (isinstance(v, list) and all(isinstance(m, int) for m in v))
                if not ok:
                    raise ConfigError(f"{where}: orders must be an integer or a list of integers")
        self.spec_for(self.values[0] if self.sweep_kind == "dimension_ladder" and self.values else None)

    def spec_for(self, s: int | None = None) -> WeightSpec:
        try:
            return WeightSpec.from_json(self.space, s=s)
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"space: {exc}") from None


# ---------------------------------------------------------------------------
# plans


def _plan(cfg: ExperimentConfig, spec: WeightSpec, eps: float | None, orders: Sequence[int] | None) -> ApproximationPlan:
    r = cfg.recipe
    kind = r["kind"]
    if kind == "exp":
        return exp_recipe(spec, eps, point_budget=None, cost_budget=None)
    if kind == "spt":
        return spt_recipe(spec, eps, float(r.get("beta", 0.5)), float(r.get("delta", 1.0)), r.get("M"),
                          point_budget=None, cost_budget=None)
    if orders is None:
        orders = r.get("orders")
        if orders is None:
            raise ConfigError("recipe.orders: the manual recipe needs orders")
    orders = tuple(orders) if isinstance(orders, (list, tuple)) else (int(orders),) * spec.s
    if len(orders) == 1 and spec.s > 1:
        orders = orders * spec.s
    M = r.get("M", "matched")
    if M == "matched":
        M = matched_M(spec, orders)
    elif M is None and eps is not None:
        M = 2.0 / eps**2
    return ApproximationPlan(spec, float(M), orders, {"recipe": "manual"})


class _Measure:
    """Per-dimension cache of the test function and its exact coefficients."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._cache: dict[int, tuple[TestFunction, SpectralFunction]] = {}

    def prepare(self, spec: WeightSpec) -> None:
        if self.cfg.function is not None and spec.s not in self._cache:
            f = test_function_from_json(self.cfg.function, spec)
            self._cache[spec.s] = (f, f.truth())

    def error(self, plan: ApproximationPlan) -> float | None:
        if plan.spec.s not in self._cache:
            return None
        f, truth = self._cache[plan.spec.s]
        out = run(plan, f, self.cfg.point_budget, self.cfg.cost_budget)
        return exact_l2_error(out, truth, plan.index_set)

    def fits(self, plan: ApproximationPlan) -> bool:
        try:
            plan.check_budget(self.cfg.point_budget, self.cfg.cost_budget)
        except BudgetExceededError:
            return False
        return True


def _scaled_orders(base: Sequence[int], t: int) -> tuple[int, ...]:
    top = max(base)
    return tuple(max(1, math.ceil(t * m / top)) for m in base)


def smallest_n(measure: _Measure, plan: ApproximationPlan, eps: float) -> tuple[int, ...] | None:
    """Smallest orders ``max(1, ceil(t m_j / max m))`` whose measured error is ``<= eps``.

    ``t`` runs through doubling steps up to ``max m`` and is then refined by
    bisection; ``M`` stays at the plan's value. Returns ``None`` if no
    affordable ``t`` reaches ``eps``.
    """
    base, top = plan.orders, max(plan.orders)

    def ok(t: int) -> bool | None:
        p = ApproximationPlan(plan.spec, plan.M, _scaled_orders(base, t), plan.provenance)
        if not measure.fits(p):
            return None
        return measure.error(p) <= eps

    lo, t = 0, 1
    while True:
        t = min(t, top)
        verdict = ok(t)
        if verdict is None:
            return None
        if verdict:
            break
        if t == top:
            return None
        lo, t = t, 2 * t
    hi = t
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return _scaled_orders(base, hi)


def _point(cfg: ExperimentConfig, measure: _Measure, value: Any, info: bool) -> StudyRow:
    start = time.perf_counter()
    eps, orders, s = cfg.epsilon, None, None
    if cfg.sweep_kind == "epsilon_ladder":
        eps = float(value)
    elif cfg.sweep_kind == "order_ladder":
        orders = value
    else:
        s = int(value)
    spec = cfg.spec_for(s)
    measure.prepare(spec)
    try:
        plan = _plan(cfg, spec, eps, orders)
    except BudgetExceededError as exc:
        n = exc.details.get("n", math.inf)
        return StudyRow(spec.s, eps, None, float(n), None, 2.0 / eps**2 if eps else None, None,
                        status="budget_rejected", wall_time=time.perf_counter() - start)
    n = plan.n
    bound = a_priori_bound(spec, plan.M, plan.orders).a_priori_bound
    row = StudyRow(spec.s, eps, plan.orders, n, None, plan.M, bound)
    if info and eps is not None:
        row.ratio = n / math.log1p(1.0 / eps) ** big_B(spec)
    if not measure.fits(plan):
        row.status = "budget_rejected"
    else:
        row.index_size = len(plan.index_set)
        row.measured_error = measure.error(plan)
        if info and cfg.search and eps is not None and row.measured_error is not None:
            found = smallest_n(measure, plan, eps)
            row.n_search = None if found is None else math.prod(found)
    row.wall_time = time.perf_counter() - start
    return row


def _study(cfg: ExperimentConfig, info: bool) -> list[StudyRow]:
    measure = _Measure(cfg)
    # build the test functions up front; workers only read the cache
    for v in cfg.values:
        measure.prepare(cfg.spec_for(int(v) if cfg.sweep_kind == "dimension_ladder" else None))
    if cfg.threads > 1 and len(cfg.values) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda v: _point(cfg, measure, v, info), cfg.values))
    return [_point(cfg, measure, v, info) for v in cfg.values]


def study_convergence(cfg: ExperimentConfig) -> list[StudyRow]:
    """One row per sweep point with the plan, its bound and the measured error."""
    return _study(cfg, info=False)


def study_info_complexity(cfg: ExperimentConfig) -> list[StudyRow]:
    """Like :func:`study_convergence`, plus ``n / log^{B(s)}(1 + 1/eps)`` and,
    when ``cfg.search`` is set, the smallest ``n`` on the search ladder."""
    return _study(cfg, info=True)


def fit_rate(rows: Sequence[StudyRow], upper: float = 0.5, floor: float = 0.0) -> dict[str, float]:
    """OLS fit of ``log log(1/e)`` against ``log n`` over rows with ``floor < e < upper``.

    Returns ``slope``, ``intercept``, ``r2`` and ``points``.
    """
    pts = [
        (math.log(r.n), math.log(math.log(1.0 / r.measured_error)))
        for r in rows
        if r.measured_error is not None and floor < r.measured_error < upper and r.n > 1
    ]
    if len(pts) < 2:
        raise ValueError(f"need at least two usable rows to fit a rate, got {len(pts)}")
    x, y = np.array(pts).T
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2, "points": len(pts)}


# ---------------------------------------------------------------------------
# output


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ";".join(str(v) for v in value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 2**53:
            return str(int(value))
        return "%.17g" % value
    return str(value)


def to_csv(rows: Sequence[StudyRow], include_wall_time: bool = True) -> str:
    cols = COLUMNS if include_wall_time else COLUMNS[:-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        d["orders"] = r.orders
        w.writerow([_cell(d[c]) for c in cols])
    return buf.getvalue()


def to_json(rows: Sequence[StudyRow]) -> str:
    return json.dumps({"columns": list(COLUMNS), "rows": [r.to_json() for r in rows]}, indent=1)


def read_json(text: str) -> list[StudyRow]:
    return [StudyRow.from_json(d) for d in json.loads(text)["rows"]]


def emit(rows: Sequence[StudyRow], path: str | Path) -> None:
    """Write ``rows`` as CSV, or as JSON when ``path`` ends in ``.json``."""
    path = Path(path)
    text = to_json(rows) if path.suffix == ".json" else to_csv(rows)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
