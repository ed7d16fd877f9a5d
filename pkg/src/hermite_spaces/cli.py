"""Command line entry point: ``hermite-spaces <command> [options]``.

Commands: ``rule``, ``indexset``, ``approx``, ``integrate`` and ``study``.
Exit codes: 0 success, 2 configuration error, 3 budget rejection
(only with ``--strict``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .approximate import a_priori_bound, exact_l2_error, run
from .errors import BudgetExceededError, ConfigError, HermiteSpaceError
from .integrate import integral_reference, integrate_tensor
from .quadrature import make_rule
from .spectral import test_function_from_json
from .study import ExperimentConfig, _plan, emit, study_convergence, study_info_complexity, to_csv
from .weights import WeightSpec, enumerate_index_set

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _experiment(args, obj: dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig.from_json(obj, point_budget=args.budget, threads=args.threads)


def _single_plan(args, obj: dict[str, Any]):
    cfg = _experiment(args, {k: v for k, v in obj.items() if k != "sweep"})
    spec = cfg.spec_for(None)
    eps = cfg.epsilon
    if cfg.recipe["kind"] != "manual" and eps is None:
        raise ConfigError("recipe.epsilon: required by the exp and spt recipes")
    return cfg, spec, _plan(cfg, spec, eps, None)


def cmd_rule(args) -> int:
    if args.n is None or args.n < 1:
        raise ConfigError("rule: --n must be a positive integer")
    rule = make_rule(args.n)
    buf = io.StringIO()
    buf.write("node,weight\n")
    for x, w in zip(rule.nodes, rule.weights):
        buf.write("%.17g,%.17g\n" % (x, w))
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_indexset(args) -> int:
    obj = load_config(args.config)
    try:
        spec = WeightSpec.from_json(obj["space"])
    except KeyError:
        raise ConfigError("config: missing field 'space'") from None
    M = args.M if args.M is not None else obj.get("M")
    if M is None:
        raise ConfigError("indexset: give M in the config or with --M")
    A = enumerate_index_set(spec, float(M))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"k{j + 1}" for j in range(spec.s)])
    w.writerows(A.array.tolist())
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def _rejected(args, exc: BudgetExceededError) -> int:
    details = {k: (list(v) if isinstance(v, tuple) else v) for k, v in exc.details.items()}
    print(json.dumps({"status": "budget_rejected", "message": str(exc), **details}))
    return EXIT_BUDGET if args.strict else EXIT_OK


def cmd_approx(args) -> int:
    obj = load_config(args.config)
    if "function" not in obj:
        raise ConfigError("config: missing field 'function'")
    try:
        cfg, spec, plan = _single_plan(args, obj)
        f = test_function_from_json(obj["function"], spec)
        plan.check_budget(cfg.point_budget, cfg.cost_budget)
    except BudgetExceededError as exc:
        return _rejected(args, exc)
    out = run(plan, f, cfg.point_budget, cfg.cost_budget)
    report = a_priori_bound(spec, plan.M, plan.orders).with_measured(exact_l2_error(out, f.truth(), plan.index_set))
    summary = {"status": "ok", "orders": list(plan.orders), "n": plan.n, "M": plan.M,
               "index_size": len(plan.index_set), **report.to_json()}
    _write(out.to_csv(), args.out)
    if args.report is not None:
        Path(args.report).write_text(json.dumps(summary, indent=1))
    elif args.out is not None:
        print(json.dumps(summary))
    return EXIT_OK


def cmd_integrate(args) -> int:
    obj = load_config(args.config)
    if "function" not in obj:
        raise ConfigError("config: missing field 'function'")
    try:
        cfg, spec, plan = _single_plan(args, obj)
        f = test_function_from_json(obj["function"], spec)
        value = integrate_tensor(plan.tensor, f, budget=cfg.point_budget)
    except BudgetExceededError as exc:
        return _rejected(args, exc)
    ref = integral_reference(f)
    result = {
        "value": value,
        "reference": ref,
        "abs_error": None if ref is None else abs(value - ref),
        "orders": list(plan.orders),
        "n": plan.n,
    }
    _write(json.dumps(result) + "\n", args.out)
    return EXIT_OK


def cmd_study(args) -> int:
    obj = load_config(args.config)
    cfg = _experiment(args, obj)
    kind = obj.get("study", "convergence")
    if kind == "convergence":
        rows = study_convergence(cfg)
    elif kind == "info_complexity":
        rows = study_info_complexity(cfg)
    else:
        raise ConfigError(f"study: expected 'convergence' or 'info_complexity', got {kind!r}")
    if args.out is None:
        sys.stdout.write(to_csv(rows))
    else:
        emit(rows, args.out)
    if args.strict and any(r.status != "ok" for r in rows):
        return EXIT_BUDGET
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment or run config")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
    common.add_argument("--budget", type=int, default=None, help="maximum tensor points per plan")
    common.add_argument("--strict", action="store_true", help="exit 3 when a plan is over budget")

    parser = argparse.ArgumentParser(prog="hermite-spaces", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("rule", parents=[common], help="Gauss-Hermite nodes and weights as CSV")
    p.add_argument("--n", type=int, required=True)
    p = sub.add_parser("indexset", parents=[common], help="enumerate A(s, M) as CSV")
    p.add_argument("--M", type=float, default=None)
    p = sub.add_parser("approx", parents=[common], help="run the approximation algorithm")
    p.add_argument("--report", help="write the error report JSON here")
    sub.add_parser("integrate", parents=[common], help="tensor Gauss-Hermite integration")
    sub.add_parser("study", parents=[common], help="convergence or information-complexity sweep")
    return parser


COMMANDS = {
    "rule": cmd_rule,
    "indexset": cmd_indexset,
    "approx": cmd_approx,
    "integrate": cmd_integrate,
    "study": cmd_study,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET if args.strict else EXIT_OK
    except (ValueError, HermiteSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
