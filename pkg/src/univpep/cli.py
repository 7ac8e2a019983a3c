"""Command-line front end.

Subcommands: ``check``, ``bounds``, ``worst-fn``, ``run-method``, ``pep`` and
``reproduce``.  JSON goes to stdout, CSV files go under ``--out``.

Exit codes: 0 success (``check``: feasible), 1 usage or input error,
2 infeasible dataset (``check`` only), 3 no certified worst case (``pep``).
"""

from __future__ import annotations

import argparse
import contextlib
import inspect
import json
import sys
from pathlib import Path

import numpy as np

from . import methods as mt
from .classes import ClassSpec
from .experiments import EXPERIMENTS, reproduce
from .interpolation import Dataset, check
from .named import NAMED, named_worst_case
from .pep import CertificationError, NoFeasiblePointError, PepProblem, SolverConfig, solve

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_UNCERTIFIED = 0, 1, 2, 3

PEP_CSV_COLUMNS = ("value", "known_value", "feasibility_residual", "replay_residual", "membership_residual",
                   "restarts", "seed")


class UsageError(ValueError):
    pass


def _load_json(arg: str):
    """Inline JSON if ``arg`` starts with ``{`` or ``[``, ``-`` for stdin, otherwise a file path."""
    text = arg
    if arg == "-":
        text = sys.stdin.read()
    elif not arg.lstrip().startswith(("{", "[")):
        text = Path(arg).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {arg!r}: {exc}") from None


def _params(items) -> dict:
    """``key=value`` pairs; values are parsed as JSON when possible (numbers, lists)."""
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _dataset(obj) -> tuple[Dataset, dict | None]:
    """A list of points, or ``{"points": [...], "class": {...}}``."""
    if isinstance(obj, dict):
        if "points" not in obj:
            raise UsageError("dataset object needs a 'points' list")
        return Dataset.from_points(obj["points"]), obj.get("class")
    if isinstance(obj, list):
        return Dataset.from_points(obj), None
    raise UsageError("dataset must be a list of points or an object with 'points'")


def _config(args) -> SolverConfig:
    cfg = SolverConfig()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.restarts is not None:
        kw["restarts"] = args.restarts
    if args.feastol is not None:
        kw["feastol"] = args.feastol
    return SolverConfig(**{**vars(cfg), **kw})


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# ------------------------------------------------------------------ commands

def cmd_check(args) -> int:
    data, embedded = _dataset(_load_json(args.dataset))
    cls_obj = _load_json(args.cls) if args.cls else embedded
    if cls_obj is None:
        raise UsageError("no class given: pass --class or embed 'class' in the dataset")
    spec = ClassSpec.from_json(cls_obj)
    verdict = check(data, spec, feastol=args.feastol if args.feastol is not None else 1e-9)
    _dump({"class": spec.to_json(), **verdict.to_json()})
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_bounds(args) -> int:
    if args.list or not args.name:
        _dump(sorted(mt.BOUNDS))
        return EXIT_OK
    params = _params(args.param)
    if args.compose:
        x0 = params.pop(args.compose_arg, None)
        if x0 is None:
            raise UsageError(f"--compose needs the starting value as {args.compose_arg}=...")
        fn = mt.BOUNDS[args.name]
        values = mt.compose(lambda v: fn(**{args.compose_arg: v}, **params), float(x0), args.compose)
        _dump({"name": args.name, "params": params, "start": x0, "values": values})
    else:
        _dump({"name": args.name, "params": params, "value": mt.analytic_bound(args.name, **params)})
    return EXIT_OK


def cmd_worst_fn(args) -> int:
    if args.list or not args.name:
        _dump(sorted(NAMED))
        return EXIT_OK
    fn = named_worst_case(args.name, **_params(args.param))
    if args.samples:
        lo, hi, n = args.samples
        x = np.linspace(lo, hi, int(n))
        rows = np.column_stack([x, fn(x), fn.derivative(x, 1), fn.derivative(x, 2)])
        out = _open_out(args.out, f"{args.name}_samples.csv")
        with out as fh:
            mt.write_rows(fh, ("x", "f", "g", "h"), rows.tolist())
    else:
        _dump({"name": args.name, "function": fn.to_json()})
    return EXIT_OK


def cmd_run_method(args) -> int:
    meth = mt.MethodSpec.from_json(_load_json(args.method))
    fn = named_worst_case(args.fn, **_params(args.param))
    tr = mt.run(meth, fn, args.x0, args.N, xstar=args.xstar, M=args.M)
    with _open_out(args.out, f"{args.fn}_{meth.kind}.csv") as fh:
        mt.write_rows(fh, mt.CSV_COLUMNS, tr.rows())
    return EXIT_OK


def cmd_pep(args) -> int:
    problem = PepProblem.from_json(_load_json(args.problem))
    cfg = _config(args)
    try:
        sol = solve(problem, cfg)
    except (CertificationError, NoFeasiblePointError) as exc:
        _dump({"problem": problem.to_json(), "error": str(exc)})
        return EXIT_UNCERTIFIED
    _dump({"problem": problem.to_json(), **sol.to_json()})
    row = [sol.value, sol.known, sol.feasibility_residual, sol.replay_residual, sol.membership,
           cfg.restarts, cfg.seed]
    if args.out:
        stem = "pep" if args.problem == "-" or args.problem.lstrip().startswith("{") else Path(args.problem).stem
        with _open_out(args.out, f"{stem}.csv") as fh:
            mt.write_rows(fh, PEP_CSV_COLUMNS, [row])
    return EXIT_OK


def cmd_reproduce(args) -> int:
    names = sorted(EXPERIMENTS) if args.name == "all" else [args.name]
    params = _params(args.param)
    written = []
    for name in names:
        written += [str(p) for p in reproduce(name, args.out or ".", _config(args), **params)]
    _dump({"written": written})
    return EXIT_OK


def _open_out(out, filename):
    """Write to ``<out>/<filename>`` when ``--out`` is given, else to stdout."""
    if not out:
        return contextlib.nullcontext(sys.stdout)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return open(path / filename, "w", newline="")


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="solver seed (default 0)")
    common.add_argument("--restarts", type=int, default=None, help="random restarts (default 256)")
    common.add_argument("--feastol", type=float, default=None, help="feasibility tolerance")
    common.add_argument("--out", default=None, help="output directory for CSV files")

    p = argparse.ArgumentParser(prog="univpep", description="Worst-case analysis of one-dimensional second-order methods.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="check a dataset against a function class")
    s.add_argument("dataset", help="JSON file, inline JSON or '-'")
    s.add_argument("--class", dest="cls", default=None, help='class JSON, e.g. \'{"kind": "qsc", "M": 1}\'')
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    s.add_argument("name", nargs="?")
    s.add_argument("param", nargs="*", help="key=value")
    s.add_argument("--list", action="store_true")
    s.add_argument("--compose", type=int, default=0, metavar="N", help="iterate the bound N times")
    s.add_argument("--compose-arg", default=None, help="parameter fed back when composing (default: first)")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("worst-fn", parents=[common], help="print a named worst-case function")
    s.add_argument("name", nargs="?")
    s.add_argument("param", nargs="*", help="key=value")
    s.add_argument("--list", action="store_true")
    s.add_argument("--samples", nargs=3, type=float, metavar=("LO", "HI", "N"), help="sample x, f, g, h as CSV")
    s.set_defaults(func=cmd_worst_fn)

    s = sub.add_parser("run-method", parents=[common], help="run a method on a named function")
    s.add_argument("fn", help="named function")
    s.add_argument("param", nargs="*", help="key=value for the function")
    s.add_argument("--method", required=True, help='method JSON, e.g. \'{"kind": "cnm", "M": 1}\'')
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("-N", type=int, default=1)
    s.add_argument("--xstar", type=float, default=None)
    s.add_argument("--M", type=float, default=None, help="constant used in the eta column")
    s.set_defaults(func=cmd_run_method)

    s = sub.add_parser("pep", parents=[common], help="solve a performance estimation problem")
    s.add_argument("problem", help="problem JSON file, inline JSON or '-'")
    s.set_defaults(func=cmd_pep)

    s = sub.add_parser("reproduce", parents=[common], help="write the plot data of one experiment")
    s.add_argument("name", choices=sorted(EXPERIMENTS) + ["all"])
    s.add_argument("param", nargs="*", help="key=value overriding the experiment defaults")
    s.set_defaults(func=cmd_reproduce)
    return p


def _first_param(name: str) -> str:
    return next(iter(inspect.signature(mt.BOUNDS[name]).parameters))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds" and args.name and args.name not in mt.BOUNDS:
            raise UsageError(f"unknown bound {args.name!r}; known: {sorted(mt.BOUNDS)}")
        if args.command == "bounds" and args.compose and args.compose_arg is None:
            args.compose_arg = _first_param(args.name)
        return args.func(args)
    except (UsageError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"univpep {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
