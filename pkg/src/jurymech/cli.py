"""Command line front end: ``jurymech solve|verify|sweep|simulate``.

Exit codes: 0 success, 1 I/O error, 2 invalid input (including assumption
violations). Primary outputs are deterministic; floats are written with 17
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import game
from .mechanisms import VotingMechanism, classify, is_monotone, is_responsive
from .model import AssumptionError, ModelParams, conflict_of_interest, k_J, k_P, params_from_payoffs, to_fraction
from .solver_lp import solve_full
from .solver_structured import solve
from .theory import nonmonotonicity_threshold, random_instance, verify_lemmas

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2

THRESHOLD_KEYS = ("t_P", "t_J")
PAYOFF_KEYS = ("V_alpha", "V_beta", "U_alpha", "U_beta")
SWEEP_VARIABLES = ("t_P", "t_J", "n_plus_1", "p_alpha", "p_beta", "prior_alpha")
CSV_COLUMNS = (
    "variable_value", "k_J", "k_P", "conflict", "t_bar_P", "objective", "k_lo", "k_hi",
    "x_lo", "x_hi", "monotone", "responsive", "ic_b_binding", "status",
)


class InputError(ValueError):
    """Malformed or invalid user input (exit code 2)."""


# Serialization --------------------------------------------------------------

def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float in output")
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and every float at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    return fmt_float(obj)


def _number(value, exact: bool):
    if isinstance(value, bool):
        raise InputError(f"expected a number, got {value!r}")
    if exact or isinstance(value, str):
        frac = to_fraction(value)
        return frac if exact else float(frac)
    return float(value)


def params_from_json(obj: dict, exact: bool = False) -> ModelParams:
    """Parse the params object; numbers may also be given as strings such as "2/3"."""
    if not isinstance(obj, dict):
        raise InputError("params config must be a JSON object")
    has_t = any(k in obj for k in THRESHOLD_KEYS)
    has_pay = any(k in obj for k in PAYOFF_KEYS)
    if has_t == has_pay:
        raise InputError("give exactly one of the threshold pair (t_P, t_J) or the payoff quadruple")
    try:
        agents = obj["agents"]
        if isinstance(agents, bool) or int(agents) != agents:
            raise InputError(f"agents must be an integer, got {agents!r}")
        common = dict(
            n_plus_1=int(agents),
            prior_alpha=_number(obj["prior_alpha"], exact),
            p_alpha=_number(obj["p_alpha"], exact),
            p_beta=_number(obj["p_beta"], exact),
        )
        if has_t:
            return ModelParams(t_P=_number(obj["t_P"], exact), t_J=_number(obj["t_J"], exact), **common)
        return params_from_payoffs(**common, **{k: _number(obj[k], exact) for k in PAYOFF_KEYS})
    except KeyError as exc:
        raise InputError(f"missing key {exc.args[0]!r} in params config") from None
    except (TypeError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from None


def params_to_json(params: ModelParams) -> dict:
    out = {
        "agents": params.n_plus_1,
        "prior_alpha": float(params.prior_alpha),
        "p_alpha": float(params.p_alpha),
        "p_beta": float(params.p_beta),
    }
    if params.payoffs is not None:
        out.update({k: float(v) for k, v in zip(PAYOFF_KEYS, params.payoffs)})
    else:
        out.update({"t_P": float(params.t_P), "t_J": float(params.t_J)})
    return out


def _read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("JURYMECH_THREADS", "1")))
    except ValueError:
        return 1


# Commands -------------------------------------------------------------------

def cmd_solve(args) -> int:
    params = params_from_json(_read_json(args.config), exact=args.mode == "rational")
    out = {"params": params_to_json(params), "mode": args.mode}
    results = {}
    if args.solver in ("structured", "both"):
        results["structured"] = solve(params, args.mode)
    if args.solver in ("lp", "both"):
        results["lp"] = solve_full(params, args.mode)
    for name, res in results.items():
        out[name] = res.to_json()
    if args.solver == "both":
        out["objective_gap"] = abs(float(results["structured"].objective - results["lp"].objective))
    _emit(dumps(out) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    instances = []
    if args.config:
        instances.append(params_from_json(_read_json(args.config)))
    if args.random_instances:
        rng = np.random.default_rng(args.seed)
        instances.extend(random_instance(rng) for _ in range(args.random_instances))
    if not instances:
        raise InputError("nothing to verify: pass a config or --random-instances N")

    with ThreadPoolExecutor(_threads()) as pool:
        reports = list(pool.map(verify_lemmas, instances))

    failed = {}
    vacuous = {}
    for rep in reports:
        for name, res in rep.lemma_results.items():
            failed.setdefault(name, 0)
            vacuous.setdefault(name, 0)
            failed[name] += res.status == "fail"
            vacuous[name] += res.status == "vacuous"
    all_pass = all(rep.all_passed for rep in reports)
    out = {
        "instances": [
            {"params": params_to_json(p), "report": r.to_json()} for p, r in zip(instances, reports)
        ],
        "summary": {
            "instances": len(reports),
            "all_pass": all_pass,
            "failures": failed,
            "vacuous": vacuous,
        },
    }
    _emit(dumps(out) + "\n", args.out)
    for name, count in failed.items():
        if count:
            print(f"FAIL {name}: {count} instance(s)", file=sys.stderr)
    return EXIT_OK if all_pass else EXIT_INVALID


def _grid(spec: dict) -> list:
    if "values" in spec:
        values = spec["values"]
        if not isinstance(values, list):
            raise InputError("'values' must be a list")
        return values
    if "grid" in spec:
        g = spec["grid"]
        try:
            start, stop, steps = float(g["start"]), float(g["stop"]), int(g["steps"])
        except (KeyError, TypeError, ValueError):
            raise InputError("grid needs numeric start, stop and integer steps") from None
        if steps < 0:
            raise InputError("grid steps must be nonnegative")
        if g.get("scale", "linear") == "log":
            if start <= 0 or stop <= 0:
                raise InputError("log grid needs positive endpoints")
            return [float(v) for v in np.geomspace(start, stop, steps)]
        return [float(v) for v in np.linspace(start, stop, steps)]
    raise InputError("sweep spec needs 'values' or 'grid'")


def _sweep_row(base: dict, variable: str, value) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row["variable_value"] = value
    point = dict(base)
    if variable in THRESHOLD_KEYS and any(k in point for k in PAYOFF_KEYS):
        raise InputError("sweeping a threshold needs a base config in threshold form")
    point["agents" if variable == "n_plus_1" else variable] = value
    try:
        params = params_from_json(point)
    except (AssumptionError, ValueError) as exc:
        row["status"] = f"skipped: {exc}"
        return row
    res = solve(params)
    conflict = conflict_of_interest(params)
    shape = classify(res.x)
    row.update(
        k_J=k_J(params), k_P=k_P(params), conflict=conflict,
        t_bar_P=float(nonmonotonicity_threshold(params)[0]) if conflict else "",
        objective=float(res.objective),
        monotone=is_monotone(res.x), responsive=is_responsive(res.x),
        ic_b_binding=res.binding_b, status=res.status,
    )
    if shape is not None and not shape.is_zero:
        row.update(k_lo=shape.lower, k_hi=shape.upper,
                   x_lo=float(shape.lower_prob), x_hi=float(shape.upper_prob))
    return row


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return str(value)


def cmd_sweep(args) -> int:
    spec = _read_json(args.spec)
    variable = spec.get("variable")
    if variable not in SWEEP_VARIABLES:
        raise InputError(f"variable must be one of {', '.join(SWEEP_VARIABLES)}")
    base = spec.get("base")
    if isinstance(base, str):
        base = _read_json(Path(args.spec).parent / base)
    if not isinstance(base, dict):
        raise InputError("sweep spec needs a 'base' params object")
    values = _grid(spec)
    if not values:
        raise InputError("empty grid")
    params_from_json(base)  # the base itself must be valid

    with ThreadPoolExecutor(_threads()) as pool:
        rows = list(pool.map(lambda v: _sweep_row(base, variable, v), values))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = params_from_json(_read_json(args.config))
    try:
        x = VotingMechanism.from_json(_read_json(args.mechanism))
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad mechanism file: {exc}") from None
    if len(x) != params.n_plus_1 + 1:
        raise InputError(
            f"mechanism has {len(x)} entries; {params.n_plus_1} agents need {params.n_plus_1 + 1}"
        )
    config = game.SimConfig(trials=args.trials, seed=args.seed)
    strategy = game.ReportingStrategy(args.q_a, args.q_b).validate()
    report = game.simulate(params, x, strategy, config)
    out = report.to_json()
    if args.exact:
        principal, agent = game.expected_payoffs(params, x, strategy)
        out.update(principal_exact=principal, agent_exact=agent)
    _emit(dumps(out) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jurymech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute the optimal voting mechanism")
    p.add_argument("config")
    p.add_argument("--solver", choices=("structured", "lp", "both"), default="both")
    p.add_argument("--mode", choices=("float", "rational"), default="float")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the lemma verification suite")
    p.add_argument("config", nargs="?")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-instances", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="solve over a one-parameter grid and write CSV")
    p.add_argument("spec")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo payoffs of a mechanism")
    p.add_argument("config")
    p.add_argument("mechanism")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--q-a", type=float, default=1.0)
    p.add_argument("--q-b", type=float, default=0.0)
    p.add_argument("--exact", action="store_true", help="also report exact expected payoffs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssumptionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
