"""Command-line front end: problem files in, deterministic reports out.

Subcommands: allocate, equitable, robustness, bell-verify.  Problem files
are JSON documents with an explicit schema version; reports are emitted as
JSON (full payload including wall time), or as flat key/value CSV or text
tables (results only).  Logging goes to stderr, results to stdout or the
--out path.

Exit codes: 0 success, 1 failed verification, 2 schema violation,
3 domain error, 4 infeasible, 5 size cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from . import __version__
from .allocation import (AllocationList, Hypergraph, Priors,
                         performance_fairness, performance_reliability,
                         theorem1_allocation)
from .bell import verify_operator_identity
from .equitability import (BudgetConstraint, KnapsackProblem, Variable,
                           lexicographic_maxmin)
from .errors import (CapExceededError, DomainError, InfeasibleError,
                     QallocError)
from .incompatibility import (closed_form_mub_robustness,
                              generalized_robustness)
from .qcore import depolarize_assembly, mub_pair_assembly, trivial_assembly

log = logging.getLogger("qalloc.cli")

SCHEMA_VERSION = 1
IDENTITY_RESIDUAL_LIMIT = 1e-8
DEFAULT_ROBUSTNESS_TOL = 1e-4

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_SCHEMA = 2
EXIT_DOMAIN = 3
EXIT_INFEASIBLE = 4
EXIT_CAP = 5


class SchemaViolation(Exception):
    """Problem file fails validation; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# Exact-capable numeric fields accept JSON numbers or fraction strings.
_EXACT_NUMBER = {"type": ["number", "string"]}

_TOP_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "kind", "body"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["allocation", "equitable", "robustness", "bell-verify"]},
        "body": {"type": "object"},
    },
}

_BODY_SCHEMAS = {
    "allocation": {
        "type": "object",
        "required": ["hypergraph", "dim"],
        "additionalProperties": False,
        "properties": {
            "hypergraph": {
                "type": "object",
                "required": ["vertices", "edges"],
                "additionalProperties": False,
                "properties": {
                    "vertices": {"type": "array", "minItems": 1,
                                 "items": {"type": "string", "minLength": 1}},
                    "edges": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "minItems": 1,
                                        "items": {"type": "string", "minLength": 1}}},
                },
            },
            "dim": {"type": "integer", "minimum": 2},
            "priors": {"type": "object",
                       "additionalProperties": {"type": "number"}},
            "performance": {"type": "array", "minItems": 1,
                            "items": {"enum": ["fairness", "reliability"]}},
        },
    },
    "equitable": {
        "type": "object",
        "required": ["variables"],
        "additionalProperties": False,
        "properties": {
            "variables": {
                "type": "array", "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["id", "lower", "upper"],
                    "additionalProperties": False,
                    "properties": {"id": {"type": "string", "minLength": 1},
                                   "lower": _EXACT_NUMBER,
                                   "upper": _EXACT_NUMBER},
                },
            },
            "constraints": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["coefficients", "budget"],
                    "additionalProperties": False,
                    "properties": {
                        "coefficients": {"type": "object", "minProperties": 1,
                                         "additionalProperties": _EXACT_NUMBER},
                        "budget": _EXACT_NUMBER,
                    },
                },
            },
            "exclusivity_groups": {
                "type": "array",
                "items": {"type": "array", "minItems": 2,
                          "items": {"type": "string", "minLength": 1}},
            },
        },
    },
    "robustness": {
        "type": "object",
        "required": ["assembly"],
        "additionalProperties": False,
        "properties": {
            "assembly": {
                "type": "object",
                "required": ["type", "dim"],
                "additionalProperties": False,
                "properties": {
                    "type": {"enum": ["mub_pair", "trivial"]},
                    "dim": {"type": "integer", "minimum": 2},
                    "outcome_counts": {"type": "array", "minItems": 1,
                                       "items": {"type": "integer", "minimum": 1}},
                },
            },
            "eta": {"type": "number", "minimum": 0, "maximum": 1},
            "s_max": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
        },
    },
    "bell-verify": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "trials": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
        },
    },
}


def _reject_constant(token: str):
    # Problem files require finite numerics; NaN/Infinity are not JSON.
    raise ValueError(f"non-finite numeric literal {token}")


def load_problem(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_constant=_reject_constant)
    except OSError as exc:
        raise SchemaViolation("(file)", f"cannot read problem file: {exc}") from exc
    except ValueError as exc:
        raise SchemaViolation("(file)", f"not valid JSON: {exc}") from exc
    _validate(doc, _TOP_SCHEMA, prefix="")
    _validate(doc["body"], _BODY_SCHEMAS[doc["kind"]], prefix="body")
    return doc


def _validate(instance, schema: dict, prefix: str) -> None:
    validator = Draft202012Validator(schema)
    err = best_match(validator.iter_errors(instance))
    if err is None:
        return
    parts = [str(p) for p in err.absolute_path]
    if prefix:
        parts.insert(0, prefix)
    raise SchemaViolation("/".join(parts) or "(root)", err.message)


def _edge_label(edge) -> str:
    return ",".join(edge)


def run_allocate(body: dict, tol: float | None) -> dict:
    h = Hypergraph(body["hypergraph"]["vertices"],
                   [tuple(e) for e in body["hypergraph"]["edges"]])
    alloc = theorem1_allocation(h, body["dim"])
    wanted = body.get("performance", ["fairness"])
    performance = {}
    for name in wanted:
        if name == "fairness":
            performance["fairness"] = performance_fairness(alloc)
        else:
            if "priors" not in body:
                raise DomainError("reliability requires priors in the problem body")
            performance["reliability"] = performance_reliability(
                alloc, Priors(body["priors"]))
    return {
        "allocation": {_edge_label(e): v for e, v in alloc.entries.items()},
        "performance": performance,
    }


def run_equitable(body: dict, tol: float | None) -> dict:
    problem = KnapsackProblem(
        variables=tuple(Variable(v["id"], v["lower"], v["upper"])
                        for v in body["variables"]),
        constraints=tuple(BudgetConstraint(c["coefficients"], c["budget"])
                          for c in body.get("constraints", [])),
        exclusivity_groups=tuple(tuple(g) for g in
                                 body.get("exclusivity_groups", [])))
    sol = lexicographic_maxmin(problem)
    return {
        "values": {k: float(v) for k, v in sol.values.items()},
        "values_exact": {k: str(v) for k, v in sol.values.items()},
        "elimination_order": list(sol.elimination_order),
        "stage_values": [float(v) for v in sol.stage_values],
        "stage_values_exact": [str(v) for v in sol.stage_values],
        "tied_solutions": [{k: float(v) for k, v in tied.items()}
                           for tied in sol.tied_solutions],
    }


def run_robustness(body: dict, tol: float | None) -> dict:
    recipe = body["assembly"]
    if recipe["type"] == "mub_pair":
        assembly = mub_pair_assembly(recipe["dim"])
    else:
        counts = recipe.get("outcome_counts", [2, 2])
        assembly = trivial_assembly(recipe["dim"], counts)
    eta = float(body.get("eta", 1.0))
    if eta < 1.0:
        assembly = depolarize_assembly(assembly, eta)
    kwargs = {"tol": tol if tol is not None else DEFAULT_ROBUSTNESS_TOL}
    if "s_max" in body:
        kwargs["s_max"] = float(body["s_max"])
    if "max_iter" in body:
        kwargs["max_iter"] = int(body["max_iter"])
    result = generalized_robustness(assembly, **kwargs)
    out = {
        "value": result.value,
        "bracket": [result.bracket[0], result.bracket[1]],
        "certificate_residual": result.certificate.residual,
    }
    if recipe["type"] == "mub_pair" and eta == 1.0:
        closed = closed_form_mub_robustness(recipe["dim"])
        out["closed_form"] = {"value": closed,
                              "difference": abs(result.value - closed)}
    return out


def run_bell_verify(body: dict, tol: float | None) -> dict:
    residual = verify_operator_identity(random_seed=body["seed"],
                                        trials=body["trials"])
    return {
        "trials": body["trials"],
        "seed": body["seed"],
        "max_residual": residual,
        "threshold": IDENTITY_RESIDUAL_LIMIT,
        "within_threshold": bool(residual <= IDENTITY_RESIDUAL_LIMIT),
    }


_RUNNERS = {
    "allocation": run_allocate,
    "equitable": run_equitable,
    "robustness": run_robustness,
    "bell-verify": run_bell_verify,
}

# Subcommand name -> problem-file kind it accepts.
_KIND_FOR_COMMAND = {
    "allocate": "allocation",
    "equitable": "equitable",
    "robustness": "robustness",
    "bell-verify": "bell-verify",
}


def _flatten(value, prefix: str = ""):
    """Depth-first (key, scalar) pairs for the csv and text renderings."""
    if isinstance(value, dict):
        for k, v in value.items():
            yield from _flatten(v, f"{prefix}/{k}" if prefix else str(k))
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            yield from _flatten(v, f"{prefix}/{i}" if prefix else str(i))
    else:
        yield prefix, value


def _scalar_text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    rows = list(_flatten(report["results"]))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in rows:
            writer.writerow([key, _scalar_text(value)])
        return buf.getvalue()
    lines = [f"qalloc {report['command']} report (tool version {__version__})"]
    lines += [f"  {key} = {_scalar_text(value)}" for key, value in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("report written to %s", out_path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qalloc",
        description="Allocate measurement incompatibility over hypergraphs "
                    "and audit the related correlation bounds.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH",
                        help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="root seed for any randomized step (default 0; "
                             "a bell-verify problem file's seed wins unless "
                             "this flag is given)")
    common.add_argument("--tol", type=float, default=None, metavar="X",
                        help="numeric tolerance override where applicable")
    common.add_argument("--format", choices=("json", "csv", "text"),
                        default="json", help="report format (default json)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("allocate", "equitable", "robustness"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("problem", help="path to a problem file (JSON)")
    pb = sub.add_parser("bell-verify", parents=[common])
    pb.add_argument("problem", nargs="?", default=None,
                    help="optional problem file; flags override its body")
    pb.add_argument("--trials", type=int, default=None, metavar="N",
                    help="number of random trials (default 100)")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    command = args.command
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise SchemaViolation("--seed", "must fit in an unsigned 64-bit integer")
    if args.problem is not None:
        doc = load_problem(args.problem)
        if doc["kind"] != _KIND_FOR_COMMAND[command]:
            raise SchemaViolation(
                "kind", f"problem kind {doc['kind']!r} does not match "
                        f"subcommand {command!r}")
    else:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "bell-verify",
               "body": {}}
    body = dict(doc["body"])
    if command == "bell-verify":
        if args.trials is not None:
            body["trials"] = args.trials
        body.setdefault("trials", 100)
        if args.seed is not None:
            body["seed"] = args.seed
        body.setdefault("seed", 0)
        doc = {**doc, "body": body}
    seed = body["seed"] if command == "bell-verify" else (
        args.seed if args.seed is not None else 0)

    started = time.perf_counter()
    results = _RUNNERS[doc["kind"]](body, args.tol)
    wall = time.perf_counter() - started

    report = {
        "command": command,
        "provenance": {
            "tool": "qalloc",
            "version": __version__,
            "seed": seed,
            "tol": args.tol,
        },
        "inputs": doc,
        "results": results,
        "wall_time_s": wall,
    }
    _emit(render_report(report, args.format), args.out)
    if command == "bell-verify" and not results["within_threshold"]:
        log.error("identity residual %.3e exceeds %.1e",
                  results["max_residual"], IDENTITY_RESIDUAL_LIMIT)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SchemaViolation as exc:
        log.error("schema violation at %s", exc)
        return EXIT_SCHEMA
    except InfeasibleError as exc:
        log.error("infeasible: %s (violated: %s)", exc, exc.constraint)
        return EXIT_INFEASIBLE
    except CapExceededError as exc:
        log.error("size cap exceeded: %s", exc)
        return EXIT_CAP
    except (DomainError, QallocError) as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
