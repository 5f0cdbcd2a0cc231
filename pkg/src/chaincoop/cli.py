"""Command-line front end: ``solve``, ``stability``, ``sweep`` and ``limits``.

Every command reads market parameters from a JSON file (``--params``) or
falls back to the symmetric demonstration market.  JSON output has sorted keys
and floats rounded to 12 significant digits, so identical inputs give
byte-identical output.

Exit codes: 0 success, 1 a limit check failed, 2 bad input, 3 solver
failure, 4 unreadable or unwritable file.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .equilibria import EquilibriumOutcome, solve_partition
from .errors import InvalidInputError, SolverError
from .model import (
    CHAIN_GRAND,
    PARTITIONS,
    PG,
    BlockerPolicy,
    Coalition,
    MarketParams,
    Partition,
    PayoffVector,
)
from .stability import (
    SWEEP_PARTITIONS,
    Region,
    StabilityReport,
    partition_classification,
    ratio_grid,
    sweep_classification,
)
from .worths import (
    DERIVATIVE_ENTRIES,
    PESSIMAL,
    PESSIMAL_COALITIONS,
    LimitSchedule,
    WorthTable,
    derivative_limit_closed_form,
    derivative_limit_estimate,
    scaled_surface,
    worth_limit_closed_form,
    worth_limit_estimate,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_IO = 4

#: Market used when no ``--params`` file is given.
DEFAULT_PARAMS = MarketParams(
    dbar1=10.0, dbar2=10.0, eps=0.5, gamma=0.0, cS=1.0, cM1=1.0, cM2=1.0
)

DEFAULT_SWEEP_EPS = (0.999,)
DEFAULT_SWEEP_GAMMA = (0.9999,)
DEFAULT_RATIO_RANGE = (1.0, 6.0, 0.05)

WORTH_LIMIT_TOL = 0.01
DERIVATIVE_LIMIT_TOL = 0.02


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# Formatting


def _round(x: float) -> Optional[float]:
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def to_jsonable(obj: Any) -> Any:
    """Convert domain objects into plain JSON values with rounded floats."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Coalition):
        return obj.name
    if isinstance(obj, Partition):
        return obj.name
    if isinstance(obj, PayoffVector):
        return {"xS": _round(obj.xS), "xM1": _round(obj.xM1), "xM2": _round(obj.xM2)}
    if isinstance(obj, dict):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _key(k: Any) -> str:
    if isinstance(k, (Coalition, Partition)):
        return k.name
    return str(k)


def dumps(doc: Any) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def outcome_document(outcome: EquilibriumOutcome) -> dict[str, Any]:
    actions: dict[str, Any] = {c.name: p for c, p in outcome.actions.prices.items()}
    if outcome.partition not in (PG, CHAIN_GRAND):
        actions["quote"] = outcome.actions.quote
    return {
        "partition": outcome.partition.name,
        "arrangement": outcome.partition.alias,
        "actions": actions,
        "demands": outcome.demands,
        "utilities": outcome.utilities,
        "regime": outcome.regime,
        "diagnostics": outcome.diagnostics,
    }


def worth_document(table: WorthTable) -> dict[str, Any]:
    worths: dict[str, dict[str, float]] = {}
    for (p, c), v in table.entries.items():
        worths.setdefault(p.name, {})[c.name] = v
    pessimal = {c.name: table.pessimal(c) for c in PESSIMAL_COALITIONS}
    return {"worths": worths, "pessimal": pessimal}


def _region_document(region: Region) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "nonempty": region.feasible,
        "description": region.describe(),
        "dimension": region.dimension,
        "slack": region.slack,
        "witness": region.witness,
        "blockers": list(region.blockers),
    }
    if region.interval is not None:
        doc["interval"] = {
            "agent": region.interval.agent.label,
            "lower": region.interval.lower,
            "upper": region.interval.upper,
        }
    return doc


def stability_document(report: StabilityReport) -> dict[str, Any]:
    verdicts = {}
    for p, v in report.verdicts.items():
        entry = {"stable": v.stable, "region": _region_document(v.region)}
        if not v.stable:
            entry["certificates"] = [
                {"coalition": c.coalition.name, "deficit": c.deficit} for c in v.certificates
            ]
        verdicts[p.name] = entry
    return {
        "strict": report.strict,
        "policy": report.policy.value,
        "stable_partitions": [p.name for p in report.stable_partitions],
        "verdicts": verdicts,
        **worth_document(report.table),
    }


SWEEP_COLUMNS = (
    "ratio",
    "eps",
    "gamma",
    *(f"stable_{p.name}" for p in SWEEP_PARTITIONS),
    "witness_xS",
    "witness_xM1",
    "witness_xM2",
)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        w = r.witness
        witness = ["", "", ""] if w is None else [_fmt(w.xS), _fmt(w.xM1), _fmt(w.xM2)]
        writer.writerow(
            [_fmt(r.ratio), _fmt(r.eps), _fmt(r.gamma)]
            + [int(r.stable[p.name]) for p in SWEEP_PARTITIONS]
            + witness
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Argument helpers


def load_params(path: Optional[str]) -> MarketParams:
    if path is None:
        return DEFAULT_PARAMS
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise InvalidInputError(f"parameter file not found: {path}") from None
    except OSError as exc:
        raise InvalidInputError(f"cannot read parameter file {path}: {exc}") from None
    return MarketParams.from_json(text)


def parse_float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    try:
        values = [float(t) for t in items]
    except ValueError:
        raise InvalidInputError(f"not a comma-separated list of numbers: {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise InvalidInputError(f"non-finite value in {text!r}")
    return values


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from None


def _policy(args: argparse.Namespace) -> BlockerPolicy:
    if args.restricted:
        return BlockerPolicy.RESTRICTED
    return BlockerPolicy.parse(args.policy)


# ---------------------------------------------------------------------------
# Commands


def run_solve(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    partition = Partition.from_name(args.partition)
    outcome = solve_partition(params, partition)
    _write(dumps(outcome_document(outcome)), args.output)
    return EXIT_OK


def run_stability(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    report = partition_classification(params, strict=args.strict, policy=_policy(args))
    _write(dumps(stability_document(report)), args.output)
    return EXIT_OK


def run_sweep(args: argparse.Namespace) -> int:
    base = load_params(args.params)
    if args.ratios is not None:
        ratios = parse_float_list(args.ratios)
    else:
        ratios = ratio_grid(args.ratio_min, args.ratio_max, args.ratio_step)
    eps_list = parse_float_list(args.eps)
    gamma_list = parse_float_list(args.gamma)
    if args.jobs < 1:
        raise InvalidInputError("--jobs must be at least 1")
    result = sweep_classification(
        base, ratios, eps_list, gamma_list, strict=args.strict, policy=_policy(args), jobs=args.jobs
    )
    _write(sweep_csv(result.rows), args.output)
    parts = []
    for (e, g), t in result.transitions.items():
        parts.append(f"eps={_fmt(e)} gamma={_fmt(g)}: " + ("none" if t is None else _fmt(t)))
    print("PV1 transition ratio: " + ("; ".join(parts) or "no cells"), file=sys.stderr)
    return EXIT_OK


def _parse_pair(text: str) -> tuple[Coalition, str]:
    try:
        c_name, p_name = text.split(":", 1)
    except ValueError:
        raise InvalidInputError(f"pair must look like COALITION:PARTITION, got {text!r}") from None
    coalition = Coalition.from_name(c_name)
    if p_name.strip().lower() == PESSIMAL:
        return coalition, PESSIMAL
    return coalition, Partition.from_name(p_name).name


def _limit_entry(estimate: float, closed: float, scale: float, tol: float, converged: bool) -> dict:
    abs_err = abs(estimate - closed)
    ref = abs(closed) if closed != 0 else scale
    rel = abs_err / ref
    return {
        "estimate": estimate,
        "closed_form": closed,
        "abs_error": abs_err,
        "rel_error": rel,
        "tolerance": tol,
        "converged": converged,
        "pass": bool(rel <= tol and converged),
    }


def run_limits(args: argparse.Namespace) -> int:
    params = load_params(args.params)
    wanted = {_parse_pair(p) for p in args.pair} if args.pair else None

    def keep(c: Coalition, p_name: str) -> bool:
        return wanted is None or (c, p_name) in wanted

    at = min(params.alphaTilde1, params.alphaTilde2)
    scale = params.dbarM ** 2 / (8.0 * at)
    doc: dict[str, Any] = {}
    ok = True
    if args.table in ("worths", "all"):
        worth_entries: list[tuple[Coalition, Any]] = [(c, p) for p in PARTITIONS for c in p]
        worth_entries += [(c, PESSIMAL) for c in PESSIMAL_COALITIONS]
        selected = [(c, p) for c, p in worth_entries if keep(c, p if p == PESSIMAL else p.name)]
        surface = scaled_surface(params, LimitSchedule()) if selected else None
        out = {}
        for c, p in selected:
            est = worth_limit_estimate(c, p, params, surface=surface)
            closed = worth_limit_closed_form(c, p, params)
            entry = _limit_entry(est.value, closed, scale, WORTH_LIMIT_TOL, est.converged)
            ok &= entry["pass"]
            out[f"{c.name}:{p if p == PESSIMAL else p.name}"] = entry
        doc["worths"] = out
    if args.table in ("derivatives", "all"):
        out = {}
        for p, c in DERIVATIVE_ENTRIES:
            if not keep(c, p.name):
                continue
            est = derivative_limit_estimate(c, p, params)
            closed = derivative_limit_closed_form(c, p, params)
            entry = _limit_entry(est.value, closed, scale / 2.0, DERIVATIVE_LIMIT_TOL, True)
            ok &= entry["pass"]
            out[f"{c.name}:{p.name}"] = entry
        doc["derivatives"] = out
    doc["all_pass"] = ok
    _write(dumps(doc), args.output)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaincoop",
        description="Equilibria, coalition worths and stability for a supplier with two manufacturers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--params", help="market parameters as JSON (default: symmetric demo market)")
        p.add_argument("--output", "-o", help="write here instead of stdout")

    def blocking(p: argparse.ArgumentParser) -> None:
        p.add_argument("--strict", action="store_true", help="ties with a blocker also block")
        p.add_argument(
            "--policy",
            default=BlockerPolicy.FULL.value,
            help="admissible blockers: " + ", ".join(b.value for b in BlockerPolicy),
        )
        p.add_argument(
            "--restricted", action="store_true", help="shorthand for --policy restricted"
        )

    p = sub.add_parser("solve", help="equilibrium of one partition")
    common(p)
    p.add_argument("--partition", required=True, help="PG/PA/PH/PV1/PV2 or GC/ALC/HC/VC1/VC2")
    p.set_defaults(func=run_solve)

    p = sub.add_parser("stability", help="classify every partition")
    common(p)
    blocking(p)
    p.set_defaults(func=run_stability)

    p = sub.add_parser("sweep", help="classify over a grid of dbar1/dbar2 ratios (CSV)")
    common(p)
    blocking(p)
    p.add_argument("--ratios", help="explicit comma-separated ratios (overrides the range)")
    p.add_argument("--ratio-min", type=float, default=DEFAULT_RATIO_RANGE[0])
    p.add_argument("--ratio-max", type=float, default=DEFAULT_RATIO_RANGE[1])
    p.add_argument("--ratio-step", type=float, default=DEFAULT_RATIO_RANGE[2])
    p.add_argument("--eps", default=",".join(map(str, DEFAULT_SWEEP_EPS)))
    p.add_argument("--gamma", default=",".join(map(str, DEFAULT_SWEEP_GAMMA)))
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("limits", help="compare numerical and closed-form limits near eps, gamma -> 1")
    common(p)
    p.add_argument("--table", choices=("worths", "derivatives", "all"), default="all")
    p.add_argument(
        "--pair",
        action="append",
        help="restrict to COALITION:PARTITION (partition 'pa' for pessimal); repeatable",
    )
    p.set_defaults(func=run_limits)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    handler: Callable[[argparse.Namespace], int] = args.func
    try:
        return handler(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
