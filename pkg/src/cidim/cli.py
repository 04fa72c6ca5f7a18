"""Command-line front end.

Exit codes: 0 success, 1 computation error (an error record is written to
stdout), 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .approx import approx_ci
from .cid import cid_multi, construct_gk_w, construct_w_multi, construct_w_pair, gkcid, rcid
from .errors import CidimError, InputError, ProblemSpecError
from .figures import FIGURES, Table, reproduce
from .linalg import Tolerances
from .mcverify import check_as_relation, sample_joint
from .presets import PRESET_NAMES, preset
from .quant import quant_bounds
from .records import ProblemSpec, ResultRecord, encode, load_problem, parse_tolerance_string, tolerances_from_env
from .wyner import make_sequence_member, singularity_report, wyner_gaussian

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2


def _floats(raw: str, flag: str) -> list[float]:
    try:
        vals = [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ProblemSpecError(flag, f"expected comma-separated numbers, got {raw!r}") from None
    if not vals:
        raise ProblemSpecError(flag, "grid is empty")
    return vals


def _pattern(raw: str):
    if raw in ("min", "max"):
        return raw
    try:
        signs = [int(x) for x in raw.split(",")]
    except ValueError:
        raise ProblemSpecError("--pattern", f"expected min, max or comma-separated +1/-1, got {raw!r}") from None
    if not all(s in (-1, 1) for s in signs):
        raise ProblemSpecError("--pattern", "explicit signs must be +1 or -1")
    return signs


def _tolerances(args: argparse.Namespace) -> Tolerances:
    tol = tolerances_from_env()
    if args.tol:
        tol = parse_tolerance_string(args.tol, tol)
    return tol


def _problem(args: argparse.Namespace, default: Optional[str] = None) -> ProblemSpec:
    tol = _tolerances(args)
    if args.preset and args.input:
        raise ProblemSpecError("--preset", "give either --preset or --input, not both")
    if args.input:
        spec = load_problem(args.input, tol)
        if args.tol:
            spec = ProblemSpec(spec.joint, parse_tolerance_string(args.tol, spec.tolerances), spec.preset, spec.source)
        return spec
    name = args.preset or default
    if not name:
        raise ProblemSpecError("--preset", "an input is required (--preset or --input)")
    return ProblemSpec(preset(name, tol), tol, name)


def _inputs(spec: ProblemSpec, **params: Any) -> dict[str, Any]:
    return {**spec.canonical_inputs(), "parameters": encode(params)}


def cmd_cid(args: argparse.Namespace) -> ResultRecord:
    spec = _problem(args)
    j, tol = spec.joint, spec.tolerances
    out: dict[str, Any] = {"cid": cid_multi(j, tol), "rcid": rcid(j, tol), "gkcid": gkcid(j, tol)}
    if args.w or args.verify:
        w_multi = construct_w_multi(j, tol)
        gk = construct_gk_w(j, tol)
        if args.w:
            out["w_multi"] = {"dimension": w_multi.dimension, "w_matrix": w_multi.w_matrix,
                              "z_dims": w_multi.trace.z_dims}
            out["w_gk"] = {"dimension": gk.dimension, "per_source_maps": list(gk.per_source_maps)}
        pair = construct_w_pair(j, tol) if j.n == 2 else None
        if args.w and pair is not None:
            out["w_pair"] = {"dimension": pair.dimension, "w_matrix": pair.w_matrix,
                             "n_x": pair.per_source_maps[0], "n_y": pair.per_source_maps[1]}
        if args.verify:
            batch = sample_joint(j, args.samples, args.seed, tol)
            res = {}
            if pair is not None:
                left = np.hstack([pair.per_source_maps[0], np.zeros((pair.dimension, j.block_dims[1]))])
                right = np.hstack([np.zeros((pair.dimension, j.block_dims[0])), pair.per_source_maps[1]])
                res["pair"] = check_as_relation(batch, left, right, tol)
            worst = 0.0
            for i in range(1, j.n):
                left = np.zeros((gk.dimension, j.dim))
                right = np.zeros((gk.dimension, j.dim))
                left[:, j.block_slice(0)] = gk.per_source_maps[0]
                right[:, j.block_slice(i)] = gk.per_source_maps[i]
                worst = max(worst, check_as_relation(batch, left, right, tol))
            res["gk"] = worst
            out["as_residuals"] = res
            out["as_pass"] = all(v < tol.as_tol for v in res.values())
    return ResultRecord("cid", _inputs(spec, w=args.w, verify=args.verify, samples=args.samples),
                        out, tol, args.seed if args.verify else None)


def cmd_wyner(args: argparse.Namespace) -> ResultRecord:
    spec = _problem(args)
    j, tol = spec.joint, spec.tolerances
    w = wyner_gaussian(j, tol)
    singular, k = singularity_report(j, tol)
    out = {
        "bits": w.as_float(),
        "infinite": w.infinite,
        "unit_count": w.unit_count,
        "jointly_singular": singular,
        "k": k,
        "sigma_vals": w.spectrum.sigma_vals,
    }
    return ResultRecord("wyner", _inputs(spec), out, tol)


def cmd_seq(args: argparse.Namespace) -> ResultRecord:
    spec = _problem(args)
    j, tol = spec.joint, spec.tolerances
    grid = _floats(args.eps_grid, "--eps-grid")
    pattern = _pattern(args.pattern)
    rows = []
    for e in grid:
        m = make_sequence_member(j, e, pattern, tol)
        w = wyner_gaussian(m.perturbed_joint, tol)
        bits = w.as_float()
        rows.append({
            "epsilon": e,
            "bits": bits,
            "ratio": bits / (0.5 * math.log2(1.0 / e)),
            "rho": m.rho,
            "signs": m.sign_pattern,
        })
    return ResultRecord("seq", _inputs(spec, eps_grid=grid, pattern=args.pattern), {"rows": rows}, tol)


def cmd_approx(args: argparse.Namespace) -> ResultRecord:
    spec = _problem(args)
    j, tol = spec.joint, spec.tolerances
    grid = _floats(args.eps_grid, "--eps-grid")
    rows = []
    for e in grid:
        s = approx_ci(j, e, tol)
        rows.append({
            "epsilon": e,
            "sv_budget": s.sv_budget,
            "ci_bits": s.ci_bits,
            "lower_bound_bits": s.lower_bound_bits,
            "achievable_bits": s.achievable_bits,
            "ratio": s.ratio,
            "converged": s.converged,
            "frobenius_distance": s.frobenius_distance,
            "rho_star": s.rho_star,
        })
    return ResultRecord("approx", _inputs(spec, eps_grid=grid), {"rows": rows}, tol)


def cmd_quant(args: argparse.Namespace) -> ResultRecord:
    spec = _problem(args)
    j, tol = spec.joint, spec.tolerances
    grid = _floats(args.m_grid, "--m-grid")
    rows = []
    for m in grid:
        r = quant_bounds(j, m, tol=tol)
        rows.append({
            "m": m,
            "lower_bits": r.lower_bits,
            "upper_bits": r.upper_bits,
            "ratio_lower": r.ratio_lower,
            "ratio_upper": r.ratio_upper,
            "methods": list(r.methods),
        })
    return ResultRecord("quant", _inputs(spec, m_grid=grid), {"rows": rows}, tol)


def cmd_reproduce(args: argparse.Namespace) -> Table | ResultRecord:
    tol = _tolerances(args)
    joint = None
    if args.preset or args.input:
        joint = _problem(args).joint
    table = reproduce(args.figure, joint, tol)
    if args.format == "json":
        return ResultRecord(
            "reproduce",
            {"figure": args.figure, "joint": None if joint is None else joint.sigma.tolist()},
            {"columns": list(table.columns), "rows": [list(r) for r in table.rows]},
            tol,
        )
    return table


def _csv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else encode(v) for v in r])
    return buf.getvalue()


def _flatten(value: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(value, dict):
        out = []
        for k in sorted(value):
            out.extend(_flatten(value[k], f"{prefix}{k}."))
        return out
    if isinstance(value, list) and value and isinstance(value[0], (list, dict)):
        return [(prefix.rstrip("."), json.dumps(encode(value), sort_keys=True))]
    if isinstance(value, list):
        return [(prefix.rstrip("."), json.dumps(encode(value)))]
    return [(prefix.rstrip("."), value)]


def render(result: Table | ResultRecord, fmt: str) -> str:
    if isinstance(result, Table):
        return _csv(result.columns, result.rows)
    if fmt == "json":
        return result.to_json()
    outputs = result.to_dict()["outputs"]
    rows = outputs.get("rows")
    if isinstance(rows, list) and rows and isinstance(rows[0], dict):
        cols = [c for c in rows[0] if not isinstance(rows[0][c], list)]
        return _csv(cols, [[r[c] for c in cols] for r in rows])
    return _csv(("key", "value"), _flatten(outputs))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cidim",
        description="Common information dimension and Wyner common information of Gaussian vectors.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--preset", help=f"named covariance ({', '.join(PRESET_NAMES)})")
    src.add_argument("--input", "-i", help="problem file (YAML or JSON)")
    common.add_argument("--tol", help="tolerance overrides, e.g. rank_tol=1e-9,one_tol=1e-7")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default json; csv for reproduce)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("cid", parents=[common], help="CID, RCID and GKCID; optionally the W maps")
    c.add_argument("--w", action="store_true", help="include the shared-variable matrices")
    c.add_argument("--verify", action="store_true", help="check the a.s. relations on samples")
    c.add_argument("--samples", type=int, default=1000, help="sample count for --verify")
    c.add_argument("--seed", type=int, default=0, help="seed for --verify sampling")
    c.set_defaults(func=cmd_cid)

    c = sub.add_parser("wyner", parents=[common], help="Wyner common information and singularity report")
    c.set_defaults(func=cmd_wyner)

    c = sub.add_parser("seq", parents=[common], help="normalized CI along a nearly singular sequence")
    c.add_argument("--eps-grid", default="1e-3,1e-4,1e-6")
    c.add_argument("--pattern", default="min", help="min, max or comma-separated +1/-1 signs")
    c.set_defaults(func=cmd_seq)

    c = sub.add_parser("approx", parents=[common], help="approximate CI under a Frobenius budget")
    c.add_argument("--eps-grid", default="1e-3,1e-4,1e-6")
    c.set_defaults(func=cmd_approx)

    c = sub.add_parser("quant", parents=[common], help="bounds on the CI of quantized vectors")
    c.add_argument("--m-grid", default="2,4,16,256")
    c.set_defaults(func=cmd_quant)

    c = sub.add_parser("reproduce", parents=[common], help="emit a figure dataset (CSV by default)")
    c.add_argument("figure", help=f"one of {', '.join(FIGURES)}")
    c.set_defaults(func=cmd_reproduce)
    return p


def _error_record(exc: Exception, command: str) -> str:
    return json.dumps(
        {"command": command, "error": type(exc).__name__, "message": str(exc), "tool_version": __version__},
        sort_keys=True,
        indent=2,
    ) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "reproduce" else "json"
    try:
        result = args.func(args)
    except InputError as exc:
        print(f"cidim {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CidimError as exc:
        sys.stdout.write(_error_record(exc, args.command))
        print(f"cidim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    sys.stdout.write(render(result, args.format))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
