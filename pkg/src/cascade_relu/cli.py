"""Command-line interface: ``cascade-relu <subcommand> ...`` (or ``python -m cascade_relu``).

Exit status: 0 on success with zero mismatches, 1 when a check finds a
mismatch, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assembler import CascadeParams, build_seed_net
from .cpwl import MeshError, mesh_from_json
from .decomposition import decompose, verify_decomposition
from .network import NetworkParseError, deserialize, serialize, stats
from .rational import RationalParseError, format_rational, parse_rational
from .refinement import (Mask, Window, check_window_preservation, oracle_cascade_physical, oracle_direct,
                         transition_matrices)
from .verify import VerificationPlan, render_heatmap, run_verification

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _write(path: str, data) -> None:
    p = Path(path)
    if isinstance(data, str):
        p.write_text(data, encoding="utf-8")
    else:
        p.write_bytes(data)


def _params(args) -> CascadeParams:
    return CascadeParams(parse_rational(args.rho, "--rho"), parse_rational(args.eps_bar, "--eps-bar"),
                         parse_rational(args.delta_bar, "--delta-bar"))


def _problem(args):
    """Mask, seed and window from the common options."""
    if not (args.mask and args.seed and args.window):
        raise InputError("--mask, --seed and --window are required")
    try:
        m = Mask.from_json(_read_json(args.mask))
        g = mesh_from_json(_read_json(args.seed))
    except (ValueError, MeshError) as exc:
        raise InputError(str(exc)) from None
    return m, g, Window(*args.window)


def _point(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"point must be 'p/q,p/q', got {text!r}")
    return tuple(parse_rational(s.strip(), "--point") for s in parts)


def _stats_doc(net) -> dict:
    st = stats(net)
    return {"width": st.width, "depth": st.depth, "hidden_layers": st.hidden_layers,
            "max_abs_weight": format_rational(st.max_abs_weight), "parameter_count": st.parameter_count}


# -- subcommands ---------------------------------------------------------------


def cmd_compile(args) -> int:
    m, g, w = _problem(args)
    real = build_seed_net(g, m, w, _params(args), args.n)
    _write(args.output, serialize(real.network))
    print(json.dumps({"output": args.output, **_stats_doc(real.network), "atoms": len(real.decomposition.terms)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    plan = VerificationPlan.demo() if args.plan == "demo" else VerificationPlan.from_json(_read_json(args.plan))
    say = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    report = run_verification(plan, say)
    _write(args.output, report.dumps(include_timings=args.timings))
    print(json.dumps({"ok": report.ok, "mismatches": report.mismatches, "report": args.output}))
    return EXIT_OK if report.ok else EXIT_MISMATCH


def _oracle(args, m, g, w):
    if args.mode == "direct":
        return lambda p: oracle_direct(g, m, args.n, p)
    tm = transition_matrices(m, w, check_window_preservation(m, w).require())
    return lambda p: oracle_cascade_physical(g, tm, args.n, p)


def cmd_oracle_eval(args) -> int:
    m, g, w = _problem(args)
    value = _oracle(args, m, g, w)(_point(args.point))
    print(format_rational(value))
    return EXIT_OK


def cmd_decompose(args) -> int:
    try:
        g = mesh_from_json(_read_json(args.seed))
    except (ValueError, MeshError) as exc:
        raise InputError(str(exc)) from None
    d = decompose(g, parse_rational(args.rho, "--rho"))
    if args.output:
        _write(args.output, json.dumps(d.to_json(), indent=1) + "\n")
    rep = verify_decomposition(d, g, args.points, args.random_seed)
    print(json.dumps({"atoms": len(d.terms), "distinct_shapes": len(d.atom_shapes()),
                      "refined_triangles": d.refined_triangles, **rep.to_json()}))
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def cmd_stats(args) -> int:
    try:
        net = deserialize(Path(args.network).read_bytes())
    except OSError as exc:
        raise InputError(f"{args.network}: {exc.strerror}") from None
    print(json.dumps(_stats_doc(net)))
    return EXIT_OK


def cmd_render(args) -> int:
    if args.input == "oracle":
        m, g, w = _problem(args)
        source = _oracle(args, m, g, w)
    else:
        try:
            source = deserialize(Path(args.input).read_bytes())
        except OSError as exc:
            raise InputError(f"{args.input}: {exc.strerror}") from None
    region = [parse_rational(v, "--region") for v in args.region]
    hm = render_heatmap(source, region, args.res, exact=not args.no_exact)
    out = Path(args.output)
    _write(str(out), hm.pgm())
    csv_path = out.with_suffix(".csv")
    _write(str(csv_path), hm.csv())
    print(json.dumps({"pgm": str(out), "csv": str(csv_path), "min": float(hm.values.min()),
                      "max": float(hm.values.max())}))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_problem(p, required: bool):
    p.add_argument("--mask", required=required, help="mask file ({'entries': [[j, k, 'p/q'], ...]})")
    p.add_argument("--seed", required=required, help="seed mesh file (vertices, triangles, values)")
    p.add_argument("--window", nargs=2, type=int, metavar=("L1", "L2"), required=required)


def _add_params(p):
    p.add_argument("--rho", default="1/4")
    p.add_argument("--eps-bar", default="1/8")
    p.add_argument("--delta-bar", default="1/2")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cascade-relu",
                                 description="Exact ReLU networks for 2D refinement cascades.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile V^n g into a network file")
    _add_problem(p, True)
    p.add_argument("--n", type=int, required=True)
    _add_params(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("verify", help="run a verification plan")
    p.add_argument("--plan", required=True, help="plan file, or 'demo' for the built-in plan")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle-eval", help="evaluate V^n g at one point with a reference oracle")
    p.add_argument("--mode", choices=("direct", "cascade"), default="direct")
    p.add_argument("--point", required=True, help="'p/q,p/q'")
    _add_problem(p, True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_oracle_eval)

    p = sub.add_parser("decompose", help="split a seed into translated special atoms")
    p.add_argument("--seed", required=True)
    p.add_argument("--rho", default="1/4")
    p.add_argument("-o", "--output")
    p.add_argument("--points", type=int, default=1000, help="random check points")
    p.add_argument("--random-seed", type=int, default=0)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("stats", help="width, depth, largest weight, parameter count")
    p.add_argument("network")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", help="PGM heatmap plus CSV of exact values")
    p.add_argument("--input", required=True, help="network file, or 'oracle'")
    p.add_argument("--region", nargs=4, required=True, metavar=("X0", "Y0", "X1", "Y1"))
    p.add_argument("--res", nargs=2, type=int, required=True, metavar=("W", "H"))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--no-exact", action="store_true", help="skip exact values (CSV gets floats)")
    p.add_argument("--mode", choices=("direct", "cascade"), default="direct")
    _add_problem(p, False)
    p.add_argument("--n", type=int, default=0)
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, RationalParseError, NetworkParseError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
