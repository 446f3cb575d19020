"""Command line front end.

Exit codes: 0 success, 2 invalid input, 3 horizon exhausted,
4 computed but out of tolerance, 5 I/O error.
"""

import argparse
import json
import sys

import numpy as np

from cobweb.errors import CobwebError, WrongSeries
from cobweb.orthoscheme import (
    ball_volume,
    orthoscheme_volume,
    sites as site_table,
)
from cobweb.packing import (
    DEFAULT_HORIZON,
    TOL_DELTA,
    TOL_R,
    format_rows,
    load_manifest,
    optimize,
    parse_sites,
    reproduce_tables,
    result_record,
    select_tables,
)
from cobweb.projmetric import build_gram
from cobweb.wgroup import cw_presentation, verify_cw, verify_W_presentation

EXIT_OK, EXIT_INPUT, EXIT_HORIZON, EXIT_FLAGGED, EXIT_IO = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"UsageError: {message}\n")
        raise SystemExit(EXIT_INPUT)


def _uvw(p):
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--w", type=int, required=True)


def _output(p):
    p.add_argument("--format", choices=("csv", "records"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser():
    parser = _Parser(prog="cobweb", description="Ball packings of hyperbolic cobweb manifolds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="common radius and density for one site set")
    _uvw(p)
    p.add_argument("--sites", required=True, help="site labels joined by '+', e.g. A2+F03+E")
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    _output(p)

    p = sub.add_parser("reproduce", help="recompute the reference tables with residuals")
    p.add_argument("--tables", default="all", help="'all' or comma-separated table numbers")
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--tol-r", type=float, default=TOL_R)
    p.add_argument("--tol-delta", type=float, default=TOL_DELTA)
    p.add_argument("--jobs", type=int, default=1)
    _output(p)

    p = sub.add_parser("group", help="group presentations and relator checks")
    gsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = gsub.add_parser("verify-w")
    _uvw(q)
    q.add_argument("--out", default=None)
    for name in ("presentation", "verify-cw"):
        q = gsub.add_parser(name)
        q.add_argument("--z", type=int, required=True)
        q.add_argument("--out", default=None)

    p = sub.add_parser("sites", help="site coordinates and stabilizer orders")
    _uvw(p)
    _output(p)

    p = sub.add_parser("volume", help="orthoscheme and ball volumes")
    _uvw(p)
    p.add_argument("--r", type=float, action="append", default=[], help="ball radius (repeatable)")
    p.add_argument("--out", default=None)
    return parser


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_optimize(args):
    labels = parse_sites(args.sites)
    res = optimize(args.u, args.v, args.w, labels, horizon=args.horizon)
    _emit(format_rows([result_record(res)], args.format), args.out)
    return EXIT_OK


def cmd_reproduce(args):
    rows = load_manifest()
    tables = "all" if args.tables == "all" else [t for t in args.tables.split(",") if t.strip()]
    try:
        rows = select_tables(rows, tables)
    except ValueError:
        raise CobwebError(f"malformed --tables {args.tables!r}") from None
    reports = reproduce_tables(rows, horizon=args.horizon, tol_r=args.tol_r,
                               tol_delta=args.tol_delta, jobs=args.jobs)
    records = [result_record(rep.result, rep.residuals or None, rep.row, rep.error) for rep in reports]
    _emit(format_rows(records, args.format), args.out)
    flagged = [rep for rep in reports if rep.flagged]
    for rep in flagged:
        r = rep.row
        detail = rep.error or ", ".join(f"{k}={v:+.6f}" for k, v in rep.residuals.items())
        sys.stderr.write(f"flagged: table {r.table} ({r.u},{r.v},{r.w}) {'+'.join(r.sites)}: {detail}\n")
    sys.stderr.write(f"{len(reports) - len(flagged)}/{len(reports)} rows within tolerance\n")
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_group(args):
    if args.action == "verify-w":
        report = verify_W_presentation(build_gram(args.u, args.v, args.w))
    elif args.action == "presentation":
        _emit(cw_presentation(args.z).to_text() + "\n", args.out)
        return EXIT_OK
    else:
        cw_presentation(args.z)  # rejects even z
        if args.z % 4 != 3:
            raise WrongSeries(
                f"z={args.z} belongs to the second series; no generator words are known for it, "
                "only its symbolic presentation (use 'group presentation')")
        report = verify_cw(args.z)
    _emit(report.to_text() + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_FLAGGED


def cmd_sites(args):
    g = build_gram(args.u, args.v, args.w)
    records = []
    for label, s in site_table(g).items():
        x = s.point.canonical().x
        records.append({"label": label, "x0": f"{x[0]:.9f}", "x1": f"{x[1]:.9f}", "x2": f"{x[2]:.9f}",
                        "x3": f"{x[3]:.9f}", "stabilizer": s.stabilizer_order})
    if args.format == "records":
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    else:
        head = "label,x0,x1,x2,x3,stabilizer"
        text = head + "\n" + "".join(",".join(str(r[k]) for k in head.split(",")) + "\n" for r in records)
    _emit(text, args.out)
    return EXIT_OK


def cmd_volume(args):
    g = build_gram(args.u, args.v, args.w)
    vol = orthoscheme_volume(g)
    lines = [f"vol_O\t{vol:.12f}", f"vol_W\t{vol / 2:.12f}"]
    lines += [f"ball({r:g})\t{ball_volume(r):.12f}" for r in args.r]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "reproduce": cmd_reproduce,
    "group": cmd_group,
    "sites": cmd_sites,
    "volume": cmd_volume,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except CobwebError as exc:
        sys.stderr.write(exc.diagnostic() + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"IOError: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
