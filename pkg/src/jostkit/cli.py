"""Command-line interface.

Subcommands: ``compute-s`` (scattering-matrix grid to CSV), ``smallk-report``
(small-k expansion report to JSON), ``verify`` (identity and expansion
suites), and ``export-kirchhoff`` (write the built-in star-graph example as
a potential document).

Exit codes: 0 success, 1 verification failures, 2 row failures in a grid,
3 rank-ambiguous classification, 64 usage error, 65 invalid input data,
74 I/O error.  Configuration precedence is flags, then the environment
(``JOSTKIT_TOL``, ``JOSTKIT_XMAX``), then built-in defaults; the effective
configuration is echoed into every report header.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import JostkitError, ParseError
from .star_example import kirchhoff
from .model import load_document
from .scattering import s_grid
from .smallk import smallk_report
from .solve import SolverConfig
from .verify import run_suites

EX_USAGE = 64
EX_DATAERR = 65
EX_IOERR = 74


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="jostkit",
                     description="Jost and scattering matrices for the "
                                 "matrix Schrodinger operator on the half "
                                 "line, with small-energy expansions.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("compute-s", help="tabulate S(k) over a k grid")
    p.add_argument("--potential", required=True, help="potential document")
    p.add_argument("--kmin", type=float, required=True)
    p.add_argument("--kmax", type=float, required=True)
    p.add_argument("--nk", type=int, required=True)
    p.add_argument("--log", action="store_true", help="log-spaced k grid")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("smallk-report", help="small-k expansion report")
    p.add_argument("--potential", required=True)
    p.add_argument("--a", type=float, default=None,
                   help="override the base point (must be a grid point)")
    p.add_argument("--tol", type=float, default=None,
                   help="rank tolerance for the generic/exceptional split")
    p.add_argument("--out", required=True, help="output JSON path")

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--potential", required=True)
    p.add_argument("--suite", default="all",
                   choices=["all", "wronskian", "identities", "expansions"])

    p = sub.add_parser("export-kirchhoff",
                       help="write the built-in example document")
    p.add_argument("--gamma", required=True,
                   help="coupling parameter (float or fraction like -31/77)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    return parser


def _solver_config(tol_flag=None):
    rank_tol = tol_flag
    if rank_tol is None and os.environ.get("JOSTKIT_TOL"):
        rank_tol = float(os.environ["JOSTKIT_TOL"])
    if rank_tol is None:
        rank_tol = SolverConfig.rank_tol
    x_max = None
    if os.environ.get("JOSTKIT_XMAX"):
        x_max = float(os.environ["JOSTKIT_XMAX"])
    return SolverConfig(rank_tol=rank_tol, x_max=x_max)


def _config_dict(cfg):
    return {
        "backend": kernels.BACKEND,
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "grid_h": cfg.grid_h,
        "k_floor": cfg.k_floor,
        "rank_tol": cfg.rank_tol,
        "x_max": cfg.x_max if cfg.x_max is not None else "model default",
    }


def _config_lines(cfg):
    return [f"config {k} = {v}" for k, v in _config_dict(cfg).items()]


def _load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"jostkit: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EX_IOERR) from exc
    return load_document(text)


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        print(f"jostkit: cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(EX_IOERR) from exc


def _cmd_compute_s(args):
    if args.nk < 1:
        print("jostkit: --nk must be at least 1", file=sys.stderr)
        return EX_USAGE
    if args.log and (args.kmin <= 0 or args.kmax <= 0):
        print("jostkit: --log needs positive kmin/kmax", file=sys.stderr)
        return EX_USAGE
    pot, bc = _load(args.potential)
    if bc is None:
        print("jostkit: document carries no boundary matrices",
              file=sys.stderr)
        return EX_DATAERR
    cfg = _solver_config()
    if args.nk == 1:
        ks = np.array([args.kmin])
    elif args.log:
        ks = np.geomspace(args.kmin, args.kmax, args.nk)
    else:
        ks = np.linspace(args.kmin, args.kmax, args.nk)
    grid = s_grid(pot, bc, ks, cfg)
    _write(args.out, grid.to_csv(header_lines=_config_lines(cfg)))
    print(f"rows: {len(grid.rows)}  failed: {len(grid.failed_rows)}")
    print(f"max unitarity defect: {grid.max_defect!r}")
    return 2 if grid.failed_rows else 0


def _cmd_smallk(args):
    pot, bc = _load(args.potential)
    if bc is None:
        print("jostkit: document carries no boundary matrices",
              file=sys.stderr)
        return EX_DATAERR
    cfg = _solver_config(tol_flag=args.tol)
    report = smallk_report(pot, bc, cfg, a_override=args.a)
    payload = report.to_dict()
    payload["config"] = _config_dict(cfg)
    _write(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"case: {report.case}  mu: {report.mu}  nu: {report.nu}")
    return 3 if report.case == "ambiguous" else 0


def _cmd_verify(args):
    pot, bc = _load(args.potential)
    if bc is None:
        print("jostkit: document carries no boundary matrices",
              file=sys.stderr)
        return EX_DATAERR
    cfg = _solver_config()
    for line in _config_lines(cfg):
        print(f"# {line}")
    results = run_suites(pot, bc, cfg, which=args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 1


def _cmd_export(args):
    try:
        gamma = Fraction(args.gamma)
    except (ValueError, ZeroDivisionError):
        print(f"jostkit: cannot parse gamma {args.gamma!r}", file=sys.stderr)
        return EX_USAGE
    doc = kirchhoff(gamma).document()
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write(args.out, text)
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EX_USAGE
    handlers = {
        "compute-s": _cmd_compute_s,
        "smallk-report": _cmd_smallk,
        "verify": _cmd_verify,
        "export-kirchhoff": _cmd_export,
    }
    try:
        return handlers[args.command](args)
    except ParseError as exc:
        print(f"jostkit: invalid document: {exc}", file=sys.stderr)
        return EX_DATAERR
    except JostkitError as exc:
        print(f"jostkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
