"""Command-line entry point: ``nsk1d <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .config import parse_config
from .errors import DomainError, NumericalFailure
from .laws import HYPOTHESES, check_hypotheses, make_law

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("nsk1d")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _setup_logging():
    level = os.environ.get("NSK1D_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    p = argparse.ArgumentParser(prog="nsk1d", description="1D Navier-Stokes-Korteweg solver and diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="capillarity sweep against the c = 0 reference")
    s.add_argument("--config", required=True)
    s.add_argument("--c-list", required=True, type=_floats)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=1)

    m = sub.add_parser("mollify-study", help="mollification-index family for a jump profile")
    m.add_argument("--config", required=True)
    m.add_argument("--n-list", required=True, type=_ints)
    m.add_argument("--companion-c", type=_floats, default=[])
    m.add_argument("--allow-positive-jump", action="store_true")
    m.add_argument("--out", required=True)
    m.add_argument("--threads", type=int, default=1)

    g = sub.add_parser("resolution-study", help="self-convergence under dm halving")
    g.add_argument("--config", required=True)
    g.add_argument("--n-cells", required=True, type=_ints)
    g.add_argument("--formulations", default=None)
    g.add_argument("--out", required=True)
    g.add_argument("--threads", type=int, default=1)

    h = sub.add_parser("check-laws", help="evaluate the structural hypotheses of a power law")
    h.add_argument("--alpha", required=True, type=float)
    h.add_argument("--gamma", required=True, type=float)
    h.add_argument("--a", type=float, default=1.0)
    h.add_argument("--eta", type=float, default=0.1)

    rep = sub.add_parser("report", help="summarise an output directory")
    rep.add_argument("--in", dest="indir", required=True)
    return p


def _check_admissible(cfg, profile, law):
    if cfg.doc["admissibility"] and profile.jump_sign(law) > 0:
        raise DomainError("/admissibility", "positive phi-jump rejected; set admissibility false to override")


def cmd_run(args):
    from .output import emit_failure, emit_outputs
    from .solver import run

    cfg = parse_config(args.config)
    grid, profile, law, solver_cfg, options = cfg.build()
    _check_admissible(cfg, profile, law)
    try:
        record = run(grid, profile, law, cfg.c, solver_cfg, options)
    except NumericalFailure as exc:
        emit_failure(exc, args.out, cfg)
        print(f"numerical failure: {exc}; last valid state in {Path(args.out) / 'failure'}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = emit_outputs(record, args.out, cfg)
    for msg in record.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"run {manifest['run_hash'][:12]}: {record.steps} steps, status {record.status}")
    return EXIT_OK


def cmd_sweep(args):
    from .experiments import capillarity_sweep
    from .output import emit_sweep

    cfg = parse_config(args.config)
    grid, profile, law, solver_cfg, options = cfg.build()
    _check_admissible(cfg, profile, law)
    report = capillarity_sweep(grid, profile, law, args.c_list, solver_cfg, options, threads=args.threads)
    emit_sweep(report, args.out, cfg)
    _print_sweep(report.to_json())
    failed = [c.c for c in report.cases if c.status == "failed"]
    if failed:
        print(f"failed cases: {failed}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_mollify(args):
    from .experiments import mollification_study
    from .output import dump_json, emit_table

    cfg = parse_config(args.config)
    grid, profile, law, solver_cfg, options = cfg.build()
    rep = mollification_study(grid, profile, law, args.n_list, cfg.c, solver_cfg, options,
                              admissibility=not args.allow_positive_jump,
                              companion_c=tuple(args.companion_c), threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(zip(rep.n_list, rep.M0, rep.width_initial, rep.width_final, rep.tv_interface))
    emit_table(rows, ["n", "M0", "width_initial", "width_final", "tv_phi"], out / "mollification.csv")
    (out / "mollification.json").write_text(dump_json({
        "n": rep.n_list, "c": rep.c, "M0": rep.M0, "width_initial": rep.width_initial,
        "width_final": rep.width_final, "tv_phi": rep.tv_interface,
        "width_vs_c": {repr(k): v for k, v in rep.width_vs_c.items()},
    }))
    print(f"{'n':>5} {'M0':>12} {'w(0)':>12} {'w(T)':>12}")
    for n, m0, w0, w1, _ in rows:
        print(f"{n:>5} {m0:>12.6g} {w0:>12.6g} {w1:>12.6g}")
    return EXIT_OK


def cmd_resolution(args):
    from .experiments import resolution_study
    from .output import dump_json
    from .state import build_grid

    cfg = parse_config(args.config)
    grid, profile, law, solver_cfg, options = cfg.build()
    family = [build_grid(grid.m_min, grid.m_max, n) for n in args.n_cells]
    forms = args.formulations.split(",") if args.formulations else None
    rep = resolution_study(family, profile, law, cfg.c, solver_cfg, options, forms, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolution.json").write_text(dump_json({"n_cells": rep.n_cells, "errors": rep.errors, "orders": rep.orders}))
    for form, orders in rep.orders.items():
        print(f"{form}: L1 orders {orders['L1']}, L2 orders {orders['L2']}")
    return EXIT_OK


def cmd_check_laws(args):
    law = make_law(args.alpha, args.gamma, a=args.a, eta=args.eta)
    rep = check_hypotheses(law)
    print(f"mu(rho) = rho^{args.alpha:g}, gamma = {args.gamma:g}")
    for h in HYPOTHESES:
        mark = "ok" if rep.flags[h] else "FALSE"
        print(f"  {h}: {mark}")
    for name, ok in rep.applicability.items():
        print(f"  {name} applicable: {ok}")
    if not rep.agree:
        print("  warning: closed-form and sampled flags disagree", file=sys.stderr)
    print(json.dumps(rep.to_json(), sort_keys=True))
    return EXIT_OK


def _print_sweep(doc):
    print(f"{'c':>10} {'d(c)':>14} {'rho_max':>12} {'rho_min':>12} {'v1_sup':>12}")
    for row in zip(doc["c"], doc["distance_L2"], doc["rho_max"], doc["rho_min"], doc["v1_sup"]):
        print("".join(f"{v:>{w}.6g}" for v, w in zip(row, (10, 15, 13, 13, 13))))
    u = doc["uniform"]
    print(f"rho_max spread {u['rho_max_spread']:.6g}, 1/rho_min spread {u['inv_rho_min_spread']:.6g}")


def cmd_report(args):
    from .output import emit_table

    root = Path(args.indir)
    if (root / "sweep.json").exists():
        doc = json.loads((root / "sweep.json").read_text())
        _print_sweep(doc)
        rows = list(zip(doc["c"], doc["distance_L2"], doc["rho_max"], doc["rho_min"], doc["v1_sup"]))
        emit_table(rows, ["c", "distance_L2", "rho_max", "rho_min", "v1_sup"], root / "report.csv")
        return EXIT_OK
    summary = json.loads((root / "summary.json").read_text())
    with open(root / "series.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"status {summary['status']}, steps {summary['steps']}, c = {summary['c']}")
    wins = summary["windows"]
    print(f"window checks: {wins['checked']}, violations: {wins['violations'] or 'none'}")
    keys = ["t", "Ec", "bd0", "bd1", "rho_min", "rho_max", "v1_sup", "hoffA", "hoffB"]
    print("".join(f"{k:>14}" for k in keys))
    stride = max(1, len(rows) // 10)
    picked = rows[::stride] + ([rows[-1]] if rows and (len(rows) - 1) % stride else [])
    for r in picked:
        print("".join(f"{float(r[k]):>14.6g}" for k in keys))
    emit_table([[float(r[k]) for k in keys] for r in picked], keys, root / "report.csv")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "mollify-study": cmd_mollify,
    "resolution-study": cmd_resolution,
    "check-laws": cmd_check_laws,
    "report": cmd_report,
}


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        return COMMANDS[args.command](args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
