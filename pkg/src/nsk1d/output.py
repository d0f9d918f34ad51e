"""Deterministic on-disk artefacts: configs, series, snapshots, summaries, manifests."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .diagnostics import SERIES_COLUMNS
from .laws import roots_of_capillarity
from .state import node_diff, to_eulerian

SNAPSHOT_COLUMNS = ("m", "tau", "rho", "u", "x", "v0", "v1")


def fmt(x):
    """17 significant digits; enough to round-trip any double."""
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


class _Writer:
    """Writes files below ``root`` and remembers their hashes."""

    def __init__(self, root):
        self.root = Path(root)
        self.files = {}

    def write(self, rel, text):
        path = self.root / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            data = text.encode("utf-8")
            path.write_bytes(data)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        self.files[str(Path(rel).as_posix())] = hashlib.sha256(data).hexdigest()

    def merge(self, prefix, files):
        for rel, digest in files.items():
            self.files[f"{prefix}/{rel}"] = digest

    def manifest(self, extra=None):
        doc = {"files": dict(sorted(self.files.items()))}
        doc.update(extra or {})
        self.write("manifest.json", dump_json(doc))
        return doc


def series_csv(reports):
    lines = [",".join(SERIES_COLUMNS)]
    attrs = list(SERIES_COLUMNS.values())
    for r in reports:
        lines.append(",".join(fmt(getattr(r, a)) for a in attrs))
    return "\n".join(lines) + "\n"


def snapshot_csv(state, law, c, x_origin=0.0):
    """One row per node; cell fields are averaged onto nodes (edge nodes copy their cell)."""
    r0, r1 = roots_of_capillarity(c)

    def to_nodes(cell):
        out = np.empty(cell.size + 1)
        out[1:-1] = 0.5 * (cell[1:] + cell[:-1])
        out[0], out[-1] = cell[0], cell[-1]
        return out

    grad = node_diff(law.psi(state.rho), state.grid.dm)
    cols = (
        state.grid.nodes,
        to_nodes(state.tau),
        to_nodes(state.rho),
        state.u,
        to_eulerian(state, x_origin).x,
        state.u + r0 * grad,
        state.u + r1 * grad,
    )
    lines = [",".join(SNAPSHOT_COLUMNS)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def snapshot_name(t):
    return f"snapshots/t_{t:.6f}.csv"


def _window_summary(record):
    total = 0
    bad = {}
    for checks in record.window_checks.values():
        for w in checks:
            total += 1
            for kind in w.violations:
                bad[kind] = bad.get(kind, 0) + 1
    return {"checked": total, "violations": bad}


def run_summary(record):
    last = record.reports[-1] if record.reports else None
    doc = {
        "status": record.status,
        "error": record.error,
        "c": record.c,
        "steps": record.steps,
        "dt_halvings": record.halvings,
        "M0": record.info.M0 if record.info else None,
        "Ec0": record.info.Ec0 if record.info else None,
        "x_origin": record.x_origin,
        "L": record.L,
        "domain_too_small": record.domain_too_small,
        "max_far_field_defect": record.max_far_field_defect,
        "warnings": list(record.warnings),
        "windows": _window_summary(record),
    }
    if record.hypotheses is not None:
        doc["hypotheses"] = record.hypotheses.to_json()
    if last is not None:
        doc["final"] = {a: getattr(last, a) for a in SERIES_COLUMNS.values()}
        doc["envelope"] = {
            "rho_max": float(record.series("rho_max").max()),
            "rho_min": float(record.series("rho_min").min()),
            "v1_sup": float(record.series("v1_sup").max()),
            "hoffA": float(record.series("hoffA").max()),
            "hoffB": float(record.series("hoffB").max()),
            "sup_sigma_dxv0": float(record.series("sup_sigma_dxv0").max()),
        }
    return doc


def _emit_run(writer, record, config, prefix=""):
    p = f"{prefix}/" if prefix else ""
    writer.write(p + "config.json", dump_json(config.doc) if config is not None else "{}\n")
    writer.write(p + "series.csv", series_csv(record.reports if record else []))
    if record is None:
        return
    for t in sorted(record.snapshots):
        writer.write(p + snapshot_name(t), snapshot_csv(record.snapshots[t], record.law, record.c, record.x_origin))
    writer.write(p + "summary.json", dump_json(run_summary(record)))


def emit_outputs(record, out_dir, config=None):
    """Write a single run (``record`` may be ``None`` for an empty run)."""
    w = _Writer(out_dir)
    _emit_run(w, record, config)
    extra = {"run_hash": config.hash} if config is not None else {}
    return w.manifest(extra)


def case_dirname(c, config):
    return f"c_{c:g}_{config.hash[:8]}"


def emit_sweep(report, out_dir, config):
    """Top-level config and ``sweep.json`` plus one directory per distinct ``c``."""
    w = _Writer(out_dir)
    w.write("config.json", dump_json(config.doc))
    w.write("sweep.json", dump_json(report.to_json()))
    seen = set()
    cases = []
    for case in report.cases:
        case_cfg = config.with_updates(c=case.c)
        name = case_dirname(case.c, case_cfg)
        cases.append({"c": case.c, "dir": name, "status": case.status, "error": case.error})
        if name in seen:
            continue
        seen.add(name)
        if case.record is not None:
            _emit_run(w, case.record, case_cfg, prefix=name)
        else:
            w.write(f"{name}/config.json", dump_json(case_cfg.doc))
            w.write(f"{name}/summary.json", dump_json({"status": case.status, "error": case.error}))
    w.write("summary.json", dump_json({
        "cases": cases,
        "delta": report.delta,
        "uniform": report.uniform,
        "factor": report.factor,
        "L": report.L,
        "moments": report.moments,
    }))
    return w.manifest({"run_hash": config.hash})


def emit_failure(exc, out_dir, config=None):
    """Dump the last valid state of a failed run."""
    w = _Writer(out_dir)
    record = getattr(exc, "record", None)
    if record is not None:
        _emit_run(w, record, config)
    state = exc.state
    if state is not None and record is not None:
        w.write("failure/last_state.csv", snapshot_csv(state, record.law, record.c, record.x_origin))
    w.write("failure/error.json", dump_json({
        "type": type(exc).__name__,
        "message": str(exc),
        "t": state.t if state is not None else None,
    }))
    return w.manifest({"run_hash": config.hash} if config is not None else {})


def emit_table(rows, header, path):
    lines = [",".join(header)] + [",".join(fmt(v) if isinstance(v, (int, float)) else str(v) for v in r) for r in rows]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
