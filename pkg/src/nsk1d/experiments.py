"""Capillarity sweeps, mollified-jump families and grid-refinement studies."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticOptions, interface_width
from .errors import DomainError, NumericalFailure
from .solver import default_L, run
from .state import init_state, to_eulerian

log = logging.getLogger(__name__)

UNIFORM_FACTOR = 1.25


def formulation_for(c):
    """Effective formulation for c > 0, plain Navier-Stokes branch for c = 0."""
    return "effective_v1" if c > 0.0 else "primitive"


# --------------------------------------------------------------------------
# capillarity sweep
# --------------------------------------------------------------------------


@dataclass
class CaseSummary:
    c: float
    status: str
    rho_max: float = math.nan
    rho_min: float = math.nan
    v1_sup: float = math.nan
    M0: float = math.nan
    Ec0: float = math.nan
    final: Optional[dict] = None
    error: Optional[str] = None
    record: object = None


@dataclass
class SweepReport:
    c_list: list
    cases: list
    distance_L2: list
    rho_max_spread: float
    inv_rho_min_spread: float
    uniform: bool
    delta: float
    L: float
    moments: list = field(default_factory=list)
    factor: float = UNIFORM_FACTOR

    def to_json(self):
        return {
            "c": [float(c) for c in self.c_list],
            "distance_L2": [float(d) for d in self.distance_L2],
            "rho_max": [float(s.rho_max) for s in self.cases],
            "rho_min": [float(s.rho_min) for s in self.cases],
            "v1_sup": [float(s.v1_sup) for s in self.cases],
            "uniform": {
                "rho_max_spread": float(self.rho_max_spread),
                "inv_rho_min_spread": float(self.inv_rho_min_spread),
            },
        }


def _run_case(args):
    grid, profile, law, c, config, options = args
    cfg = replace(config, formulation=formulation_for(c))
    try:
        return run(grid, profile, law, c, cfg, options)
    except NumericalFailure as exc:
        return exc


def run_cases(grid, profile, law, c_list, config, options=None, threads=1):
    """Run every ``c`` independently; results come back in ``c_list`` order."""
    jobs = [(grid, profile, law, float(c), config, options) for c in c_list]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_case(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_case, jobs))


def _resample(state, x_origin, x_grid):
    view = to_eulerian(state, x_origin)
    return np.interp(x_grid, view.centers, view.rho)


def _distance(rec, ref, x_grid):
    """L2 distance over the stored time slices and the common x grid."""
    times = sorted(set(rec.snapshots) & set(ref.snapshots))
    per_t = []
    for t in times:
        a = _resample(rec.snapshots[t], rec.x_origin, x_grid)
        b = _resample(ref.snapshots[t], ref.x_origin, x_grid)
        per_t.append(np.trapezoid((a - b) ** 2, x_grid))
    if len(times) < 2:
        return math.sqrt(per_t[0]) if per_t else math.nan
    return math.sqrt(float(np.trapezoid(per_t, times)))


def _moments(rec, ref, x_grid):
    t = max(rec.snapshots)
    a = _resample(rec.snapshots[t], rec.x_origin, x_grid)
    b = _resample(ref.snapshots[t], ref.x_origin, x_grid)
    return [float(np.trapezoid((a - b) * x_grid**k, x_grid)) for k in (0, 1, 2)]


def summarize(rec, c):
    if isinstance(rec, NumericalFailure):
        return CaseSummary(c=c, status="failed", error=str(rec))
    last = rec.reports[-1]
    return CaseSummary(
        c=c,
        status=rec.status,
        rho_max=float(rec.series("rho_max").max()),
        rho_min=float(rec.series("rho_min").min()),
        v1_sup=float(rec.series("v1_sup").max()),
        M0=rec.info.M0,
        Ec0=rec.info.Ec0,
        final={"t": last.t, "Ec": last.Ec, "bd0": last.bd0, "bd1": last.bd1},
        record=rec,
    )


def _spread(values):
    values = [v for v in values if math.isfinite(v)]
    if not values:
        return math.nan
    return max(values) / min(values)


def capillarity_sweep(grid, profile, law, c_list, config, options=None, threads=1,
                      L=None, factor=UNIFORM_FACTOR, n_x=None):
    """Run the whole ``c_list`` and compare each density with the c = 0 run.

    The c = 0 reference is taken from the list itself. Failed cases are kept
    with status ``"failed"`` and a NaN distance.
    """
    c_list = [float(c) for c in c_list]
    if not c_list:
        raise DomainError("c_list", "must not be empty")
    for c in c_list:
        if not (0.0 <= c < 0.25):
            raise DomainError("c_list", f"every c must lie in [0, 0.25), got {c}")
    if 0.0 not in c_list:
        raise DomainError("c_list", "must contain the c = 0 reference")
    if L is None:
        L = options.L if options is not None and options.L is not None else default_L(profile, grid)
    options = replace(options or DiagnosticOptions(), L=L)
    # each distinct c runs once; duplicates share the result
    unique = sorted(set(c_list))
    records = dict(zip(unique, run_cases(grid, profile, law, unique, config, options, threads)))
    ref = records[0.0]
    x_grid = np.linspace(-L, L, n_x or 2 * grid.n_cells + 1)
    cases, dist, moments = [], [], []
    for c in c_list:
        rec = records[c]
        cases.append(summarize(rec, c))
        if isinstance(rec, NumericalFailure) or isinstance(ref, NumericalFailure):
            dist.append(math.nan)
            moments.append([math.nan] * 3)
        elif c == 0.0:
            dist.append(0.0)
            moments.append([0.0] * 3)
        else:
            dist.append(_distance(rec, ref, x_grid))
            moments.append(_moments(rec, ref, x_grid))
    rmax = _spread([s.rho_max for s in cases])
    rmin = _spread([1.0 / s.rho_min for s in cases if s.status != "failed"])
    ok = [s for s in cases if s.status != "failed"]
    delta = min((s.rho_min for s in ok), default=math.nan)
    return SweepReport(
        c_list=c_list,
        cases=cases,
        distance_L2=dist,
        rho_max_spread=rmax,
        inv_rho_min_spread=rmin,
        uniform=bool(len(ok) == len(cases) and rmax <= factor and rmin <= factor),
        delta=delta,
        L=L,
        moments=moments,
        factor=factor,
    )


# --------------------------------------------------------------------------
# one-sided bound on v1
# --------------------------------------------------------------------------


def one_sided_slope(record):
    """Smallest ``s >= 0`` with ``v1_sup(t) <= max(M0, 0) + s (1 + t)`` along the run."""
    t = record.series("t")
    v = record.series("v1_sup")
    base = max(record.info.M0, 0.0)
    return float(max(0.0, np.max((v - base) / (1.0 + t))))


# --------------------------------------------------------------------------
# mollification study
# --------------------------------------------------------------------------


@dataclass
class MollificationReport:
    n_list: list
    c: float
    M0: list
    width_initial: list
    width_final: list
    tv_interface: list
    width_vs_c: dict = field(default_factory=dict)

    @property
    def M0_spread(self):
        vals = [m for m in self.M0 if m > 0]
        return (max(vals) / min(vals) - 1.0) if vals else 0.0


def _widths(rec):
    w0 = interface_width(to_eulerian(rec.snapshots[0.0], rec.x_origin))
    w1 = interface_width(to_eulerian(rec.final, rec.x_origin))
    return w0, w1


def mollification_study(grid, jump_profile, law, n_list, c, config, options=None,
                        admissibility=True, companion_c=(), threads=1):
    """Interface width and ``M0`` across mollification indices ``n_list``.

    ``companion_c`` adds a width sweep at the first ``n`` of ``n_list``.
    """
    if admissibility and jump_profile.jump_sign(law) > 0:
        raise DomainError(
            "profile", "positive phi-jump is inadmissible; pass admissibility=False to override")
    cfg = replace(config, formulation=formulation_for(c))
    M0, w0s, w1s, tvs = [], [], [], []
    profiles = [replace(jump_profile, mollification=int(n)) for n in n_list]
    recs = run_cases_profiles(grid, profiles, law, c, cfg, options, threads)
    for rec in recs:
        if isinstance(rec, NumericalFailure):
            raise rec
        M0.append(rec.info.M0)
        w0, w1 = _widths(rec)
        w0s.append(w0)
        w1s.append(w1)
        tvs.append(rec.reports[-1].tv_phi_L)
    widths = {}
    if companion_c:
        base = profiles[0]
        for cc, rec in zip(companion_c, run_cases(grid, base, law, list(companion_c), config, options, threads)):
            if isinstance(rec, NumericalFailure):
                widths[float(cc)] = math.nan
            else:
                widths[float(cc)] = _widths(rec)[1]
    return MollificationReport([int(n) for n in n_list], float(c), M0, w0s, w1s, tvs, widths)


def run_cases_profiles(grid, profiles, law, c, config, options=None, threads=1):
    jobs = [(grid, p, law, float(c), config, options) for p in profiles]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_case(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_case, jobs))


def initial_M0(grid, profile, law, c, n_list):
    """``M0`` for each mollification index without running the solver."""
    return [init_state(grid, replace(profile, mollification=int(n)), law, c)[1].M0 for n in n_list]


# --------------------------------------------------------------------------
# refinement studies
# --------------------------------------------------------------------------


def restrict(fine, factor):
    """Average groups of ``factor`` fine cells onto the coarse cells."""
    return fine.reshape(-1, factor).mean(axis=1)


def _check_family(grid_family):
    grids = list(grid_family)
    if len(grids) < 3:
        raise DomainError("grid_family", f"need at least 3 grids, got {len(grids)}")
    grids.sort(key=lambda g: g.n_cells)
    for a, b in zip(grids[:-1], grids[1:]):
        if (a.m_min, a.m_max) != (b.m_min, b.m_max) or b.n_cells != 2 * a.n_cells:
            raise DomainError("grid_family", "grids must cover one interval with dm halving")
    return grids


def _order(e_coarse, e_fine):
    if e_coarse == 0.0 and e_fine == 0.0:
        return "exact"
    if e_fine == 0.0:
        return math.inf
    return math.log2(e_coarse / e_fine)


@dataclass
class ResolutionReport:
    n_cells: list
    errors: dict
    orders: dict


def resolution_study(grid_family, profile, law, c, config, options=None, formulations=None,
                     threads=1):
    """Self-convergence orders of the final density in discrete L1 and L2.

    Successive solutions are compared on the coarser grid after restriction;
    one order per consecutive triplet is reported, keyed by formulation and norm.
    """
    grids = _check_family(grid_family)
    formulations = list(formulations or [config.formulation])
    errors, orders = {}, {}
    for form in formulations:
        cfg = replace(config, formulation=form)
        jobs = [(g, profile, law, float(c), cfg, options) for g in grids]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                recs = list(pool.map(_run_direct, jobs))
        else:
            recs = [_run_direct(j) for j in jobs]
        rhos = [r.final.rho for r in recs]
        e1, e2 = [], []
        for g, coarse, fine in zip(grids, rhos[:-1], rhos[1:]):
            d = coarse - restrict(fine, 2)
            e1.append(float(np.sum(np.abs(d)) * g.dm))
            e2.append(float(math.sqrt(np.sum(d * d) * g.dm)))
        errors[form] = {"L1": e1, "L2": e2}
        orders[form] = {
            "L1": [_order(a, b) for a, b in zip(e1[:-1], e1[1:])],
            "L2": [_order(a, b) for a, b in zip(e2[:-1], e2[1:])],
        }
    return ResolutionReport([g.n_cells for g in grids], errors, orders)


def _run_direct(args):
    grid, profile, law, c, config, options = args
    return run(grid, profile, law, c, config, options)


@dataclass
class FormulationComparison:
    n_cells: list
    sup_diff: list
    orders: list


def formulation_comparison(grid_family, profile, law, c, config, options=None):
    """Sup-norm gap between primitive and effective densities at ``t_end`` per grid."""
    grids = _check_family(grid_family)
    diffs = []
    for g in grids:
        a = run(g, profile, law, c, replace(config, formulation="primitive"), options).final
        b = run(g, profile, law, c, replace(config, formulation="effective_v1"), options).final
        diffs.append(float(np.max(np.abs(a.rho - b.rho))))
    orders = [_order(x, y) for x, y in zip(diffs[:-1], diffs[1:])]
    return FormulationComparison([g.n_cells for g in grids], diffs, orders)
