"""Semi-discrete right-hand sides, time stepping and full trajectories.

The velocity is pinned to 0 at the two end nodes. Every cell, the outermost
ones included, evolves by the discrete mass equation; with node differences
vanishing at the ends, summation by parts holds exactly and the primitive
and effective formulations coincide at the semi-discrete level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import solveh_banded

from .diagnostics import (
    Accumulators,
    DiagnosticOptions,
    HoffTracker,
    default_window_origins,
    dissipation_update,
    energy_report,
    make_report,
    structure_checks,
)
from .errors import DomainError, NumericalFailure, StabilityError, VacuumError
from .laws import check_hypotheses, pi_inverse_half, roots_of_capillarity
from .state import (
    FAR_FIELD_TOL,
    State,
    cell_diff,
    centered_origin,
    init_state,
    node_diff,
)

log = logging.getLogger(__name__)

FORMULATIONS = ("primitive", "effective_v1")
TIME_SCHEMES = ("explicit_rk2", "imex_be")
EPS0 = 1e-300


@dataclass(frozen=True)
class SolverConfig:
    formulation: str = "effective_v1"
    time_scheme: str = "explicit_rk2"
    cfl: float = 0.25
    t_end: float = 1.0
    output_times: tuple = ()
    energy_guard_tol: float = 1e-6
    max_dt_halvings: int = 20

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise DomainError("formulation", f"must be one of {FORMULATIONS}")
        if self.time_scheme not in TIME_SCHEMES:
            raise DomainError("time_scheme", f"must be one of {TIME_SCHEMES}")
        if not (0.0 < self.cfl <= 1.0):
            raise DomainError("cfl", f"must lie in (0, 1], got {self.cfl}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise DomainError("t_end", f"must be positive, got {self.t_end}")
        if self.energy_guard_tol < 0.0:
            raise DomainError("energy_guard_tol", "must be non-negative")
        if int(self.max_dt_halvings) != self.max_dt_halvings or self.max_dt_halvings < 0:
            raise DomainError("max_dt_halvings", "must be a non-negative integer")
        object.__setattr__(self, "output_times", tuple(float(t) for t in self.output_times))


@dataclass(frozen=True)
class Tendencies:
    """Time derivatives: ``dtau_dt`` on cells, ``dw_dt`` on nodes.

    ``variable`` names the evolved node field, ``"u"`` or ``"v1"``.
    """

    dtau_dt: np.ndarray
    dw_dt: np.ndarray
    variable: str = "u"

    @property
    def du_dt(self):
        if self.variable != "u":
            raise AttributeError("tendencies are for v1; use diagnostics.velocity_rates")
        return self.dw_dt

    @property
    def dv1_dt(self):
        if self.variable != "v1":
            raise AttributeError("tendencies are for u")
        return self.dw_dt


# --------------------------------------------------------------------------
# right-hand sides on raw arrays
# --------------------------------------------------------------------------


def _rho_checked(tau, state=None):
    if not np.all(tau > 0.0) or not np.all(np.isfinite(tau)):
        raise VacuumError("specific volume left (0, inf)", state)
    return 1.0 / tau


def _rhs_u(tau, u, dm, law, c, state=None):
    rho = _rho_checked(tau, state)
    rm = rho * law.mu(rho)
    du = cell_diff(u, dm)
    flux = rm * du - law.pressure(rho)
    if c > 0.0:
        d2psi = cell_diff(node_diff(law.psi(rho), dm), dm)
        flux = flux + c * rm * d2psi
    return du, node_diff(flux, dm)


def _rhs_v1(tau, v1, dm, law, c, state=None):
    r0, r1 = roots_of_capillarity(c)
    rho = _rho_checked(tau, state)
    rm = rho * law.mu(rho)
    dv1 = cell_diff(v1, dm)
    dtau = dv1
    if r1 != 0.0:
        dtau = dv1 - r1 * cell_diff(node_diff(law.psi(rho), dm), dm)
    flux = -law.pressure(rho)
    if r0 > 0.0:
        flux = flux + r0 * rm * dv1
    return dtau, node_diff(flux, dm)


def _to_work(state, law, c, formulation):
    if formulation == "primitive":
        return state.u
    _, r1 = roots_of_capillarity(c)
    return state.u + r1 * node_diff(law.psi(state.rho), state.grid.dm)


def _from_work(tau, w, dm, law, c, formulation):
    if formulation == "primitive":
        return w
    _, r1 = roots_of_capillarity(c)
    u = w - r1 * node_diff(law.psi(1.0 / tau), dm)
    u[0] = u[-1] = 0.0
    return u


def rhs_primitive(state, law, c):
    """Tendencies of ``(tau, u)`` in the primitive capillary formulation."""
    dtau, du = _rhs_u(state.tau, state.u, state.grid.dm, law, c, state)
    return Tendencies(dtau, du, "u")


def rhs_effective(state, law, c, v1=None):
    """Tendencies of ``(tau, v1)``; ``v1`` is rebuilt from ``state`` unless given."""
    if v1 is None:
        v1 = _to_work(state, law, c, "effective_v1")
    dtau, dv1 = _rhs_v1(state.tau, v1, state.grid.dm, law, c, state)
    return Tendencies(dtau, dv1, "v1")


def _rhs_arrays(formulation):
    return _rhs_u if formulation == "primitive" else _rhs_v1


def rhs(state, law, c, formulation="effective_v1"):
    if formulation == "primitive":
        return rhs_primitive(state, law, c)
    return rhs_effective(state, law, c)


# --------------------------------------------------------------------------
# time step selection
# --------------------------------------------------------------------------


def dt_candidates(state, law, c):
    """The viscous, capillary and acoustic limits before the CFL factor."""
    dm = state.grid.dm
    rho = state.rho
    mu = law.mu(rho)
    rm = rho * mu
    _, r1 = roots_of_capillarity(c)
    viscous = float(np.min(dm * dm / (r1 * rm))) if r1 > 0 else math.inf
    if c > 0.0:
        # rho * psi'(rho) = mu(rho)
        capillary = float(np.min(dm * dm / (math.sqrt(c) * rm * mu + EPS0)))
    else:
        capillary = math.inf
    acoustic = float(np.min(dm / (rho * law.sound_speed(rho) + EPS0)))
    return viscous, capillary, acoustic


def stable_dt(state, law, c, cfl, next_output=None):
    dt = cfl * min(dt_candidates(state, law, c))
    if next_output is not None:
        dt = min(dt, next_output - state.t)
    return dt


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------


class StepResult(NamedTuple):
    state: State
    dt: float
    halvings: int
    Ec: float


def _heun(tau, w, dm, law, c, dt, k1, f, state):
    tau1 = tau + dt * k1[0]
    w1 = w + dt * k1[1]
    k2 = f(tau1, w1, dm, law, c, state)
    half = 0.5 * dt
    return tau + half * (k1[0] + k2[0]), w + half * (k1[1] + k2[1])


def _imex(tau, w, dm, law, c, dt, k1, formulation, state):
    """Backward Euler on the frozen diffusion, forward Euler on the rest."""
    rho = 1.0 / tau
    r0, _ = roots_of_capillarity(c)
    coeff = rho * law.mu(rho) * (1.0 if formulation == "primitive" else r0)
    explicit = k1[1] - node_diff(coeff * cell_diff(w, dm), dm)
    rhs_vec = (w + dt * explicit)[1:-1]
    lam = dt / (dm * dm)
    ab = np.empty((2, rhs_vec.size))
    ab[1] = 1.0 + lam * (coeff[:-1] + coeff[1:])
    ab[0, 0] = 0.0
    ab[0, 1:] = -lam * coeff[1:-1]
    w_new = np.zeros_like(w)
    w_new[1:-1] = solveh_banded(ab, rhs_vec, lower=False, check_finite=False)
    return tau + dt * k1[0], w_new


def advance(state, law, c, dt, config, k1=None, Ec_old=None):
    """One guarded step: returns the accepted state and the dt actually used.

    ``k1`` are the tendencies at ``state`` for the evolved field of
    ``config.formulation``; they are recomputed if omitted. A step that raises
    the energy by more than ``energy_guard_tol`` times its old value, or that
    leaves the admissible set, is retried at half the step.
    """
    dm = state.grid.dm
    form = config.formulation
    f = _rhs_arrays(form)
    w = _to_work(state, law, c, form)
    if k1 is None:
        k1 = f(state.tau, w, dm, law, c, state)
    elif isinstance(k1, Tendencies):
        k1 = (k1.dtau_dt, k1.dw_dt)
    if Ec_old is None:
        Ec_old = energy_report(state, law, c).Ec
    tol = config.energy_guard_tol * abs(Ec_old)
    failure = None
    for halvings in range(config.max_dt_halvings + 1):
        try:
            if config.time_scheme == "explicit_rk2":
                tau, w_new = _heun(state.tau, w, dm, law, c, dt, k1, f, state)
            else:
                tau, w_new = _imex(state.tau, w, dm, law, c, dt, k1, form, state)
            if not np.all(tau > 0.0):
                raise VacuumError("specific volume left (0, inf)", state)
            u = _from_work(tau, w_new, dm, law, c, form)
            new = State(state.grid, state.t + dt, tau, u)
            Ec = energy_report(new, law, c).Ec
            if not math.isfinite(Ec):
                raise StabilityError("non-finite energy", state)
            if Ec - Ec_old <= tol:
                return StepResult(new, dt, halvings, Ec)
            failure = StabilityError(
                f"energy grew from {Ec_old!r} to {Ec!r} at t={state.t!r}", state)
        except NumericalFailure as exc:
            failure = exc
        dt *= 0.5
    if isinstance(failure, VacuumError):
        raise VacuumError(f"vacuum after {config.max_dt_halvings} halvings: {failure}", state)
    raise StabilityError(f"step rejected {config.max_dt_halvings} times: {failure}", state)


def step(state, law, c, dt, config):
    return advance(state, law, c, dt, config).state


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------


@dataclass
class RunRecord:
    config: SolverConfig
    law: object
    c: float
    grid: object
    info: object
    reports: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    window_checks: dict = field(default_factory=dict)
    hypotheses: object = None
    warnings: list = field(default_factory=list)
    steps: int = 0
    halvings: int = 0
    x_origin: float = 0.0
    L: float = 0.0
    domain_too_small: bool = False
    max_far_field_defect: float = 0.0
    status: str = "ok"
    error: Optional[str] = None

    @property
    def final(self):
        return self.snapshots[max(self.snapshots)] if self.snapshots else None

    def series(self, name):
        return np.array([getattr(r, name) for r in self.reports])


def default_L(profile, grid):
    """Eulerian half-width covering the initial perturbation plus two units."""
    lo, hi = profile.support()
    half = max(abs(lo), abs(hi)) if math.isfinite(lo) and math.isfinite(hi) else 0.0
    return min(half + 2.0, 0.5 * (grid.m_max - grid.m_min))


def _profile_center(profile):
    lo, hi = profile.support()
    if math.isfinite(lo) and math.isfinite(hi) and hi > lo:
        return 0.5 * (lo + hi)
    return 0.0


def _output_schedule(config):
    times = sorted({t for t in config.output_times if 0.0 <= t <= config.t_end} | {0.0, config.t_end})
    return times


def run(grid, profile, law, c, config, options=None, theorem=None):
    """Advance from t = 0 to ``config.t_end`` recording diagnostics every step.

    Failures propagate as ``NumericalFailure`` carrying the last valid state
    in ``.state`` and the partial record in ``.record``.
    """
    options = options or DiagnosticOptions()
    roots_of_capillarity(c)
    state, info = init_state(grid, profile, law, c)
    record = RunRecord(config=config, law=law, c=float(c), grid=grid, info=info)
    theorem = theorem or ("theo1" if c > 0 else "theo3")
    try:
        hyp = check_hypotheses(law)
        record.hypotheses = hyp
        if not hyp.applicability.get(theorem, True):
            msg = f"hypotheses for {theorem} not met by this law"
            record.warnings.append(msg)
            log.warning(msg)
    except (DomainError, AttributeError):
        pass

    record.x_origin = centered_origin(state, _profile_center(profile))
    record.L = options.L if options.L is not None else default_L(profile, grid)
    origins = options.window_origins
    if origins is None:
        origins = default_window_origins(grid, options.window_step)
    rho_star = pi_inverse_half(law)
    xi0 = law.xi(state.rho)
    xi_sup = xi0.copy()
    tau_far = (state.tau[0], state.tau[-1])

    form = config.formulation
    f = _rhs_arrays(form)
    dm = grid.dm
    acc = Accumulators()
    hoff = HoffTracker(law, c)
    schedule = _output_schedule(config)
    next_idx = 0
    Ec = info.Ec0
    while True:
        w = _to_work(state, law, c, form)
        k = f(state.tau, w, dm, law, c, state)
        tend = Tendencies(k[0], k[1], "u" if form == "primitive" else "v1")
        checks = ()
        at_output = next_idx < len(schedule) and state.t >= schedule[next_idx]
        if at_output:
            checks, _ = structure_checks(
                state, law, c, info.Ec0, xi0, xi_sup, options.theta_list, origins,
                record.L, record.x_origin, rho_star,
            )
            record.snapshots[state.t] = state
            record.window_checks[state.t] = checks
            defect = max(abs(state.tau[0] - tau_far[0]), abs(state.tau[-1] - tau_far[1]))
            record.max_far_field_defect = max(record.max_far_field_defect, defect)
            if defect > FAR_FIELD_TOL and not record.domain_too_small:
                record.domain_too_small = True
                record.warnings.append("domain too small: far-field cells moved")
            next_idx += 1
        record.reports.append(make_report(
            state, tend, law, c, acc, hoff, record.L, record.x_origin,
            window_checks=checks,
        ))
        if state.t >= config.t_end or next_idx >= len(schedule):
            break
        target = schedule[next_idx]
        dt = stable_dt(state, law, c, config.cfl, target)
        try:
            res = advance(state, law, c, dt, config, k1=k, Ec_old=Ec)
        except NumericalFailure as exc:
            record.status = "vacuum" if isinstance(exc, VacuumError) else "unstable"
            record.error = str(exc)
            exc.state = state
            exc.record = record
            raise
        acc = dissipation_update(acc, state, tend, law, res.dt, c=c)
        hoff.update(state, tend, res.dt)
        new = res.state
        if res.halvings == 0 and dt == target - state.t:
            new = State(grid, target, new.tau, new.u)
        state = new
        Ec = res.Ec
        np.maximum(xi_sup, law.xi(state.rho), out=xi_sup)
        record.steps += 1
        record.halvings += res.halvings
    return record

