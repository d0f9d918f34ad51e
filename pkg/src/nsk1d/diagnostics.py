"""Monitored functionals: energy, BD entropies, dissipation, bounds, Hoff quantities.

Everything is evaluated in mass-Lagrangian variables on the staggered grid.
Cell sums use weight ``dm``; node sums use the trapezoid weights, which agree
with plain ``dm`` weights because the boundary nodes carry zero velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .laws import roots_of_capillarity
from .state import cell_diff, node_diff, to_eulerian

__all__ = [
    "EnergyReport",
    "BDReport",
    "Accumulators",
    "HoffTracker",
    "WindowCheck",
    "DiagnosticReport",
    "DiagnosticOptions",
    "energy_report",
    "bd_entropy_report",
    "velocity_rates",
    "dissipation_update",
    "hoff_report",
    "structure_checks",
    "window_bounds",
    "interface_width",
    "SERIES_COLUMNS",
]


def sigma(t):
    return min(1.0, t)


class EnergyReport(NamedTuple):
    Ec: float
    kinetic: float
    potential: float
    capillary: float


def _node_sum(values, dm):
    return float(dm * (np.sum(values[1:-1]) + 0.5 * (values[0] + values[-1])))


def energy_report(state, law, c):
    dm = state.grid.dm
    rho = state.rho
    kinetic = _node_sum(0.5 * state.u**2, dm)
    potential = float(np.sum(law.e(rho)) * dm)
    if c > 0.0:
        grad = node_diff(law.psi(rho), dm)
        capillary = 0.5 * c * _node_sum(grad**2, dm)
    else:
        capillary = 0.0
    return EnergyReport(kinetic + potential + capillary, kinetic, potential, capillary)


class BDReport(NamedTuple):
    bd0: float
    bd1: float


def bd_entropy_report(state, law, c):
    dm = state.grid.dm
    r0, r1 = roots_of_capillarity(c)
    grad = node_diff(law.psi(state.rho), dm)
    potential = float(np.sum(law.e(state.rho)) * dm)
    v0 = state.u + r0 * grad
    v1 = state.u + r1 * grad
    return BDReport(
        _node_sum(0.5 * v0**2, dm) + potential,
        _node_sum(0.5 * v1**2, dm) + potential,
    )


class Rates(NamedTuple):
    du: np.ndarray
    dv0: np.ndarray
    dv1: np.ndarray
    dtau: np.ndarray


def velocity_rates(state, tendencies, law, c):
    """Exact semi-discrete time derivatives of ``u``, ``v0``, ``v1`` at nodes.

    Uses ``d_t psi(rho) = -rho mu(rho) d_t tau`` cell by cell.
    """
    r0, r1 = roots_of_capillarity(c)
    rho = state.rho
    dpsi = node_diff(-rho * law.mu(rho) * tendencies.dtau_dt, state.grid.dm)
    if tendencies.variable == "u":
        du = tendencies.dw_dt
    else:
        du = tendencies.dw_dt - r1 * dpsi
    return Rates(du, du + r0 * dpsi, du + r1 * dpsi, tendencies.dtau_dt)


@dataclass(frozen=True)
class Accumulators:
    """Time-integrated dissipation, left-endpoint quadrature."""

    visc_dissip_u: float = 0.0
    visc_dissip_v0: float = 0.0
    visc_dissip_v1: float = 0.0
    pressure_dissip_v: float = 0.0
    pressure_dissip_v1: float = 0.0


def dissipation_rates(state, law, c):
    """Instantaneous dissipation densities integrated over the grid."""
    dm = state.grid.dm
    r0, r1 = roots_of_capillarity(c)
    rho = state.rho
    rm = rho * law.mu(rho)
    dpsi = node_diff(law.psi(rho), dm)
    du = cell_diff(state.u, dm)
    dv0 = cell_diff(state.u + r0 * dpsi, dm)
    dv1 = cell_diff(state.u + r1 * dpsi, dm)
    # discrete counterpart of gamma mu rho^(gamma-2) (d_m rho)^2
    pressure = float(np.sum(node_diff(law.pressure(rho), dm) * dpsi) * dm)
    return (
        float(np.sum(rm * du * du) * dm),
        r1 * float(np.sum(rm * dv0 * dv0) * dm),
        r0 * float(np.sum(rm * dv1 * dv1) * dm),
        r0 * pressure,
        r1 * pressure,
    )


def dissipation_update(acc, state, tendencies, law, dt, *, c):
    """Advance every accumulator by ``dt`` times its rate at ``state``.

    ``tendencies`` is accepted for interface symmetry with the Hoff tracker;
    every rate here depends on the state alone.
    """
    if dt == 0.0:
        return acc
    rates = dissipation_rates(state, law, c)
    return Accumulators(*(old + dt * rate for old, rate in zip(
        (acc.visc_dissip_u, acc.visc_dissip_v0, acc.visc_dissip_v1,
         acc.pressure_dissip_v, acc.pressure_dissip_v1), rates)))


class HoffTracker:
    """Accumulates the sigma-weighted Hoff functionals for ``v0`` along a run."""

    def __init__(self, law, c):
        self.law = law
        self.c = c
        self.r0, _ = roots_of_capillarity(c)
        self.int_sigma_vdot = 0.0
        self.int_sigma2_dvdot = 0.0
        self.int_sigma_dxv0_sq = 0.0
        self._cache = (None, None, None)

    def _pieces(self, state, tendencies):
        # report() and update() are called on the same slice by the run loop
        if self._cache[0] is state and self._cache[1] is tendencies:
            return self._cache[2]
        out = self._compute(state, tendencies)
        self._cache = (state, tendencies, out)
        return out

    def _compute(self, state, tendencies):
        dm = state.grid.dm
        rho = state.rho
        rm = rho * self.law.mu(rho)
        rates = velocity_rates(state, tendencies, self.law, self.c)
        v0 = state.u + self.r0 * node_diff(self.law.psi(rho), dm)
        dv0 = cell_diff(v0, dm)
        vdot_sq = float(np.sum(rates.dv0**2) * dm)
        grad_vdot = cell_diff(rates.dv0, dm)
        return (
            vdot_sq,
            float(np.sum(rm * dv0 * dv0) * dm),
            float(np.sum(rm * grad_vdot * grad_vdot) * dm),
            float(np.max(np.abs(rho * dv0))),
        )

    def update(self, state, tendencies, dt):
        s = sigma(state.t)
        vdot_sq, _, grad_vdot_sq, sup_dx = self._pieces(state, tendencies)
        self.int_sigma_vdot += dt * s * vdot_sq
        self.int_sigma2_dvdot += dt * s * s * grad_vdot_sq
        self.int_sigma_dxv0_sq += dt * s * sup_dx * sup_dx

    def report(self, state, tendencies):
        s = sigma(state.t)
        vdot_sq, visc, _, sup_dx = self._pieces(state, tendencies)
        return {
            "hoffA": self.int_sigma_vdot + 0.5 * (1.0 - self.r0) * s * visc,
            "hoffB": 0.5 * s * s * vdot_sq + (1.0 - self.r0) * self.int_sigma2_dvdot,
            "sup_sigma_dxv0": math.sqrt(s) * sup_dx,
            "int_sigma_dxv0_sq": self.int_sigma_dxv0_sq,
        }


def hoff_report(history, law, c):
    """Hoff quantities at the end of ``history``.

    ``history`` is a sequence of ``(state, tendencies)`` pairs in time order;
    each interval is weighted by the left endpoint.
    """
    tracker = HoffTracker(law, c)
    history = list(history)
    for (s0, t0), (s1, _) in zip(history[:-1], history[1:]):
        tracker.update(s0, t0, s1.t - s0.t)
    last_state, last_tend = history[-1]
    return tracker.report(last_state, last_tend)


# --------------------------------------------------------------------------
# window / structure checks
# --------------------------------------------------------------------------


def window_bounds(gamma, Ec, theta):
    """Closed-form lower/upper bounds on a unit-mass window integral of rho^-theta."""
    lower = 0.5 * (2.0 * (gamma - 1.0) * Ec + gamma) ** (-theta / (gamma - 1.0))
    upper = (Ec + gamma / (gamma - 1.0)) ** (1.0 / theta)
    return lower, upper


@dataclass(frozen=True)
class WindowCheck:
    ell: float
    theta: float
    integral_inv_rho_theta: float
    lower_bound: float
    upper_bound: float
    integral_rho_gamma_minus_1: float
    rho_gamma_minus_1_bound: float
    xi_window_min_sup: float
    xi_bound_rhs: float
    vacuum_point_found: bool
    vacuum_location: Optional[float]

    @property
    def violations(self):
        bad = []
        if not (self.lower_bound <= self.integral_inv_rho_theta <= self.upper_bound):
            bad.append("inv_rho_theta")
        if self.integral_rho_gamma_minus_1 > self.rho_gamma_minus_1_bound:
            bad.append("rho_gamma_minus_1")
        if self.xi_window_min_sup > self.xi_bound_rhs:
            bad.append("xi_window")
        if not self.vacuum_point_found:
            bad.append("vacuum_point")
        return bad


@dataclass(frozen=True)
class DiagnosticOptions:
    theta_list: tuple = (0.5, 1.0)
    window_origins: Optional[tuple] = None
    window_step: float = 0.5
    L: Optional[float] = None


def default_window_origins(grid, step=0.5):
    return tuple(np.arange(grid.m_min, grid.m_max - 1.0 + 1e-12, step))


def _window_integral(grid, cell_values, lo, hi):
    cum = np.concatenate(([0.0], np.cumsum(cell_values) * grid.dm))
    return float(np.interp(hi, grid.nodes, cum) - np.interp(lo, grid.nodes, cum))


def _cells_touching(grid, lo, hi):
    j_lo = int(math.floor((lo - grid.m_min) / grid.dm + 1e-9))
    j_hi = int(math.ceil((hi - grid.m_min) / grid.dm - 1e-9))
    return max(j_lo, 0), min(max(j_hi, j_lo + 1), grid.n_cells)


def tv_phi(view, law, L):
    centers = view.centers
    inside = (centers >= -L) & (centers <= L)
    phi = law.phi(view.rho[inside])
    return float(np.sum(np.abs(np.diff(phi))))


def structure_checks(state, law, c, Ec0, xi0, xi_sup, theta_list, window_origins, L,
                     x_origin=0.0, rho_star=None):
    """Window estimates and pointwise bounds at one time slice.

    ``xi0`` is Xi(rho0) per cell and ``xi_sup`` the running per-cell supremum
    of Xi(rho) up to ``state.t``. Bounds use ``Ec0 / a`` where the closed
    forms assume a unit pressure coefficient.
    """
    from .laws import pi_inverse_half

    grid = state.grid
    rho = state.rho
    g = law.gamma
    E = Ec0 / law.a
    if rho_star is None:
        rho_star = pi_inverse_half(law)
    view = to_eulerian(state, x_origin)
    cum_x = view.x
    checks = []
    inv_rho = {theta: rho ** (-theta) for theta in theta_list}
    rho_gm1 = rho ** (g - 1.0)
    gm1_bound = (g - 1.0) * E + g
    xi_rhs_slope = (g - 1.0) * E + g
    for ell in window_origins:
        lo, hi = float(ell), float(ell) + 1.0
        if lo < grid.m_min - 1e-12 or hi > grid.m_max + 1e-12:
            raise DomainError("window_origins", f"window [{lo}, {hi}] leaves the grid")
        j0, j1 = _cells_touching(grid, lo, hi)
        xi_min_sup = float(np.min(xi_sup[j0:j1]))
        xi_rhs = float(np.max(xi0[j0:j1])) + state.t * xi_rhs_slope + Ec0
        gm1 = _window_integral(grid, rho_gm1, lo, hi)
        # Eulerian window [x(ell), x(ell) + 2 Ec0] for the vacuum-point search
        x_lo = float(np.interp(lo, grid.nodes, cum_x))
        x_hi = x_lo + 2.0 * Ec0
        found, where = False, None
        if x_hi <= cum_x[-1]:
            k0 = max(int(np.searchsorted(cum_x, x_lo, side="right")) - 1, 0)
            k1 = min(max(int(np.searchsorted(cum_x, x_hi, side="left")), k0 + 1), grid.n_cells)
            local = rho[k0:k1]
            k = int(np.argmax(local))
            found = bool(local[k] >= rho_star)
            where = float(0.5 * (cum_x[k0 + k] + cum_x[k0 + k + 1]))
        else:
            found = True  # window sticks out of the domain; not scanned
        for theta in theta_list:
            lower, upper = window_bounds(g, E, theta)
            checks.append(WindowCheck(
                ell=lo,
                theta=float(theta),
                integral_inv_rho_theta=_window_integral(grid, inv_rho[theta], lo, hi),
                lower_bound=lower,
                upper_bound=upper,
                integral_rho_gamma_minus_1=gm1,
                rho_gamma_minus_1_bound=gm1_bound,
                xi_window_min_sup=xi_min_sup,
                xi_bound_rhs=xi_rhs,
                vacuum_point_found=found,
                vacuum_location=where,
            ))
    _, r1 = roots_of_capillarity(c)
    v1 = state.u + r1 * node_diff(law.psi(rho), grid.dm)
    pointwise = {
        "rho_min": float(np.min(rho)),
        "rho_max": float(np.max(rho)),
        "v1_sup": float(np.max(v1)),
        "tv_phi_L": tv_phi(view, law, L),
    }
    return checks, pointwise


# --------------------------------------------------------------------------
# per-step report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticReport:
    t: float
    Ec: float
    kinetic: float
    potential: float
    capillary: float
    bd0: float
    bd1: float
    visc_dissip_u: float
    visc_dissip_v0: float
    visc_dissip_v1: float
    pressure_dissip_v: float
    pressure_dissip_v1: float
    rho_min: float
    rho_max: float
    v1_sup: float
    tv_phi_L: float
    hoffA: float
    hoffB: float
    sup_sigma_dxv0: float
    int_sigma_dxv0_sq: float
    sigma: float
    window_checks: tuple = field(default=(), compare=True)

    def row(self):
        return [getattr(self, name) for name in SERIES_FIELDS]


# CSV header name -> report attribute
SERIES_COLUMNS = {
    "t": "t",
    "Ec": "Ec",
    "kinetic": "kinetic",
    "potential": "potential",
    "capillary": "capillary",
    "bd0": "bd0",
    "bd1": "bd1",
    "visc_u": "visc_dissip_u",
    "visc_v0": "visc_dissip_v0",
    "visc_v1": "visc_dissip_v1",
    "rho_min": "rho_min",
    "rho_max": "rho_max",
    "v1_sup": "v1_sup",
    "tv_phi": "tv_phi_L",
    "hoffA": "hoffA",
    "hoffB": "hoffB",
    "sup_sigma_dxv0": "sup_sigma_dxv0",
}
SERIES_FIELDS = tuple(SERIES_COLUMNS.values())


def make_report(state, tendencies, law, c, acc, hoff, L, x_origin, energy=None, window_checks=()):
    if energy is None:
        energy = energy_report(state, law, c)
    bd = bd_entropy_report(state, law, c)
    rho = state.rho
    _, r1 = roots_of_capillarity(c)
    v1 = state.u + r1 * node_diff(law.psi(rho), state.grid.dm)
    view = to_eulerian(state, x_origin)
    h = hoff.report(state, tendencies)
    return DiagnosticReport(
        t=state.t,
        Ec=energy.Ec,
        kinetic=energy.kinetic,
        potential=energy.potential,
        capillary=energy.capillary,
        bd0=bd.bd0,
        bd1=bd.bd1,
        visc_dissip_u=acc.visc_dissip_u,
        visc_dissip_v0=acc.visc_dissip_v0,
        visc_dissip_v1=acc.visc_dissip_v1,
        pressure_dissip_v=acc.pressure_dissip_v,
        pressure_dissip_v1=acc.pressure_dissip_v1,
        rho_min=float(np.min(rho)),
        rho_max=float(np.max(rho)),
        v1_sup=float(np.max(v1)),
        tv_phi_L=tv_phi(view, law, L),
        hoffA=h["hoffA"],
        hoffB=h["hoffB"],
        sup_sigma_dxv0=h["sup_sigma_dxv0"],
        int_sigma_dxv0_sq=h["int_sigma_dxv0_sq"],
        sigma=sigma(state.t),
        window_checks=tuple(window_checks),
    )


def interface_width(view, lo_level=0.1, hi_level=0.9, search=2.0):
    """10-90 % transition length of the steepest density drop in ``view``.

    Plateau values are the max/min of rho within ``search`` Eulerian units on
    either side of the steepest descent. Returns 0 for a flat profile.
    """
    x = view.centers
    rho = view.rho
    d = np.diff(rho)
    if d.size == 0 or np.min(d) >= 0.0 or np.ptp(rho) < 1e-12:
        return 0.0
    k = int(np.argmin(d))
    xi = 0.5 * (x[k] + x[k + 1])
    left = (x >= xi - search) & (x <= xi)
    right = (x >= xi) & (x <= xi + search)
    hi, lo = float(np.max(rho[left])), float(np.min(rho[right]))
    if hi - lo < 1e-12:
        return 0.0

    def crossing(level):
        target = lo + level * (hi - lo)
        # walk outwards from the steepest point to the first crossing
        if level >= 0.5:
            j = k
            while j > 0 and rho[j] < target:
                j -= 1
            a, b = j, j + 1
        else:
            j = k + 1
            while j < rho.size - 1 and rho[j] > target:
                j += 1
            a, b = j - 1, j
        if rho[a] == rho[b]:
            return x[a]
        return x[a] + (target - rho[a]) * (x[b] - x[a]) / (rho[b] - rho[a])

    return float(crossing(lo_level) - crossing(hi_level))
