"""Staggered mass grid, state container, initial data and coordinate transforms.

Specific volume ``tau = 1/rho`` lives at the ``n_cells`` cell centres, the
velocity at the ``n_cells + 1`` nodes. The outermost nodes carry the far-field
velocity 0 and the outermost cells the far-field specific volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, VacuumError
from .laws import roots_of_capillarity

__all__ = [
    "MassGrid",
    "State",
    "InitialProfile",
    "EulerianView",
    "InitInfo",
    "build_grid",
    "mollifier_kernel",
    "mollify",
    "init_state",
    "effective_velocity",
    "to_eulerian",
    "node_diff",
    "cell_diff",
    "smooth_step",
]

PROFILE_KINDS = ("constant", "gaussian_bump", "density_jump", "custom_table")

# far-field tolerance used to flag a domain that is too small
FAR_FIELD_TOL = 1e-8


@dataclass(frozen=True)
class MassGrid:
    m_min: float
    m_max: float
    n_cells: int

    @property
    def dm(self):
        return (self.m_max - self.m_min) / self.n_cells

    @property
    def nodes(self):
        return self.m_min + self.dm * np.arange(self.n_cells + 1)

    @property
    def centers(self):
        return self.m_min + self.dm * (np.arange(self.n_cells) + 0.5)

    def refined(self, factor=2):
        return MassGrid(self.m_min, self.m_max, self.n_cells * factor)


def build_grid(m_min, m_max, n_cells):
    m_min, m_max = float(m_min), float(m_max)
    if not (math.isfinite(m_min) and math.isfinite(m_max)) or m_max <= m_min:
        raise DomainError("m_max", f"must exceed m_min ({m_min}), got {m_max}")
    if int(n_cells) != n_cells or n_cells < 8:
        raise DomainError("n_cells", f"must be an integer >= 8, got {n_cells}")
    return MassGrid(m_min, m_max, int(n_cells))


def node_diff(cell, dm):
    """Centred difference of a cell field, landing on nodes; zero at both ends."""
    out = np.zeros(cell.size + 1)
    out[1:-1] = (cell[1:] - cell[:-1]) / dm
    return out


def cell_diff(node, dm):
    """Centred difference of a node field, landing on cells."""
    return (node[1:] - node[:-1]) / dm


@dataclass(frozen=True)
class State:
    grid: MassGrid
    t: float
    tau: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.tau.shape != (self.grid.n_cells,) or self.u.shape != (self.grid.n_cells + 1,):
            raise DomainError("state", "tau must live on cells and u on nodes")

    @property
    def rho(self):
        return 1.0 / self.tau

    def with_fields(self, t, tau, u):
        return replace(self, t=t, tau=tau, u=u)

    def far_field_defect(self, tau_far=1.0):
        """Largest deviation of boundary cells/nodes from the far-field values."""
        return max(
            abs(self.tau[0] - tau_far),
            abs(self.tau[-1] - tau_far),
            abs(self.u[0]),
            abs(self.u[-1]),
        )


def check_no_vacuum(tau, state=None):
    if not np.all(np.isfinite(tau)) or np.min(tau) <= 0.0:
        raise VacuumError("specific volume left (0, inf)", state)


# --------------------------------------------------------------------------
# mollification
# --------------------------------------------------------------------------


def _bump(y):
    out = np.zeros_like(y, dtype=float)
    inside = np.abs(y) < 2.0
    z = y[inside] / 2.0
    out[inside] = np.exp(-1.0 / (1.0 - z * z))
    return out


_BUMP_MASS = None


def mollifier_kernel(y):
    """Unit-mass smooth bump supported in [-2, 2] with values in [0, 1]."""
    global _BUMP_MASS
    if _BUMP_MASS is None:
        from scipy.integrate import quad

        _BUMP_MASS = quad(lambda s: math.exp(-1.0 / (1.0 - (s / 2.0) ** 2)), -2.0, 2.0, epsabs=0, epsrel=1e-13)[0]
    return _bump(np.asarray(y, dtype=float)) / _BUMP_MASS


def mollify(values, n, h):
    """Convolve samples on a uniform axis of spacing ``h`` with ``j_n(y) = n j(n y)``.

    The discrete kernel is renormalised to unit mass so constants are
    reproduced exactly; values beyond the axis ends are taken equal to the
    end values (far field).
    """
    if n < 1:
        raise DomainError("n", f"must be >= 1, got {n}")
    if h * n * 8.0 > 1.0 + 1e-12:
        raise DomainError("n", f"axis spacing {h} is coarser than 1/(8n) = {1.0 / (8 * n)}")
    values = np.asarray(values, dtype=float)
    half = int(math.floor(2.0 / (n * h)))
    y = h * np.arange(-half, half + 1)
    w = n * mollifier_kernel(n * y)
    w /= w.sum()
    padded = np.concatenate((np.full(half, values[0]), values, np.full(half, values[-1])))
    return np.convolve(padded, w, mode="valid")


# --------------------------------------------------------------------------
# initial profiles
# --------------------------------------------------------------------------


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    f = lambda s: np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
    a, b = f(x), f(1.0 - x)
    return a / (a + b)


@dataclass(frozen=True)
class InitialProfile:
    """Initial density/velocity as functions of the mass coordinate.

    ``params`` keys by kind:

    * ``constant``: ``rho`` (1.0), ``u`` (0.0)
    * ``gaussian_bump``: ``amplitude`` (0.3), ``width`` (1.0), ``center`` (0.0),
      ``u_amplitude`` (0.0), ``u_width`` (1.0)
    * ``density_jump``: ``rho_left`` (2.0), ``rho_right`` (1.0),
      ``jump_location`` (0.0), ``plateau_width`` (2.0), ``ramp_width`` (1.5),
      ``u_amplitude`` (0.0), ``u_width`` (1.0). Far field 1 is reached through
      smooth ramps; the only discontinuity sits at ``jump_location``.
    * ``custom_table``: ``m``, ``rho``, ``u`` lists, linearly interpolated.

    ``mollification`` is the index ``n`` of ``j_n``; ``velocity_mode`` selects
    how the velocity is regularised: ``"direct"`` mollifies ``u0`` itself,
    ``"effective"`` mollifies ``u0 + r1 d_m psi(rho0)`` (jump included as a
    point mass) and recovers ``u0`` from it.
    """

    kind: str = "constant"
    params: dict = field(default_factory=dict)
    mollification: Optional[int] = None
    velocity_mode: str = "direct"

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError("kind", f"unknown profile kind {self.kind!r}")
        if self.velocity_mode not in ("direct", "effective"):
            raise DomainError("velocity_mode", f"unknown mode {self.velocity_mode!r}")
        if self.mollification is not None and int(self.mollification) < 1:
            raise DomainError("mollification", "must be a positive integer")

    def p(self, key, default):
        return float(self.params.get(key, default))

    def density(self, m):
        m = np.asarray(m, dtype=float)
        if self.kind == "constant":
            return np.full_like(m, self.p("rho", 1.0))
        if self.kind == "gaussian_bump":
            z = (m - self.p("center", 0.0)) / self.p("width", 1.0)
            return 1.0 + self.p("amplitude", 0.3) * np.exp(-z * z)
        if self.kind == "density_jump":
            rl, rr = self.p("rho_left", 2.0), self.p("rho_right", 1.0)
            m0 = self.p("jump_location", 0.0)
            plateau, ramp = self.p("plateau_width", 2.0), self.p("ramp_width", 1.5)
            left = 1.0 + (rl - 1.0) * smooth_step((m - (m0 - plateau - ramp)) / ramp)
            right = 1.0 + (rr - 1.0) * (1.0 - smooth_step((m - (m0 + plateau)) / ramp))
            # the jump point itself takes the mean of the one-sided values
            return np.where(m < m0, left, np.where(m > m0, right, 0.5 * (left + right)))
        table = self.params
        return np.interp(m, table["m"], table["rho"])

    def velocity(self, m):
        m = np.asarray(m, dtype=float)
        if self.kind == "constant":
            return np.full_like(m, self.p("u", 0.0))
        if self.kind == "custom_table":
            return np.interp(m, self.params["m"], self.params.get("u", np.zeros(len(self.params["m"]))))
        amp = self.p("u_amplitude", 0.0)
        if amp == 0.0:
            return np.zeros_like(m)
        center = self.p("center", self.p("jump_location", 0.0))
        z = (m - center) / self.p("u_width", 1.0)
        return amp * np.exp(-z * z)

    def jump_sign(self, law):
        """Sign of ``phi(rho_right) - phi(rho_left)`` across the jump (0 if none)."""
        if self.kind != "density_jump":
            return 0
        d = law.phi(self.p("rho_right", 1.0)) - law.phi(self.p("rho_left", 2.0))
        return int(np.sign(d))

    def support(self, tol=1e-12):
        """Mass interval where the profile departs from the far field."""
        if self.kind == "constant":
            return math.nan, math.nan
        if self.kind == "gaussian_bump":
            w = self.p("width", 1.0) * math.sqrt(-math.log(tol))
            wu = self.p("u_width", 1.0) * math.sqrt(-math.log(tol)) if self.p("u_amplitude", 0.0) else 0.0
            c = self.p("center", 0.0)
            w = max(w, wu)
            return c - w, c + w
        if self.kind == "density_jump":
            m0 = self.p("jump_location", 0.0)
            plateau, ramp = self.p("plateau_width", 2.0), self.p("ramp_width", 1.5)
            lo, hi = m0 - plateau - ramp, m0 + (plateau + ramp if self.p("rho_right", 1.0) != 1.0 else 0.0)
            if self.p("u_amplitude", 0.0):
                wu = self.p("u_width", 1.0) * math.sqrt(-math.log(tol))
                lo, hi = min(lo, m0 - wu), max(hi, m0 + wu)
            if self.mollification:
                lo, hi = lo - 2.0 / self.mollification, hi + 2.0 / self.mollification
            return lo, hi
        m = np.asarray(self.params["m"], dtype=float)
        return float(m[0]), float(m[-1])


class InitInfo(NamedTuple):
    M0: float
    Ec0: float


def _fine_axis(grid, n):
    """Fine axis containing every node and cell centre, spacing <= 1/(8n)."""
    q = max(1, int(math.ceil(grid.dm * 8.0 * n / 2.0)))
    h = grid.dm / (2 * q)
    axis = grid.m_min + h * np.arange(2 * q * grid.n_cells + 1)
    return axis, h, q


def initial_fields(grid, profile, law, c):
    """Cell densities and node velocities of the (possibly mollified) profile."""
    n = profile.mollification
    if not n:
        return profile.density(grid.centers), profile.velocity(grid.nodes)
    axis, h, q = _fine_axis(grid, n)
    rho_fine = mollify(profile.density(axis), n, h)
    rho = rho_fine[q::2 * q]
    if profile.velocity_mode == "direct":
        u = mollify(profile.velocity(axis), n, h)[:: 2 * q]
        return rho, u
    # regularise v1 = u0 + r1 d_m psi(rho0); the jump contributes a point mass
    _, r1 = roots_of_capillarity(c)
    rho_raw = profile.density(axis)
    psi = law.psi(rho_raw)
    grad = np.zeros_like(axis)
    grad[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * h)
    if profile.kind == "density_jump":
        # replace the centred difference straddling the jump by an exact point mass
        m0 = profile.p("jump_location", 0.0)
        k = int(np.argmin(np.abs(axis - m0)))
        grad[max(k - 1, 0):k + 2] = 0.0
        lo = law.psi(profile.p("rho_left", 2.0))
        hi = law.psi(profile.p("rho_right", 1.0))
        grad[k] = (hi - lo) / h
    v1 = mollify(profile.velocity(axis) + r1 * grad, n, h)[:: 2 * q]
    u = v1 - r1 * node_diff(law.psi(rho), grid.dm)
    u[0] = u[-1] = 0.0
    return rho, u


def init_state(grid, profile, law, c):
    """Build the t = 0 state and return it with ``InitInfo(M0, Ec0)``."""
    from .diagnostics import energy_report

    rho, u = initial_fields(grid, profile, law, c)
    if not np.all(np.isfinite(rho)) or np.min(rho) <= 0.0:
        raise VacuumError("initial density must be strictly positive")
    u = np.array(u, dtype=float)
    u[0] = u[-1] = 0.0
    state = State(grid, 0.0, 1.0 / rho, u)
    _, r1 = roots_of_capillarity(c)
    v1 = effective_velocity(state, law, r1)
    return state, InitInfo(M0=float(np.max(v1)), Ec0=energy_report(state, law, c).Ec)


def effective_velocity(state, law, r):
    """``u + r d_m psi(rho)`` on nodes."""
    if not (0.0 <= r <= 1.0):
        raise DomainError("r", f"must lie in [0, 1], got {r}")
    return state.u + r * node_diff(law.psi(state.rho), state.grid.dm)


@dataclass(frozen=True)
class EulerianView:
    x: np.ndarray
    rho: np.ndarray
    u: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.x[1:] + self.x[:-1])

    def integrate(self, f_cells):
        """Integral over x of a piecewise-constant cell field."""
        return float(np.sum(f_cells * np.diff(self.x)))


def to_eulerian(state, x_origin=0.0):
    dx = state.tau * state.grid.dm
    x = np.empty(state.grid.n_cells + 1)
    x[0] = x_origin
    np.cumsum(dx, out=x[1:])
    x[1:] += x_origin
    return EulerianView(x=x, rho=state.rho, u=state.u)


def centered_origin(state, m_center=0.0):
    """Eulerian origin placing the node nearest ``m_center`` at x = 0."""
    j = int(np.clip(round((m_center - state.grid.m_min) / state.grid.dm), 0, state.grid.n_cells))
    return -float(np.sum(state.tau[:j]) * state.grid.dm)
