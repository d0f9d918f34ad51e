"""Viscosity and pressure laws, their derived primitives, and the hypothesis checker.

The viscosity is the power law ``mu(rho) = rho**alpha`` and the pressure is
``a * rho**gamma``. The Korteweg coefficient is tied to the viscosity through
``kappa = mu**2 / rho**3`` which makes every capillary quantity expressible in
terms of the primitives ``phi``, ``psi``, ``xi`` and ``G`` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .errors import DomainError

__all__ = [
    "LawBundle",
    "GeneralLaw",
    "Derived",
    "Roots",
    "HypothesisReport",
    "make_law",
    "eval_derived",
    "capital_phi_lambda",
    "roots_of_capillarity",
    "check_hypotheses",
    "pi_inverse_half",
]

HYPOTHESES = ("h1", "h2", "h3", "h4", "h5", "h6", "h7")

# which hypotheses each theorem suite needs
THEOREM_REQUIREMENTS = {
    "theo1": ("h1", "h2", "h3", "h4", "h5", "h6", "h7"),
    "theo2": ("h1", "h2", "h3", "h4", "h5", "h6"),
    "theo3": ("h1", "h2", "h3", "h4", "h6", "h7"),
}


def _power_primitive(rho, p):
    """Primitive of rho**(p-1): rho**p / p, or log(rho) when p == 0."""
    if p == 0.0:
        return np.log(rho)
    return rho**p / p


@dataclass(frozen=True)
class LawBundle:
    """Power-law viscosity ``rho**alpha`` and pressure ``a * rho**gamma``.

    All derived functions accept scalars or arrays of strictly positive
    densities and are vectorised through numpy.
    """

    alpha: float
    gamma: float
    a: float = 1.0
    eta: float = 0.1

    def mu(self, rho):
        return rho**self.alpha

    def pressure(self, rho):
        return self.a * rho**self.gamma

    def sound_speed(self, rho):
        return np.sqrt(self.a * self.gamma * rho ** (self.gamma - 1.0))

    # derivatives of the primitives, straight from their definitions
    def dphi(self, rho):
        return self.mu(rho) / rho**2

    def dpsi(self, rho):
        return self.mu(rho) / rho

    def dxi(self, rho):
        return np.sqrt(rho**self.gamma * self.mu(rho)) / rho**2

    def dG(self, rho):
        return self.mu(rho) / rho**1.5

    # closed-form primitives (no additive constant)
    def phi(self, rho):
        return _power_primitive(rho, self.alpha - 1.0)

    def psi(self, rho):
        return rho**self.alpha / self.alpha

    def xi(self, rho):
        return _power_primitive(rho, 0.5 * (self.gamma + self.alpha) - 1.0)

    def G(self, rho):
        return _power_primitive(rho, self.alpha - 0.5)

    def e(self, rho):
        """Specific potential energy, zero at rho = 1.

        Scaled by ``a`` so that ``rho**2 e'(rho) = p(rho) - p(1)`` holds for
        any pressure coefficient.
        """
        g = self.gamma
        return self.a * (rho**g - 1.0 - g * (rho - 1.0)) / ((g - 1.0) * rho)

    def pi(self, rho):
        g = self.gamma
        return self.a * (rho**g - 1.0 - g * (rho - 1.0)) / (g - 1.0)

    def Phi(self, tau):
        return -self.phi(1.0 / tau)

    def Lambda(self, tau):
        return 1.0 / self.mu(1.0 / tau)


@dataclass(frozen=True)
class GeneralLaw:
    """Arbitrary positive viscosity law, used only by the hypothesis checker."""

    mu: Callable[[np.ndarray], np.ndarray]
    gamma: float
    a: float = 1.0
    eta: float = 0.1


def make_law(alpha, gamma, a=1.0, eta=0.1):
    """Validate exponents and return a :class:`LawBundle`."""
    alpha, gamma, a, eta = float(alpha), float(gamma), float(a), float(eta)
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise DomainError("alpha", f"must be > 0, got {alpha}")
    if not math.isfinite(gamma) or gamma <= 1.0:
        raise DomainError("gamma", f"must be > 1, got {gamma}")
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError("a", f"must be > 0, got {a}")
    if not (0.0 < eta < 1.0):
        raise DomainError("eta", f"must lie in (0, 1), got {eta}")
    return LawBundle(alpha, gamma, a, eta)


class Derived(NamedTuple):
    mu: float
    phi: float
    psi: float
    xi: float
    g: float
    e: float
    pi: float


def _require_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(arr > 0.0):
        raise DomainError(name, "must be > 0")
    return arr if arr.ndim else float(arr)


def eval_derived(law, rho):
    rho = _require_positive("rho", rho)
    return Derived(
        mu=law.mu(rho),
        phi=law.phi(rho),
        psi=law.psi(rho),
        xi=law.xi(rho),
        g=law.G(rho),
        e=law.e(rho),
        pi=law.pi(rho),
    )


def capital_phi_lambda(law, tau):
    """Return ``(Phi(tau), Lambda(tau))`` with ``Phi = -phi(1/tau)``, ``Lambda = 1/mu(1/tau)``."""
    tau = _require_positive("tau", tau)
    return law.Phi(tau), law.Lambda(tau)


class Roots(NamedTuple):
    r0: float
    r1: float


def roots_of_capillarity(c):
    """Roots of ``r**2 - r + c = 0`` for ``0 <= c <= 1/4``.

    ``r1`` uses the cancellation-free branch and ``r0 = c / r1`` so that
    ``r0`` keeps full relative precision for small ``c``.
    """
    c = float(c)
    if not (0.0 <= c <= 0.25):
        raise DomainError("c", f"must lie in [0, 0.25], got {c}")
    r1 = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * c))
    return Roots(c / r1, r1)


def pi_inverse_half(law, tol=1e-14):
    """Smallest density ``rho`` with ``pi(rho) <= 1/2`` on (0, 1], ``pi = rho e``.

    ``pi`` decreases strictly from ``a`` at 0+ to 0 at 1, so for ``a > 1/2``
    this is the root of ``pi = 1/2``. For ``a <= 1/2`` every density
    qualifies and the threshold is 0.
    """
    f = lambda r: float(law.pi(r)) - 0.5
    if law.a <= 0.5:
        return 0.0
    lo = np.nextafter(0.0, 1.0)
    return float(brentq(f, lo, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))


# --------------------------------------------------------------------------
# hypothesis checker
# --------------------------------------------------------------------------


@dataclass
class HypothesisReport:
    flags: dict
    sampled_flags: dict
    constants: dict
    applicability: dict
    closed_form: bool
    sample: dict = field(default_factory=dict)

    @property
    def agree(self):
        return self.flags == self.sampled_flags

    def to_json(self):
        return {
            **{h: self.flags[h] for h in HYPOTHESES},
            "sampled": dict(self.sampled_flags),
            "agree": self.agree,
            "constants": dict(self.constants),
            "applicability": dict(self.applicability),
            "closed_form": self.closed_form,
            "sample": dict(self.sample),
        }


def closed_form_flags(alpha, gamma):
    """Flags for ``mu = rho**alpha`` read off the power-law conditions."""
    return {
        "h1": alpha > 0.0,
        "h2": alpha > 0.0,
        "h3": 0.0 < alpha <= gamma,
        "h4": alpha <= 1.0,
        "h5": alpha + gamma >= 2.0,
        "h6": alpha <= 2.0 / 3.0,
        "h7": alpha < 0.5,
    }


def _applicability(flags):
    return {
        name: all(flags[h] for h in req) for name, req in THEOREM_REQUIREMENTS.items()
    }


def _end_slopes(rho, f):
    """Log-log slopes of ``f`` over the first and last decade of the sample."""
    lr = np.log(rho)
    lf = np.log(np.abs(f))
    k = np.searchsorted(lr, lr[0] + math.log(10.0))
    j = np.searchsorted(lr, lr[-1] - math.log(10.0))
    low = (lf[k] - lf[0]) / (lr[k] - lr[0])
    high = (lf[-1] - lf[j]) / (lr[-1] - lr[j])
    return low, high


def _cumtrapz_log(s, g):
    """Cumulative trapezoid of g over the log variable s."""
    return cumulative_trapezoid(g, s, initial=0.0)


SLOPE_TOL = 1e-4


def sample_flags(mu, gamma, eta, rho_min=1e-6, rho_max=1e6, n=10_000):
    """Decide every hypothesis from samples of ``mu`` alone.

    Primitives are built by trapezoid quadrature in ``log(rho)``, with power-law
    tail extrapolation beyond the sampled range, and the limits at 0 and
    infinity are judged from log-log slopes over the outermost decades.
    Returns ``(flags, info)``.
    """
    s = np.linspace(math.log(rho_min), math.log(rho_max), n)
    rho = np.exp(s)
    flags = dict.fromkeys(HYPOTHESES, False)
    info = {"rho_min": rho_min, "rho_max": rho_max, "n": n}
    _sample_into(np.asarray(mu(rho), dtype=float), gamma, s, rho, flags, info)
    return {k: bool(v) for k, v in flags.items()}, {k: float(v) for k, v in info.items()}


def _sample_into(m, gamma, s, rho, flags, info):
    if not np.all(np.isfinite(m)) or np.any(m <= 0.0):
        return
    mu_low, mu_high = _end_slopes(rho, m)
    info.update(mu_slope_low=mu_low, mu_slope_high=mu_high)

    flags["h1"] = mu_high > SLOPE_TOL

    # psi = int_0^rho mu/s ds; the tail below rho_min needs mu_low > 0
    if mu_low > SLOPE_TOL:
        psi = m[0] / mu_low + _cumtrapz_log(s, m)
        psi_low, psi_high = _end_slopes(rho, psi)
        flags["h2"] = abs(psi_low - mu_low) <= SLOPE_TOL and abs(psi_high - mu_high) <= SLOPE_TOL

    flags["h3"] = mu_high - gamma <= SLOPE_TOL and mu_low >= -SLOPE_TOL

    dphi_log = m / rho  # (mu / rho**2) * rho, integrand of phi in log variable
    invertible = bool(np.all(dphi_log > 0.0))
    flags["h4"] = invertible and (mu_low - 1.0) <= SLOPE_TOL

    xi_log = np.sqrt(rho**gamma * m) / rho
    _, xi_high = _end_slopes(rho, xi_log)
    flags["h5"] = xi_high >= -SLOPE_TOL

    # phi normalised by phi(+inf) = 0 requires the upper tail to converge
    if mu_high - 1.0 < -SLOPE_TOL:
        tail = dphi_log[-1] / (1.0 - mu_high)
        upper = np.concatenate((np.cumsum((0.5 * (dphi_log[1:] + dphi_log[:-1]) * np.diff(s))[::-1])[::-1], [0.0]))
        phi = -(upper + tail)
        Phi = -phi  # as a function of tau = 1/rho, Phi(tau) = -phi(rho)
        # tau -> infinity corresponds to the low-density end of the sample
        phi_slope_low, _ = _end_slopes(rho, Phi)
        lam_slope_low, _ = _end_slopes(rho, 1.0 / m)
        # slopes with respect to log(tau) = -log(rho)
        s_Phi, s_Lam = -phi_slope_low, -lam_slope_low
        info.update(Phi_tau_slope=s_Phi, Lambda_tau_slope=s_Lam)
        flags["h6"] = s_Lam - 2.0 * max(s_Phi, 0.0) <= SLOPE_TOL
        flags["h7"] = s_Phi - 0.5 > SLOPE_TOL
        info["eta_sup"] = max(0.0, 1.0 - 0.5 / s_Phi) if s_Phi > 0 else 0.0


def _measured_constants(law, n=10_000):
    rho = np.logspace(-6, 6, n)
    tau = 1.0 / rho
    mu, psi = law.mu(rho), law.psi(rho)
    Phi, Lam = law.Phi(tau), law.Lambda(tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        return {
            "d1": float(max(np.max(psi / mu), np.max(mu / psi))),
            "d2": float(np.max(mu / (1.0 + rho**law.gamma))),
            "d4": float(np.max(Lam / (1.0 + Phi) ** 2)),
            "d5": float(np.max(np.sqrt(tau) / np.abs(1.0 + Phi) ** (1.0 - law.eta))),
        }


def check_hypotheses(law):
    """Evaluate the viscosity hypotheses for ``law``.

    For a :class:`LawBundle` the reported flags are the closed-form power-law
    conditions and ``sampled_flags`` is the independent sampling verdict; for a
    :class:`GeneralLaw` only the sampling verdict exists.
    """
    sampled, info = sample_flags(law.mu, law.gamma, law.eta)
    if isinstance(law, LawBundle):
        flags = closed_form_flags(law.alpha, law.gamma)
        constants = _measured_constants(law)
        closed = True
    else:
        flags = dict(sampled)
        constants = {}
        closed = False
    return HypothesisReport(
        flags=flags,
        sampled_flags=sampled,
        constants=constants,
        applicability=_applicability(flags),
        closed_form=closed,
        sample=info,
    )
