"""Standard desk-scale scenarios shared by the studies and the acceptance suite."""

from __future__ import annotations

from .laws import make_law
from .solver import SolverConfig
from .state import InitialProfile, build_grid

SWEEP_C = (0.16, 0.04, 0.01, 0.0025, 0.0)


def gaussian_case(n_cells=1024, c=0.04, t_end=1.0, output_times=(0.25, 0.5, 0.75)):
    """rho = 1 + 0.3 exp(-m^2), u = 0 on [-10, 10]; alpha = 0.4, gamma = 2, a = 1."""
    grid = build_grid(-10.0, 10.0, n_cells)
    profile = InitialProfile("gaussian_bump", {"amplitude": 0.3, "width": 1.0})
    law = make_law(0.4, 2.0)
    form = "effective_v1" if c > 0 else "primitive"
    cfg = SolverConfig(formulation=form, t_end=t_end, output_times=output_times)
    return grid, profile, law, cfg


def jump_case(n_cells=2048, n=20, t_end=0.5, a=0.1):
    """Mollified 2 -> 1 density jump at m = 0 with smooth ramps to the far field.

    The pressure coefficient is small so that the pressure-driven decay of the
    jump amplitude stays slow over ``t_end``.
    """
    grid = build_grid(-10.0, 10.0, n_cells)
    profile = InitialProfile("density_jump", {"rho_left": 2.0, "rho_right": 1.0}, mollification=n)
    law = make_law(0.4, 2.0, a=a)
    times = tuple(round(0.05 * k, 10) for k in range(1, int(round(t_end / 0.05))))
    cfg = SolverConfig(formulation="effective_v1", t_end=t_end, output_times=times)
    return grid, profile, law, cfg
