import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsk1d.errors import DomainError, VacuumError
from nsk1d.laws import make_law, roots_of_capillarity
from nsk1d.state import (
    InitialProfile,
    State,
    build_grid,
    effective_velocity,
    init_state,
    mollifier_kernel,
    mollify,
    node_diff,
    to_eulerian,
)
from nsk1d.diagnostics import interface_width, energy_report

LAW = make_law(0.4, 2.0)


def test_grid_arithmetic():
    g = build_grid(-10, 10, 100)
    assert g.dm == pytest.approx(0.2)
    g = build_grid(0, 1, 8)
    assert g.nodes.size == 9 and g.centers.size == 8
    assert g.nodes[0] == 0.0 and g.nodes[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(1, 0, 8), (0, 0, 8), (0, 1, 3), (0, 1, 8.5), (0, math.inf, 8)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(DomainError):
        build_grid(*args)


def test_state_shape_is_checked():
    g = build_grid(0, 1, 8)
    with pytest.raises(DomainError):
        State(g, 0.0, np.ones(9), np.zeros(9))


def test_kernel_has_unit_mass_and_support():
    from scipy.integrate import quad

    assert quad(mollifier_kernel, -2, 2, epsabs=0, epsrel=1e-12)[0] == pytest.approx(1.0, abs=1e-12)
    assert mollifier_kernel(np.array([-2.0, 2.0, 3.0])).tolist() == [0.0, 0.0, 0.0]
    y = np.linspace(-2, 2, 1001)
    assert np.all(mollifier_kernel(y) <= 1.0)
    assert np.allclose(mollifier_kernel(y), mollifier_kernel(-y))


def test_mollify_reproduces_constants():
    h = 1e-3
    out = mollify(np.full(500, 2.0), 10, h)
    assert np.all(out == 2.0)


def test_mollify_symmetric_step_midpoint():
    h = 1 / 800
    x = h * np.arange(-800, 801)
    step = np.where(x < 0, 1.0, 2.0)
    step[800] = 1.5
    out = mollify(step, 10, h)
    assert out[800] == pytest.approx(1.5, abs=1e-14)
    prof = InitialProfile("density_jump", {"rho_left": 1.0, "rho_right": 2.0})
    assert prof.density(np.array([0.0]))[0] == 1.5


def test_mollify_rejects_coarse_axis():
    with pytest.raises(DomainError):
        mollify(np.zeros(10), 10, 0.02)


def test_mollify_matches_direct_summation():
    n, h = 10, 1 / 160
    x = h * np.arange(-320, 321)
    f = np.where(x < 0, 1.0, 2.0)
    out = mollify(f, n, h)
    # brute-force convolution with an independently normalised kernel
    half = int(2 / (n * h))
    offs = np.arange(-half, half + 1)
    w = np.array([math.exp(-1 / (1 - (n * k * h / 2) ** 2)) if abs(n * k * h) < 2 else 0.0 for k in offs])
    w /= w.sum()
    ref = np.empty_like(f)
    for i in range(f.size):
        acc = 0.0
        for k, wk in zip(offs, w):
            j = min(max(i - k, 0), f.size - 1)
            acc += wk * f[j]
        ref[i] = acc
    assert np.max(np.abs(out - ref)) <= 1e-10
    # 10-90 % width of the smoothed step is positive and below the support size 4/n
    lo = x[np.argmax(out >= 1.1)]
    hi = x[np.argmax(out >= 1.9)]
    assert 0.01 / n < hi - lo <= 4 / n


@given(st.integers(1, 40), st.lists(st.floats(0.1, 5.0), min_size=30, max_size=80))
@settings(max_examples=40, deadline=None)
def test_mollify_preserves_range(n, values):
    h = 1 / (8 * n)
    v = np.array(values)
    out = mollify(v, n, h)
    assert out.min() >= v.min() - 1e-12 and out.max() <= v.max() + 1e-12


def test_mollify_is_linear():
    rng = np.random.default_rng(3)
    a, b = rng.random(200), rng.random(200)
    h = 1 / 80
    assert np.allclose(mollify(2 * a - 3 * b, 10, h), 2 * mollify(a, 10, h) - 3 * mollify(b, 10, h))


def test_mollified_step_converges_in_l2():
    h = 1 / 1280
    x = h * np.arange(-1280, 1281)
    f = np.where(x < 0, 1.0, 2.0)
    errs = [math.sqrt(np.sum((mollify(f, n, h) - f) ** 2) * h) for n in (10, 20, 40)]
    assert errs[0] > errs[1] > errs[2]


def test_init_constant_state():
    g = build_grid(-5, 5, 64)
    state, info = init_state(g, InitialProfile("constant"), LAW, 0.04)
    assert info.M0 == 0.0 and info.Ec0 == 0.0


def test_init_kinetic_only():
    g = build_grid(-5, 5, 100)
    table = {"m": [-5, -1.0, -1.0, 1.0, 1.0, 5], "rho": [1] * 6, "u": [0, 0, 1, 1, 0, 0]}
    prof = InitialProfile("custom_table", table)
    state, info = init_state(g, prof, LAW, 0.0)
    assert info.Ec0 == pytest.approx(0.5 * np.sum(state.u ** 2) * g.dm)


def test_m0_uniform_over_mollification():
    g = build_grid(-10, 10, 2048)
    m0 = []
    for n in (10, 20, 40):
        prof = InitialProfile("density_jump", {"rho_left": 2.0, "rho_right": 1.0}, mollification=n)
        m0.append(init_state(g, prof, LAW, 0.04)[1].M0)
    assert (max(m0) - min(m0)) / max(m0) < 0.05


def test_m0_matches_fine_axis_oracle():
    # smooth profile: M0 from the grid vs max of u + r1 psi'(rho) rho' on a fine axis
    g = build_grid(-10, 10, 2048)
    prof = InitialProfile("gaussian_bump", {"amplitude": 0.3})
    _, info = init_state(g, prof, LAW, 0.04)
    _, r1 = roots_of_capillarity(0.04)
    m = np.linspace(-10, 10, 200001)
    rho = prof.density(m)
    ref = np.max(r1 * LAW.dpsi(rho) * np.gradient(rho, m))
    assert info.M0 == pytest.approx(ref, rel=1e-4)


def test_jump_sign():
    assert InitialProfile("density_jump", {"rho_left": 2.0, "rho_right": 1.0}).jump_sign(LAW) == -1
    assert InitialProfile("density_jump", {"rho_left": 1.0, "rho_right": 2.0}).jump_sign(LAW) == 1
    assert InitialProfile("gaussian_bump").jump_sign(LAW) == 0


def test_effective_velocity_mode_approaches_direct_for_smooth_data():
    # the two regularisations differ by a commutator of size O(1/n^2)
    g = build_grid(-10, 10, 2048)
    gaps = []
    for n in (10, 20):
        params = {"u_amplitude": 0.2}
        s1, _ = init_state(g, InitialProfile("gaussian_bump", params, n), LAW, 0.04)
        s2, _ = init_state(g, InitialProfile("gaussian_bump", params, n, "effective"), LAW, 0.04)
        gaps.append(np.max(np.abs(s1.u - s2.u)))
    assert gaps[0] < 3e-4
    assert gaps[0] / gaps[1] > 3.0


def test_effective_velocity_examples():
    g = build_grid(-5, 5, 64)
    state = State(g, 0.0, np.full(64, 0.5), np.linspace(0, 1, 65) * 0)
    assert np.array_equal(effective_velocity(state, LAW, 0.7), state.u)
    prof = InitialProfile("gaussian_bump")
    s, _ = init_state(g, prof, LAW, 0.25)
    r0, r1 = roots_of_capillarity(0.25)
    assert np.array_equal(effective_velocity(s, LAW, r0), effective_velocity(s, LAW, r1))
    with pytest.raises(DomainError):
        effective_velocity(s, LAW, 1.5)


def test_effective_velocity_linear_density():
    eps = 0.3
    errs = []
    for n in (200, 400):
        g = build_grid(0, 2, n)
        rho = 1.0 + eps * g.centers
        s = State(g, 0.0, 1 / rho, np.zeros(n + 1))
        v = effective_velocity(s, LAW, 1.0)[1:-1]
        exact = LAW.dpsi(1.0 + eps * g.nodes[1:-1]) * eps
        errs.append(np.max(np.abs(v - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_eulerian_view():
    g = build_grid(-2, 2, 40)
    s = State(g, 0.0, np.ones(40), np.zeros(41))
    v = to_eulerian(s, 3.0)
    assert np.allclose(v.x, 3.0 + g.dm * np.arange(41))
    s2 = State(g, 0.0, np.full(40, 0.5), np.zeros(41))
    assert np.allclose(np.diff(to_eulerian(s2).x), g.dm / 2)


@given(st.lists(st.floats(0.2, 5.0), min_size=8, max_size=60))
@settings(max_examples=50, deadline=None)
def test_eulerian_mass_is_exact(rhos):
    n = len(rhos)
    g = build_grid(0.0, 1.0, n)
    rho = np.array(rhos)
    s = State(g, 0.0, 1 / rho, np.zeros(n + 1))
    v = to_eulerian(s, -1.0)
    assert np.all(np.diff(v.x) > 0)
    assert v.integrate(v.rho) == pytest.approx(1.0, rel=1e-13)
    assert np.allclose(v.rho * np.diff(v.x), g.dm, rtol=1e-13)


def test_eulerian_and_lagrangian_energy_agree():
    g = build_grid(-10, 10, 512)
    s, _ = init_state(g, InitialProfile("gaussian_bump"), LAW, 0.0)
    v = to_eulerian(s)
    eul = v.integrate(v.rho * LAW.e(v.rho))
    assert eul == pytest.approx(energy_report(s, LAW, 0.0).potential, rel=1e-10)


def test_vacuum_in_initial_data():
    g = build_grid(-5, 5, 64)
    with pytest.raises(VacuumError):
        init_state(g, InitialProfile("constant", {"rho": -1.0}), LAW, 0.0)


def test_dxphi_matches_dmpsi():
    # Eulerian d_x phi(rho) equals Lagrangian d_m psi(rho), up to O(dm^2)
    errs = []
    for n in (256, 512):
        g = build_grid(-10, 10, n)
        s, _ = init_state(g, InitialProfile("gaussian_bump"), LAW, 0.0)
        v = to_eulerian(s)
        xc = v.centers
        dxphi = np.diff(LAW.phi(v.rho)) / np.diff(xc)
        dmpsi = node_diff(LAW.psi(s.rho), g.dm)[1:-1]
        errs.append(np.max(np.abs(dxphi - dmpsi)))
    assert errs[0] / errs[1] > 3.0


def test_interface_width_on_flat_profile_is_zero():
    g = build_grid(-5, 5, 64)
    s, _ = init_state(g, InitialProfile("constant"), LAW, 0.0)
    assert interface_width(to_eulerian(s)) == 0.0
