import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nsk1d.errors import DomainError
from nsk1d.laws import (
    HYPOTHESES,
    GeneralLaw,
    capital_phi_lambda,
    check_hypotheses,
    closed_form_flags,
    eval_derived,
    make_law,
    pi_inverse_half,
    roots_of_capillarity,
)

alphas = st.floats(0.05, 0.95)
gammas = st.floats(1.05, 3.5)


@pytest.mark.parametrize("field,kwargs", [
    ("alpha", dict(alpha=0.0, gamma=2.0)),
    ("alpha", dict(alpha=-1.0, gamma=2.0)),
    ("gamma", dict(alpha=0.4, gamma=1.0)),
    ("a", dict(alpha=0.4, gamma=2.0, a=0.0)),
    ("eta", dict(alpha=0.4, gamma=2.0, eta=1.0)),
])
def test_make_law_names_offending_field(field, kwargs):
    with pytest.raises(DomainError) as info:
        make_law(**kwargs)
    assert info.value.field == field


def test_eval_derived_rejects_nonpositive_density():
    with pytest.raises(DomainError):
        eval_derived(make_law(0.4, 2.0), np.array([1.0, 0.0]))


def test_derived_at_rho_one():
    d = eval_derived(make_law(0.4, 2.0), 1.0)
    assert d.mu == 1.0
    assert d.e == 0.0
    assert d.pi == 0.0
    assert d.psi == pytest.approx(1 / 0.4)


def test_phi_is_log_when_alpha_is_one():
    law = make_law(1.0, 2.0)
    assert law.phi(math.e) == pytest.approx(1.0)


@pytest.mark.parametrize("alpha,gamma", [(0.4, 2.0), (0.3, 1.5), (0.9, 1.1)])
def test_primitives_match_quadrature(alpha, gamma):
    law = make_law(alpha, gamma)
    for rho in (0.01, 0.5, 3.0, 200.0):
        for prim, deriv in ((law.phi, law.dphi), (law.psi, law.dpsi),
                            (law.xi, law.dxi), (law.G, law.dG)):
            ref = quad(deriv, 1.0, rho, epsabs=0, epsrel=1e-12, limit=200)[0]
            assert prim(rho) - prim(1.0) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_capital_phi_lambda():
    law = make_law(0.4, 2.0)
    Phi, Lam = capital_phi_lambda(law, 2.0)
    assert Phi == pytest.approx(-law.phi(0.5))
    assert Lam == pytest.approx(0.5 ** -0.4)


@given(alphas, gammas, st.floats(1e-3, 1e3))
@settings(max_examples=60, deadline=None)
def test_energy_density_is_nonnegative_and_tied_to_pressure(alpha, gamma, rho):
    law = make_law(alpha, gamma, a=1.7)
    e = law.e(rho)
    assert e >= -1e-12 * max(1.0, rho ** (gamma - 1))
    # rho^2 e'(rho) = p(rho) - p(1)
    h = 1e-6 * rho
    de = (law.e(rho + h) - law.e(rho - h)) / (2 * h)
    assert rho * rho * de == pytest.approx(law.pressure(rho) - law.pressure(1.0), rel=1e-5, abs=1e-7)


@given(st.floats(0.0, 0.25))
def test_roots_identities(c):
    r0, r1 = roots_of_capillarity(c)
    assert abs(r0 + r1 - 1.0) <= 1e-14
    assert abs(r0 * r1 - c) <= 1e-14
    assert 0.0 <= r0 <= 0.5 <= r1 <= 1.0


def test_roots_endpoints():
    assert roots_of_capillarity(0.0) == (0.0, 1.0)
    assert roots_of_capillarity(0.25) == (0.5, 0.5)


@pytest.mark.parametrize("c", [-1e-9, 0.2500001, math.nan])
def test_roots_out_of_range(c):
    with pytest.raises(DomainError, match=r"\[0, 0.25\]"):
        roots_of_capillarity(c)


def test_pi_inverse_half_gamma_two():
    assert pi_inverse_half(make_law(0.4, 2.0)) == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-12)


@given(gammas)
@settings(max_examples=25, deadline=None)
def test_pi_inverse_half_is_a_root(gamma):
    law = make_law(0.4, gamma)
    r = pi_inverse_half(law)
    assert 0.0 < r < 1.0
    assert law.pi(r) == pytest.approx(0.5, abs=1e-10)


def test_pi_inverse_half_trivial_for_weak_pressure():
    # pi stays below 1/2 on (0, 1] when a <= 1/2
    assert pi_inverse_half(make_law(0.4, 2.0, a=0.3)) == 0.0


def test_documented_flag_examples():
    assert all(check_hypotheses(make_law(0.4, 1.8)).flags.values())
    for (alpha, gamma), failing in {
        (0.6, 2.0): {"h7"},
        (0.7, 2.0): {"h6", "h7"},
        (0.4, 1.2): {"h5"},
    }.items():
        rep = check_hypotheses(make_law(alpha, gamma))
        assert {h for h in HYPOTHESES if not rep.flags[h]} == failing
        assert rep.agree
    assert check_hypotheses(make_law(0.4, 1.2)).applicability["theo3"]


@given(alphas, gammas)
@settings(max_examples=30, deadline=None)
def test_sampling_agrees_with_closed_form(alpha, gamma):
    rep = check_hypotheses(make_law(alpha, gamma))
    assert rep.sampled_flags == closed_form_flags(alpha, gamma)


def test_general_law_goes_through_sampling():
    rep = check_hypotheses(GeneralLaw(mu=lambda r: r ** 0.4, gamma=2.0))
    assert not rep.closed_form
    assert all(rep.flags.values())
    rep = check_hypotheses(GeneralLaw(mu=lambda r: r ** 0.6, gamma=2.0))
    assert not rep.flags["h7"] and rep.flags["h6"]


def test_report_json_is_plain():
    import json

    doc = check_hypotheses(make_law(0.4, 2.0)).to_json()
    json.dumps(doc)
    assert doc["agree"] is True
