import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjblab.candidates import (
    AffineLine,
    ClairautGeneral,
    GridFn,
    MinOf,
    Prop1Family,
    Prop2Singular,
    chord_violation,
    deriv_candidate,
    divergence_check,
    eval_candidate,
    min_combine,
    parse_candidate,
    prop1_min_A,
    solve_hjb_from_steady_state,
)
from hjblab.errors import ConditionFailed, DomainError, KinkDerivativeError, NotIsolated, ParseError
from hjblab.hamiltonian import residual_profile
from hjblab.model import prop1_model, prop2_model, theorem2_model

from oracles import central_diff, prop1_min_A_by_grid, richardson_diff

ANALYTIC = [Prop1Family(2.0, 1.0), Prop1Family(1.5, 0.5), ClairautGeneral(3.0), ClairautGeneral(1.25),
            Prop2Singular(), AffineLine(2.0, 0.5)]


def test_eval_examples():
    v = Prop1Family(2.0, 1.0)
    assert eval_candidate(v, 1.0) == 2.0 and deriv_candidate(v, 1.0) == 2.0
    assert v.value(0.25) == pytest.approx(2 / math.e, abs=1e-12)
    assert v.value(0.25) == pytest.approx(0.73576, abs=1e-5)
    assert v.deriv(0.25) == pytest.approx(1.47151, abs=1e-5)
    assert central_diff(v.value, 0.25) == pytest.approx(v.deriv(0.25), abs=1e-8)
    assert ClairautGeneral(3.0).value(2.0) == 6.125


def test_domain_errors():
    with pytest.raises(DomainError):
        ClairautGeneral(1.0)
    with pytest.raises(DomainError):
        Prop2Singular().value(-1.0)


@given(st.sampled_from(ANALYTIC), st.floats(0.05, 20.0))
def test_derivative_consistency(cand, k):
    h = 1e-3 * min(k, 1.0)
    assert richardson_diff(cand.value, k, h) == pytest.approx(cand.deriv(k), abs=1e-6, rel=1e-7)


@given(st.floats(0.5, 5.0), st.floats(0.1, 3.0), st.floats(1e-4, 1e4))
def test_prop1_ode_identity(A, rho, k):
    v = Prop1Family(A, rho)
    val = v.value(k)
    if not math.isfinite(val) or val > 1e200:
        return
    assert math.sqrt(k) * v.deriv(k) - rho * val == pytest.approx(0.0, abs=1e-12 * max(1.0, val))


@given(st.fractions(min_value=Fraction(101, 100), max_value=Fraction(50)),
       st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(1000)))
def test_clairaut_identity_exact(A, k):
    c = ClairautGeneral(A)
    V, dV = c.value(k), c.deriv(k)
    assert isinstance(V, Fraction)
    assert k * dV + Fraction(1) / (4 * (dV - 1)) - V == 0


def test_prop1_min_A_against_grid_oracle():
    assert prop1_min_A(1.0) == pytest.approx(math.e / 2, abs=1e-12)
    assert prop1_min_A(1.0) == pytest.approx(prop1_min_A_by_grid(1.0), abs=1e-3)
    assert prop1_min_A(0.5) == pytest.approx(2.0, abs=1e-12)
    assert prop1_min_A(0.5) == pytest.approx(prop1_min_A_by_grid(0.5), abs=1e-3)


@pytest.mark.parametrize("rho", [0.3, 1.0, 2.0])
def test_prop1_min_A_sanity(rho):
    a = prop1_min_A(rho) * 1.01
    k = np.geomspace(1e-6, 1e3, 20001)
    v = Prop1Family(a, rho)
    assert min(v.deriv(x) for x in k) > 1.0
    below = Prop1Family(prop1_min_A(rho) * 0.99, rho)
    assert min(below.deriv(x) for x in k) < 1.0


def test_divergence_check_examples():
    v = Prop1Family(2.0, 1.0)
    # V'(k) = 2 e^{2 sqrt k - 2} / sqrt k is only about 271 at k = 1e-6; the blow-up past 1e3
    # needs k below roughly 7.3e-8
    assert v.deriv(1e-6) == pytest.approx(2 * math.exp(2e-3 - 2) / 1e-3, rel=1e-12)
    assert v.deriv(1e-6) == pytest.approx(271.2124, abs=1e-3)
    assert v.deriv(1e-8) > 1e3
    assert v.deriv(1e6) > 1e3
    assert chord_violation(v, 0.1, 1.0, 9.0) > 0
    rep = divergence_check(v)
    assert rep.passed
    for m, (delta, big_k) in rep.witnesses.items():
        assert v.deriv(0.5 * delta) > m and v.deriv(2 * big_k) > m


def test_divergence_check_rejects_other_forms():
    with pytest.raises(DomainError):
        divergence_check(Prop2Singular())


# --- min combinations ---

def test_min_combine_two_lines():
    m = min_combine(ClairautGeneral(2.0), ClairautGeneral(1.25))
    assert isinstance(m, MinOf)
    assert m.kinks == pytest.approx([1.0], abs=1e-12)
    assert m.value(1.0) == pytest.approx(2.25)
    assert m.one_sided(1.0) == (1.25, 2.0)
    assert m.one_sided(2.0) == (1.25, 1.25)
    with pytest.raises(KinkDerivativeError):
        m.deriv(1.0)
    assert m.deriv(0.5) == 2.0


def test_min_combine_idempotent_and_ordered():
    v = Prop2Singular()
    m = min_combine(v, v)
    for k in (0.1, 1.0, 5.0):
        assert m.value(k) == v.value(k)
    a, b = Prop1Family(1.5, 1.0), Prop1Family(3.0, 1.0)
    m = min_combine(a, b)
    assert list(m.kinks) == []
    for k in np.geomspace(0.01, 50, 30):
        assert m.value(k) == a.value(k)


# --- grid functions ---

def test_gridfn_kinds_and_domain(tmp_path):
    k = np.linspace(0.5, 2.0, 16)
    v = k + np.sqrt(k)
    for kind in ("pchip", "linear"):
        g = GridFn(k, v, kind=kind)
        assert g.value(1.0) == pytest.approx(2.0, abs=5e-3)
        with pytest.raises(DomainError):
            g.value(3.0)
    g = GridFn(k, v, 1 + 0.5 / np.sqrt(k))
    assert g.kind == "hermite"
    path = tmp_path / "g.csv"
    g.to_csv(path)
    back = GridFn.from_csv(path)
    assert back.value(1.3) == pytest.approx(g.value(1.3), abs=1e-14)
    lin = GridFn(k, v, kind="linear")
    dp, dm = lin.one_sided(k[3])
    assert dp < dm
    with pytest.raises(KinkDerivativeError):
        lin.deriv(k[3])


def test_gridfn_rejects_bad_knots():
    with pytest.raises(DomainError):
        GridFn([1.0, 0.5], [1.0, 2.0])


# --- steady-state anchored solve ---

def test_solve_theorem2(t2_solution):
    g = t2_solution
    assert g.value(0.25) == pytest.approx(math.sqrt(2), abs=1e-6)
    assert g.deriv(0.25) == pytest.approx(math.sqrt(2), abs=1e-6)
    assert g.info["k_star"] == pytest.approx(0.25, abs=1e-10)
    assert g.info["knot_residual_sup"] < 1e-6
    prof = residual_profile(theorem2_model(), g, np.geomspace(0.1, 2.0, 300))
    assert prof.sup_norm_finite < 1e-6 and prof.count_infinite == 0


def test_solve_theorem2_concave_increasing(t2_solution):
    k, v = t2_solution.knots, t2_solution.values
    assert np.all(np.diff(v) > 0)
    s = np.diff(v) / np.diff(k)
    assert np.all(np.diff(s) <= 1e-9)


def test_solve_prop2_not_isolated():
    with pytest.raises(ConditionFailed) as info:
        solve_hjb_from_steady_state(prop2_model(), (0.1, 2.0))
    assert isinstance(info.value, NotIsolated)


def test_solve_prop1_fails_audit():
    with pytest.raises(ConditionFailed):
        solve_hjb_from_steady_state(prop1_model(), (0.1, 2.0))


def test_shooting_strategy_agrees(t2_solution):
    g = solve_hjb_from_steady_state(theorem2_model(), (0.1, 2.0), step=5e-3, strategy="shooting")
    assert g.info["strategy"] == "shooting"
    for k in (0.12, 0.5, 1.9):
        assert g.value(k) == pytest.approx(t2_solution.value(k), abs=1e-6)


# --- descriptors ---

@pytest.mark.parametrize("desc,expected", [
    ("prop1:A=2", Prop1Family(2.0, 1.0)),
    ("prop1:A=2,rho=0.5", Prop1Family(2.0, 0.5)),
    ("clairaut:A=1.5", ClairautGeneral(1.5)),
    ("prop2-singular", Prop2Singular()),
    ("affine:slope=1,intercept=0", AffineLine(1.0, 0.0)),
    ("zero", AffineLine(0.0, 0.0)),
])
def test_parse_candidate(desc, expected):
    assert parse_candidate(desc) == expected


def test_parse_min_descriptor():
    m = parse_candidate("min(clairaut:A=2,clairaut:A=1.25)")
    assert isinstance(m, MinOf)
    assert m.value(1.0) == pytest.approx(2.25)


@pytest.mark.parametrize("bad", ["", "clairaut", "clairaut:A=0.5", "prop1:B=2", "nonsense:x=1",
                                 "min(clairaut:A=2", "grid:/nonexistent.csv", "affine:slope=abc"])
def test_parse_candidate_errors(bad):
    with pytest.raises(ParseError):
        parse_candidate(bad)
