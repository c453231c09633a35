import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjblab.candidates import ClairautGeneral, GridFn, Prop1Family, Prop2Singular, min_combine
from hjblab.errors import NotConcaveHere
from hjblab.hamiltonian import hamiltonian, hjb_residual
from hjblab.model import CRRA, ModelSpec, ScaledSqrt, Sqrt, SqrtShift, LinearProd, prop1_model, prop2_model, theorem2_model
from hjblab.viscosity import (
    Holds,
    Vacuous,
    Violated,
    check_subsolution_at,
    check_supersolution_at,
    golden_section_min,
    one_sided_derivatives,
    viscosity_report,
)

from oracles import golden_grid_min

KINKED = min_combine(ClairautGeneral(2.0), ClairautGeneral(1.25))


class _Plain:
    """A candidate exposing only values, to force the difference-quotient path."""

    def __init__(self, fn):
        self.fn = fn

    def value(self, k):
        return self.fn(k)


def test_one_sided_examples():
    assert one_sided_derivatives(KINKED, 1.0) == (1.25, 2.0)
    assert one_sided_derivatives(KINKED, 2.0) == (1.25, 1.25)
    assert one_sided_derivatives(Prop2Singular(), 1.0) == (1.5, 1.5)


def test_one_sided_numeric_fallback():
    d_plus, d_minus = one_sided_derivatives(_Plain(lambda k: k + math.sqrt(k)), 1.0)
    assert d_plus == pytest.approx(1.5, abs=1e-8)
    assert d_minus == pytest.approx(1.5, abs=1e-8)
    d_plus, d_minus = one_sided_derivatives(_Plain(lambda k: min(2 * k + 0.25, 1.25 * k + 1)), 1.0)
    assert d_plus == pytest.approx(1.25, abs=1e-9)
    assert d_minus == pytest.approx(2.0, abs=1e-9)


def test_not_concave_detected():
    with pytest.raises(NotConcaveHere):
        one_sided_derivatives(_Plain(lambda k: k * k), 1.0)
    with pytest.raises(NotConcaveHere):
        one_sided_derivatives(_Plain(lambda k: max(2 * k + 0.25, 1.25 * k + 1)), 1.0)


def test_subsolution_examples():
    assert isinstance(check_subsolution_at(prop2_model(), KINKED, 1.0), Vacuous)
    assert isinstance(check_subsolution_at(prop2_model(), Prop2Singular(), 1.0), Holds)
    assert hamiltonian(prop2_model(), 1.0, 1.5) == pytest.approx(2.0)


def test_subsolution_infinite_gap_below_unit_slope():
    # Prop 1 model: a smooth point with slope < 1 makes H = +inf
    g = GridFn([0.5, 1.0, 1.5], [1.0, 1.45, 1.85], kind="linear")
    v = check_subsolution_at(prop1_model(), g, 1.2)
    assert isinstance(v, Violated) and v.gap == math.inf


def test_supersolution_examples():
    v = check_supersolution_at(prop2_model(), KINKED, 1.0)
    assert isinstance(v, Violated)
    assert v.gap == pytest.approx(0.25, abs=1e-6)
    assert v.worst_p == pytest.approx(1.5, abs=1e-6)
    assert 1.25 <= v.worst_p <= 2.0
    # grid oracle on p in [1.25, 2]: min of p + 1/(4(p-1)) is 2 at p = 1.5
    p, h = golden_grid_min(lambda p: p + 1 / (4 * (p - 1)), 1.25, 2.0)
    assert p == pytest.approx(1.5, abs=1e-4) and h == pytest.approx(2.0, abs=1e-8)
    assert isinstance(check_supersolution_at(prop2_model(), Prop2Singular(), 1.0), Holds)
    assert isinstance(check_supersolution_at(prop2_model(), ClairautGeneral(2.0), 1.0), Holds)


def test_report_prop2_singular_clean():
    rep = viscosity_report(prop2_model(), Prop2Singular(), np.geomspace(0.1, 10, 100))
    assert rep.consistent
    assert rep.summary().startswith("no violation found on grid")


def test_report_kinked_exactly_one(tmp_path):
    grid = np.concatenate([np.linspace(0.2, 3.0, 15), [1.0]])
    grid = np.unique(grid)
    rep = viscosity_report(prop2_model(), KINKED, grid)
    assert len(rep.violations) == 1
    v = rep.violations[0]
    assert v.k == 1.0 and isinstance(v.sub, Vacuous)
    path = tmp_path / "v.csv"
    rep.to_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["k", "d_plus", "d_minus", "sub_status", "super_status", "gap", "worst_p"]
    bad = [r for r in rows if r["super_status"] == "Violated"]
    assert len(bad) == 1 and float(bad[0]["gap"]) == pytest.approx(0.25, abs=1e-6)


def test_report_propagates_not_concave():
    with pytest.raises(NotConcaveHere) as info:
        viscosity_report(prop1_model(), Prop1Family(2.0, 1.0), [0.5, 1.0])
    assert info.value.k == 0.5


SMOOTH_CASES = [
    (prop2_model(), Prop2Singular()),
    (prop2_model(), ClairautGeneral(2.0)),
    (prop2_model(), ClairautGeneral(3.0)),
    (theorem2_model(), Prop2Singular()),
]


@given(st.sampled_from(SMOOTH_CASES), st.floats(0.05, 20.0), st.sampled_from([1e-7, 1e-3]))
def test_classical_and_viscosity_agree_where_smooth(case, k, tol):
    model, cand = case
    r = hjb_residual(model, cand, k)
    sub = check_subsolution_at(model, cand, k, tol)
    sup = check_supersolution_at(model, cand, k, tol)
    both = isinstance(sub, Holds) and isinstance(sup, Holds)
    assert both == (abs(r) <= tol)


_GS_MODELS = [prop2_model(), theorem2_model(), ModelSpec(0.5, CRRA(2.0), Sqrt()),
              ModelSpec(1.0, SqrtShift(), LinearProd(2.0)), ModelSpec(2.0, ScaledSqrt(0.5), Sqrt())]


@given(st.sampled_from(_GS_MODELS), st.floats(0.05, 10.0), st.floats(1.05, 5.0), st.floats(0.01, 5.0))
def test_golden_section_matches_grid_scan(model, k, a, width):
    b = a + width
    _, h_gs = golden_section_min(lambda p: hamiltonian(model, k, p), a, b)
    _, h_grid = golden_grid_min(lambda p: hamiltonian(model, k, p), a, b)
    assert h_gs <= h_grid + 1e-8 * max(1.0, abs(h_grid))
    # the grid scan is an upper bound; the true minimum is within grid resolution of it
    assert h_gs >= h_grid - 1e-8 * max(1.0, abs(h_grid)) - 1e-6 * width


@given(st.floats(1.1, 4.0), st.floats(1.1, 4.0), st.floats(0.1, 5.0))
def test_min_of_lines_slopes_exact(a1, a2, k):
    if abs(a1 - a2) < 1e-3:
        return
    m = min_combine(ClairautGeneral(a1), ClairautGeneral(a2))
    d_plus, d_minus = one_sided_derivatives(m, k)
    assert d_plus <= d_minus
    assert {d_plus, d_minus} <= {a1, a2}
