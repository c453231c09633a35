import csv
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hjblab.candidates import AffineLine, ClairautGeneral, Prop1Family, Prop2Singular
from hjblab.errors import DomainError
from hjblab.hamiltonian import (
    Degenerate,
    hamiltonian,
    hjb_residual,
    make_grid,
    optimal_control,
    residual_profile,
)
from hjblab.model import (
    CRRA,
    LinearProd,
    ModelSpec,
    PiecewiseLinearConcave,
    ScaledSqrt,
    Sqrt,
    SqrtShift,
    prop1_model,
    prop2_model,
    theorem2_model,
)

from oracles import hamiltonian_by_grid

MODELS = [
    prop1_model(), prop2_model(), theorem2_model(),
    ModelSpec(0.5, CRRA(2.0), Sqrt()),
    ModelSpec(0.75, ScaledSqrt(1.0), PiecewiseLinearConcave((2.0,), (1.0, 0.5))),
]


def test_hamiltonian_examples():
    assert hamiltonian(prop2_model(), 1.0, 1.5) == pytest.approx(2.0)
    assert hamiltonian_by_grid(1.0, lambda c: c + np.sqrt(c), 1.5) == pytest.approx(2.0, abs=1e-8)
    assert hamiltonian(prop1_model(), 1.0, 0.9) == math.inf
    assert hamiltonian(prop1_model(), 1.0, 2.0) == pytest.approx(2.0)
    # for u(c) = c and p = 2 the grid optimum sits at c = 0
    assert hamiltonian_by_grid(1.0, lambda c: c, 2.0) == pytest.approx(2.0, abs=1e-12)


def test_hamiltonian_nonpositive_p_is_plus_inf():
    for m in MODELS:
        assert hamiltonian(m, 1.0, 0.0) == math.inf
        assert hamiltonian(m, 1.0, -3.0) == math.inf


def test_hamiltonian_requires_positive_k():
    with pytest.raises(DomainError):
        hamiltonian(prop2_model(), 0.0, 1.5)


def test_optimal_control_examples():
    assert optimal_control(prop2_model(), 1.0, 2.0) == pytest.approx(0.25)
    assert optimal_control(theorem2_model(), 1.0, math.sqrt(2)) == pytest.approx(0.5)
    assert isinstance(optimal_control(prop1_model(), 1.0, 0.9), Degenerate)
    assert isinstance(optimal_control(prop1_model(), 1.0, 1.0), Degenerate)
    assert optimal_control(prop1_model(), 1.0, 1.5) == 0.0


def test_residual_examples():
    assert abs(hjb_residual(prop2_model(), Prop2Singular(), 4.0)) < 1e-12
    for k in (0.1, 1.0, 7.3):
        assert abs(hjb_residual(prop2_model(), ClairautGeneral(2.0), k)) < 1e-12
    assert abs(hjb_residual(prop1_model(), Prop1Family(2.0, 1.0), 1.0)) < 1e-12


def test_residual_profile_examples(tmp_path):
    grid = make_grid(0.1, 10, 200, log=True)
    prof = residual_profile(prop2_model(), Prop2Singular(), grid)
    assert prof.sup_norm_finite < 1e-9 and prof.count_infinite == 0

    prof = residual_profile(prop2_model(), AffineLine(1.0, 0.0), grid)
    assert prof.count_infinite == grid.size

    prof = residual_profile(prop1_model(), Prop1Family(1.0, 1.0), grid)
    assert prof.count_infinite > 0
    # V'(0.25) = 2/e < 1 for A = 1
    assert Prop1Family(1.0, 1.0).deriv(0.25) == pytest.approx(2 / math.e)

    path = tmp_path / "res.csv"
    prof.to_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["k", "residual", "V", "Vprime"]
    assert any(r["residual"] == "+inf" for r in rows)
    assert len(rows) == grid.size


def test_residual_profile_rejects_bad_grid():
    with pytest.raises(DomainError):
        residual_profile(prop2_model(), Prop2Singular(), [1.0, 0.5])
    with pytest.raises(DomainError):
        residual_profile(prop2_model(), Prop2Singular(), [0.0, 0.5])


@given(st.sampled_from(MODELS), st.floats(1e-3, 1e2), st.floats(1e-3, 1e2),
       st.lists(st.floats(0, 50), min_size=5, max_size=20))
def test_conjugacy_identity(model, k, p, cs):
    h = hamiltonian(model, k, p)
    assume(math.isfinite(h))
    fk = model.production.value(k)
    for c in cs:
        u = model.utility.value(c)
        assert h >= (fk - c) * p + u - 1e-9 * max(1.0, abs(h))
    c_star = optimal_control(model, k, p)
    if not isinstance(c_star, Degenerate):
        attained = (fk - c_star) * p + model.utility.value(c_star)
        assert attained == pytest.approx(h, abs=1e-8, rel=1e-10)


@given(st.sampled_from(MODELS), st.floats(1e-3, 1e2), st.floats(1e-3, 1e2), st.floats(1e-3, 1e2))
def test_convex_in_p(model, k, p1, p2):
    lo, hi = min(p1, p2), max(p1, p2)
    h1, h2 = hamiltonian(model, k, lo), hamiltonian(model, k, hi)
    assume(math.isfinite(h1) and math.isfinite(h2))
    hm = hamiltonian(model, k, 0.5 * (lo + hi))
    assert hm <= 0.5 * (h1 + h2) + 1e-10 * max(1.0, abs(h1), abs(h2))


@given(st.sampled_from(MODELS), st.floats(1e-3, 1e2), st.floats(1e-3, 1e2), st.floats(0, 1e2))
def test_monotone_in_k(model, k1, k2, p):
    lo, hi = min(k1, k2), max(k1, k2)
    a, b = hamiltonian(model, lo, p), hamiltonian(model, hi, p)
    if math.isinf(a):
        assert math.isinf(b)
    else:
        assert b >= a - 1e-12 * max(1.0, abs(a))


def test_linear_prod_model_hamiltonian_grid_oracle():
    m = ModelSpec(1.0, SqrtShift(), LinearProd(2.0))
    for k, p in [(0.5, 1.2), (3.0, 4.0)]:
        oracle = hamiltonian_by_grid(2.0 * k, lambda c: c + np.sqrt(c), p, c_hi=1e7)
        assert hamiltonian(m, k, p) == pytest.approx(oracle, abs=1e-8)
