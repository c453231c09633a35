"""hjblab: numerical verification lab for the 1-D optimal growth HJB equation."""

from .candidates import (
    AffineLine,
    ClairautGeneral,
    GridFn,
    MinOf,
    Prop1Family,
    Prop2Singular,
    min_combine,
    parse_candidate,
    prop1_min_A,
    solve_hjb_from_steady_state,
)
from .dp_oracle import DPConfig, ValueTable, dp_solve
from .hamiltonian import hamiltonian, hjb_residual, optimal_control, residual_profile
from .model import (
    CRRA,
    AffineCapped,
    Linear,
    LinearProd,
    ModelSpec,
    PiecewiseLinearConcave,
    ScaledSqrt,
    Sqrt,
    SqrtShift,
    audit_assumptions,
    find_steady_state,
    prop1_model,
    prop2_model,
    theorem2_model,
)
from .rollout import IntegratorConfig, Tolerances, certify, integrate_policy
from .viscosity import viscosity_report

__version__ = "0.1.0"
