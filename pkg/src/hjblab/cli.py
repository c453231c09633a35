"""Command-line front end.

Exit codes: 0 success or ACCEPT, 2 usage or configuration error, 3 verification
failure. Every command writes ``report.json`` (plus CSVs) under
``--out`` / ``$HJBLAB_OUT`` / ``./hjblab_out``, in a subdirectory named after
the command. Reports carry no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import extended as ext
from .candidates import (
    ClairautGeneral,
    Prop1Family,
    Prop2Singular,
    divergence_check,
    parse_candidate,
    prop1_min_A,
    solve_hjb_from_steady_state,
)
from .dp_oracle import DP_ERROR_BOUND, DPConfig, dp_policy_rollout_crosscheck, dp_solve
from .errors import ConfigError, DomainError, HJBLabError, ParseError
from .hamiltonian import make_grid, residual_profile
from .model import PRESETS, audit_assumptions, find_steady_state, model_from_json
from .rollout import IntegratorConfig, Tolerances, certify
from .viscosity import DEFAULT_TOL, viscosity_report

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 2, 3


class UsageError(HJBLabError):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return ext.to_str(x) if math.isinf(x) else x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def load_model(spec):
    name = spec[:-6] if spec.endswith("-model") else spec
    if name in PRESETS:
        return PRESETS[name](), name
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"model {spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    return model_from_json(path.read_text()), str(path)


def parse_grid(text):
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise UsageError(f"grid must be MIN:MAX:N[:log], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid must be MIN:MAX:N[:log], got {text!r}") from None
    return make_grid(lo, hi, n, log=len(parts) == 4)


class Run:
    """Collects outputs and summary lines for one command, then writes report.json."""

    def __init__(self, args, model=None, model_name=None):
        self.command = args.command
        self.args = args
        self.model = model
        self.model_name = model_name
        self.dir = Path(args.out) / self.command
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.summary = {}
        self.details = {}

    def path(self, name):
        p = self.dir / name
        self.outputs.append(str(p))
        return p

    def expect(self, name, ok, value=None):
        self.summary[name] = {"pass": bool(ok), "value": _jsonable(value)}
        return bool(ok)

    @property
    def passed(self):
        return all(v["pass"] for v in self.summary.values())

    def finish(self):
        inputs = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out")}
        report = {
            "command": self.command,
            "model": self.model.to_dict() if self.model is not None else None,
            "model_source": self.model_name,
            "inputs": _jsonable(inputs),
            "outputs": [],
            "summary": self.summary,
            "details": _jsonable(self.details),
            "seed": self.args.seed,
            "status": "pass" if self.passed else "fail",
        }
        rp = self.path("report.json")
        report["outputs"] = list(self.outputs)
        rp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        for name, item in self.summary.items():
            print(f"{name}: {'PASS' if item['pass'] else 'FAIL'} ({item['value']})")
        print(f"report: {rp}")
        return EXIT_OK if self.passed else EXIT_FAIL


# --- commands ---------------------------------------------------------------------


def _tolerances(args):
    return Tolerances(tol_r=args.tol_r, tol_g=args.tol_g, tol_t=args.tol_t)


def cmd_residual(args):
    model, src = load_model(args.model)
    cand = parse_candidate(args.candidate, model)
    grid = parse_grid(args.grid)
    run = Run(args, model, src)
    prof = residual_profile(model, cand, grid)
    prof.to_csv(run.path("residual.csv"))
    run.expect("residual sup-norm", prof.sup_norm_finite <= args.tol_r, prof.sup_norm_finite)
    run.expect("infinite residuals", prof.count_infinite == 0, prof.count_infinite)
    return run.finish()


def cmd_certify(args):
    model, src = load_model(args.model)
    cand = parse_candidate(args.candidate, model)
    run = Run(args, model, src)
    cfg = IntegratorConfig(method=args.method, dt=args.dt, T=args.horizon)
    rep = certify(model, cand, args.k0, cfg, _tolerances(args))
    if rep.trajectory is not None:
        rep.trajectory.to_csv(run.path("trajectory.csv"))
    run.path("certification.json").write_text(rep.to_json() + "\n")
    run.details["certification"] = rep.to_dict()
    run.expect("certify", rep.accepted, rep.verdict if rep.accepted else f"REJECT({rep.reason})")
    return run.finish()


def cmd_viscosity(args):
    model, src = load_model(args.model)
    cand = parse_candidate(args.candidate, model)
    grid = parse_grid(args.grid)
    run = Run(args, model, src)
    rep = viscosity_report(model, cand, grid, args.tol_visc)
    rep.to_csv(run.path("viscosity.csv"))
    run.details["violations"] = [
        {"k": v.k, "sub": str(v.sub), "super": str(v.super),
         "gap": (v.super if str(v.super) == "Violated" else v.sub).gap,
         "worst_p": (v.super if str(v.super) == "Violated" else v.sub).worst_p}
        for v in rep.violations
    ]
    run.expect("viscosity", rep.consistent, rep.summary())
    return run.finish()


def _dp_config(args):
    grid = parse_grid(args.grid) if args.grid else None
    kw = dict(dt=args.dt, T=args.horizon, c_max=args.c_max, c_grid_size=args.c_grid_size,
              terminal=args.terminal, c_floor=args.c_floor)
    if grid is not None:
        kw["k_grid"] = grid
    return DPConfig(**kw)


def cmd_dp(args):
    model, src = load_model(args.model)
    cfg = _dp_config(args)
    run = Run(args, model, src)
    table = dp_solve(model, cfg)
    table.to_csv(run.path("value.csv"))
    run.details["config"] = cfg.to_dict()
    run.details["diagnostics"] = table.diagnostics
    probes = {}
    for k in args.probe:
        probes[repr(k)] = table.value_at(k)
    run.details["probes"] = probes
    run.expect("finite values", bool(np.all(np.isfinite(table.values))), len(table.values))
    run.expect("monotone in k", bool(np.all(np.diff(table.values) >= -1e-12)))
    return run.finish()


def cmd_audit(args):
    model, src = load_model(args.model)
    run = Run(args, model, src)
    rep = audit_assumptions(model)
    for line in rep.lines():
        print(line)
    run.details["audit"] = rep.to_dict()
    run.details["lines"] = rep.lines()
    run.expect("Theorem-2 conditions", rep.theorem2, "; ".join(rep.lines()))
    return run.finish()


# --- reproductions ----------------------------------------------------------------


def _grid_min_A(rho, n=200001):
    """Least A with V' >= 1 everywhere, by brute-force scan of V'_1 on a log grid."""
    k = np.geomspace(1e-4, 1e2, n)
    d1 = rho * np.exp(2 * rho * np.sqrt(k) - 2 * rho) / np.sqrt(k)
    return 1.0 / float(np.min(d1))


def reproduce_prop1(run, args):
    model = PRESETS["prop1"]()
    run.model, run.model_name = model, "prop1"
    grid = make_grid(0.05, 20.0, 200, log=True)
    for A in (1.5, 2.0, 4.0):
        prof = residual_profile(model, Prop1Family(A, 1.0), grid)
        prof.to_csv(run.path(f"residual_prop1_A{A:g}.csv"))
        run.expect(f"family residual A={A:g}", prof.sup_norm_finite <= 1e-9 and prof.count_infinite == 0,
                   prof.sup_norm_finite)
    a_min, a_grid = prop1_min_A(1.0), _grid_min_A(1.0)
    run.expect("A_min = e/2 vs grid oracle", abs(a_min - a_grid) <= 1e-3 and abs(a_min - math.e / 2) <= 1e-12,
               {"computed": a_min, "grid": a_grid})
    div = divergence_check(Prop1Family(a_min, 1.0))
    run.expect("derivative divergence up to 1e3", div.passed, div.chord_excess)
    table = dp_solve(model, DPConfig(terminal="zero"))
    table.to_csv(run.path("dp_value.csv"))
    v1 = table.value_at(1.0)
    run.expect("V_dp(1) in [1.0, 1.25]", 1.0 <= v1 <= 1.25, v1)
    run.expect("separation at k=1 >= 0.1", a_min - v1 >= 0.1, a_min - v1)
    rep = viscosity_report(model, table.as_candidate(), make_grid(0.1, 3.9, 100, log=True), 1e-3)
    rep.to_csv(run.path("viscosity_dp.csv"))
    run.expect("viscosity violation on DP estimate", not rep.consistent, rep.summary())


def reproduce_prop2(run, args):
    model = PRESETS["prop2"]()
    run.model, run.model_name = model, "prop2"
    grid = make_grid(0.1, 10.0, 200, log=True)
    cands = [("singular", Prop2Singular())] + [(f"clairaut A={A:g}", ClairautGeneral(A)) for A in (1.5, 2.0, 3.0)]
    for name, cand in cands:
        prof = residual_profile(model, cand, grid)
        run.expect(f"residual {name}", prof.sup_norm_finite <= 1e-9 and prof.count_infinite == 0,
                   prof.sup_norm_finite)
    cfg = IntegratorConfig(T=30.0)
    certs = {}
    # each line A k + 1/(4(A-1)) touches k + sqrt(k) at k = 1/(4(A-1)^2) (k = 1 for A = 1.5),
    # where its rollout is optimal; certify the lines from k0 = 2, away from every tangency
    for name, cand in cands:
        k0 = 1.0 if name == "singular" else 2.0
        rep = certify(model, cand, k0, cfg)
        certs[name] = rep.to_dict()
        tag = name.replace(" ", "_").replace("=", "")
        rep.trajectory.to_csv(run.path(f"trajectory_{tag}.csv"))
        want = name == "singular"
        run.expect(f"certify {name} at k0={k0:g} {'ACCEPT' if want else 'REJECT'}", rep.accepted == want,
                   rep.verdict if rep.accepted else f"REJECT({rep.reason})")
    rep = certify(model, ClairautGeneral(2.0), 1.0, cfg)
    run.expect("clairaut A=2 from k0=1: gap 1.5, tail 1.5",
               not rep.accepted and abs(rep.payoff_gap - 1.5) <= 0.01 and abs(rep.transversality_tail - 1.5) <= 0.01,
               {"gap": rep.payoff_gap, "tail": rep.transversality_tail})
    rep = certify(model, ClairautGeneral(2.0), 0.2, cfg)
    run.expect("clairaut A=2 from k0=0.2 hits floor at ln 5",
               rep.reason == "HitFloor" and abs(rep.t_stop - math.log(5)) <= 0.01, rep.t_stop)
    run.details["certifications"] = certs


def reproduce_theorem2(run, args):
    model = PRESETS["theorem2"]()
    run.model, run.model_name = model, "theorem2"
    audit = audit_assumptions(model)
    run.details["audit"] = audit.lines()
    run.expect("audit Thm2(i)+(ii)", audit.theorem2, "; ".join(audit.lines()))
    k_star = find_steady_state(model)
    run.expect("steady state k*=0.25", abs(k_star - 0.25) <= 1e-12, k_star)
    sol = solve_hjb_from_steady_state(model, (0.1, 2.0))
    sol.to_csv(run.path("hjb_solution.csv"))
    v = sol.value(0.25)
    run.expect("V_ode(0.25) = sqrt 2", abs(v - math.sqrt(2)) <= 1e-6, v)
    prof = residual_profile(model, sol, sol.knots)
    run.expect("on-knot residual <= 1e-6", prof.sup_norm_finite <= 1e-6, prof.sup_norm_finite)
    for k0 in (0.5, 1.0):
        rep = certify(model, sol, k0, IntegratorConfig(T=30.0))
        rep.trajectory.to_csv(run.path(f"trajectory_k0_{k0:g}.csv"))
        run.expect(f"certify k0={k0:g}", rep.accepted and abs(rep.payoff_gap) <= 1e-3, rep.payoff_gap)
    table = dp_solve(model, DPConfig())
    table.to_csv(run.path("dp_value.csv"))
    gaps = {repr(k): abs(sol.value(k) - table.value_at(k)) for k in (0.25, 0.5, 1.0)}
    run.expect("|V_ode - V_dp| <= 0.05", max(gaps.values()) <= DP_ERROR_BOUND, gaps)
    vdp = table.value_at(0.25)
    run.expect("|V_dp(0.25) - sqrt 2| <= 0.05", abs(vdp - math.sqrt(2)) <= DP_ERROR_BOUND, vdp)
    xc = dp_policy_rollout_crosscheck(model, table, 0.25)
    run.expect("DP policy rollout gap <= 0.05", xc.gap <= DP_ERROR_BOUND, xc.gap)


REPRODUCTIONS = {"prop1": reproduce_prop1, "prop2": reproduce_prop2, "theorem2-demo": reproduce_theorem2}


def cmd_reproduce(args):
    if args.name not in REPRODUCTIONS:
        raise UsageError(f"unknown reproduction {args.name!r}; choose from {', '.join(REPRODUCTIONS)}")
    np.random.seed(args.seed)
    run = Run(args)
    REPRODUCTIONS[args.name](run, args)
    return run.finish()


# --- argument parsing ---------------------------------------------------------------


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="hjblab", description="HJB verification lab for 1-D optimal growth")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=os.environ.get("HJBLAB_OUT", "hjblab_out"))
    common.add_argument("--seed", type=int, default=42)
    sub = p.add_subparsers(dest="command", required=True)

    def model_arg(sp):
        sp.add_argument("--model", required=True, help="preset (prop1, prop2, theorem2) or JSON file")

    s = sub.add_parser("residual", parents=[common], help="HJB residual profile of a candidate")
    model_arg(s)
    s.add_argument("--candidate", required=True)
    s.add_argument("--grid", default="0.1:10:200:log")
    s.add_argument("--tol-r", type=float, default=1e-6)
    s.set_defaults(func=cmd_residual)

    s = sub.add_parser("certify", parents=[common], help="policy rollout certification")
    model_arg(s)
    s.add_argument("--candidate", required=True)
    s.add_argument("--k0", type=float, required=True)
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--dt", type=float, default=0.01)
    s.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    s.add_argument("--tol-r", type=float, default=1e-6)
    s.add_argument("--tol-g", type=float, default=None)
    s.add_argument("--tol-t", type=float, default=1e-4)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("viscosity", parents=[common], help="pointwise viscosity checks")
    model_arg(s)
    s.add_argument("--candidate", required=True)
    s.add_argument("--grid", default="0.1:10:100:log")
    s.add_argument("--tol-visc", type=float, default=DEFAULT_TOL)
    s.set_defaults(func=cmd_viscosity)

    s = sub.add_parser("dp", parents=[common], help="backward-induction value estimate")
    model_arg(s)
    s.add_argument("--grid", default=None, help="k-grid MIN:MAX:N[:log]; default 0.01:4:400")
    s.add_argument("--dt", type=float, default=0.01)
    s.add_argument("--horizon", type=float, default=30.0)
    s.add_argument("--c-max", type=float, default=8.0)
    s.add_argument("--c-grid-size", type=int, default=201)
    s.add_argument("--terminal", choices=("zero", "bound"), default="zero")
    s.add_argument("--c-floor", type=float, default=None)
    s.add_argument("--probe", type=_float_list, default=[1.0])
    s.set_defaults(func=cmd_dp)

    s = sub.add_parser("audit", parents=[common], help="check standing assumptions")
    model_arg(s)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("reproduce", parents=[common], help="scripted reproduction")
    s.add_argument("name", help="prop1 | prop2 | theorem2-demo")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, ConfigError, DomainError) as exc:
        print(f"hjblab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
