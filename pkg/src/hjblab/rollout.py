"""Forward simulation of the growth dynamics and policy certification.

State equation k' = f(k) - c(t, k). The discounted payoff
J(t) = int_0^t e^{-rho s} u(c(s)) ds is carried as a second state of the same
Runge-Kutta scheme, so the quadrature error shares the integrator's budget.
Paths stop at ``k_floor``; the crossing time is located by bisecting the last
step length.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicHermiteSpline

from . import extended as ext
from .errors import (
    ConditionFailed,
    ConfigError,
    DomainError,
    HJBLabError,
    KinkDerivativeError,
    MinusInfinitePayoff,
    NotInvertible,
    PolicyUndefined,
)
from .hamiltonian import hjb_residual


# --- configuration and containers -------------------------------------------------


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 0.01
    T: float | None = None  # None means 30 / rho
    k_floor: float = 1e-9
    tol: float = 1e-10  # rk45 rtol; atol is tol * 1e-2

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ConfigError(f"unknown integrator method {self.method!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.T is not None and not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T}")
        if not self.k_floor > 0:
            raise ConfigError(f"k_floor must be > 0, got {self.k_floor}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")

    def horizon(self, rho):
        return float(self.T) if self.T is not None else 30.0 / rho


@dataclass(frozen=True)
class HorizonReached:
    def __str__(self):
        return "HorizonReached"


@dataclass(frozen=True)
class HitFloor:
    t_stop: float

    def __str__(self):
        return f"HitFloor(t={self.t_stop:.6g})"


@dataclass
class Trajectory:
    t: np.ndarray
    k: np.ndarray
    c: np.ndarray
    payoff_partial: np.ndarray
    terminated: object
    rho: float
    u: np.ndarray = field(repr=False, default=None)  # u(c) at nodes

    @property
    def hit_floor(self):
        return isinstance(self.terminated, HitFloor)

    @property
    def t_end(self):
        return float(self.t[-1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "k", "c", "payoff_partial"])
            for row in zip(self.t, self.k, self.c, self.payoff_partial):
                w.writerow([ext.to_str(x) for x in row])


# --- core integrator ----------------------------------------------------------------


def _rk4_step(drift, rate, t, k, h):
    """One augmented RK4 step; None if a stage leaves k > 0."""
    try:
        a1, r1 = drift(t, k), rate(t, k)
        k2 = k + 0.5 * h * a1
        if not k2 > 0:
            return None
        a2, r2 = drift(t + 0.5 * h, k2), rate(t + 0.5 * h, k2)
        k3 = k + 0.5 * h * a2
        if not k3 > 0:
            return None
        a3, r3 = drift(t + 0.5 * h, k3), rate(t + 0.5 * h, k3)
        k4 = k + h * a3
        if not k4 > 0:
            return None
        a4, r4 = drift(t + h, k4), rate(t + h, k4)
    except DomainError:
        return None
    k_new = k + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    dj = ext.scale(h / 6.0, ext.add(ext.add(r1, r4), 2 * ext.add(r2, r3)))
    return k_new, dj


def _locate_floor(drift, rate, t, k, h, k_floor, iters=80):
    """Largest sub-step s in (0, h] keeping k >= k_floor; returns (s, k, dJ)."""
    lo, hi = 0.0, h
    best = (0.0, k, 0.0)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        out = _rk4_step(drift, rate, t, k, mid)
        if out is not None and out[0] >= k_floor:
            lo, best = mid, (mid, out[0], out[1])
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, t):
            break
    return best


def simulate(model, k0, control, cfg=None, payoff=True):
    """Integrate k' = f(k) - control(t, k) from k0.

    ``control`` returns a nonnegative consumption. Node values of c and u(c)
    are recorded alongside k and the running payoff.
    """
    cfg = cfg or IntegratorConfig()
    if not k0 > 0:
        raise DomainError(f"k0 must be > 0, got {k0}")
    rho = model.rho
    T = cfg.horizon(rho)
    f = model.production.value
    uval = model.utility.value

    def drift(t, k):
        return float(f(k)) - control(t, k)

    if payoff:
        def rate(t, k):
            return math.exp(-rho * t) * float(uval(control(t, k)))
    else:
        def rate(t, k):
            return 0.0

    if cfg.method == "rk45":
        ts, ks, js, term = _run_rk45(drift, rate, float(k0), T, cfg)
    else:
        ts, ks, js, term = _run_rk4(drift, rate, float(k0), T, cfg)
    cs = np.array([control(t, k) for t, k in zip(ts, ks)], dtype=float)
    us = np.array([float(uval(c)) for c in cs], dtype=float)
    return Trajectory(np.asarray(ts), np.asarray(ks), cs, np.asarray(js), term, rho, us)


def _run_rk4(drift, rate, k0, T, cfg):
    n = max(1, int(math.ceil(T / cfg.dt - 1e-9)))
    h = T / n
    ts, ks, js = [0.0], [k0], [0.0]
    t, k, j = 0.0, k0, 0.0
    for i in range(n):
        out = _rk4_step(drift, rate, t, k, h)
        if out is None or out[0] < cfg.k_floor:
            s, k_new, dj = _locate_floor(drift, rate, t, k, h, cfg.k_floor)
            t_stop = t + s
            if s > 0:
                ts.append(t_stop), ks.append(k_new), js.append(ext.add(j, dj))
            return ts, ks, js, HitFloor(t_stop)
        k, j = out[0], ext.add(j, out[1])
        t = (i + 1) * h
        ts.append(t), ks.append(k), js.append(j)
    return ts, ks, js, HorizonReached()


def _run_rk45(drift, rate, k0, T, cfg):
    def rhs(t, y):
        k = y[0]
        if not k > 0:
            return [0.0, 0.0]
        return [drift(t, k), rate(t, k)]

    def floor_event(t, y):
        return y[0] - cfg.k_floor

    floor_event.terminal = True
    floor_event.direction = -1
    sol = solve_ivp(rhs, (0.0, T), [k0, 0.0], method="RK45", rtol=cfg.tol,
                    atol=cfg.tol * 1e-2, events=floor_event, max_step=max(cfg.dt, T / 50))
    if sol.status < 0:
        raise HJBLabError(f"rk45 failed: {sol.message}")
    ts, ks, js = list(sol.t), list(sol.y[0]), list(sol.y[1])
    if sol.status == 1 and sol.t_events[0].size:
        t_stop = float(sol.t_events[0][0])
        if ts[-1] < t_stop:
            ts.append(t_stop), ks.append(float(sol.y_events[0][0][0])), js.append(float(sol.y_events[0][0][1]))
        return ts, ks, js, HitFloor(t_stop)
    return ts, ks, js, HorizonReached()


# --- policy rollout ---------------------------------------------------------------


def policy_control(model, candidate):
    """Feedback rule c(k) = (u')^{-1}(V'(k)); raises PolicyUndefined where it is not."""
    inv = model.utility.prime_inverse

    def control(t, k):
        p = candidate.deriv(k)
        if not p > 0:
            raise PolicyUndefined(f"V'({k}) = {p} <= 0")
        try:
            return float(inv(p))
        except NotInvertible as exc:
            raise PolicyUndefined(
                f"(u')^-1 undefined at V'({k:.6g}) = {p:.6g}; marginal range {exc.range}"
            ) from exc

    return control


def integrate_policy(model, candidate, k0, cfg=None):
    control = policy_control(model, candidate)
    control(0.0, k0)  # fail fast before building the path
    return simulate(model, k0, control, cfg)


def accumulated_payoff(traj, rho=None):
    """Discounted payoff up to termination."""
    if len(traj.t) == 0:
        raise DomainError("empty trajectory")
    if rho is not None and not math.isclose(rho, traj.rho):
        raise DomainError(f"trajectory built with rho={traj.rho}, asked for {rho}")
    if traj.u is not None and np.any(np.isneginf(traj.u)):
        i = int(np.argmax(np.isneginf(traj.u)))
        raise MinusInfinitePayoff(f"u(c) = -inf at t = {traj.t[i]}")
    return float(traj.payoff_partial[-1])


def trapezoid_payoff(traj):
    """Node-only trapezoid quadrature; a cross-check for ``accumulated_payoff``."""
    if traj.u is None:
        raise DomainError("trajectory carries no utility values")
    if np.any(np.isneginf(traj.u)):
        raise MinusInfinitePayoff("u(c) = -inf on path")
    return float(trapezoid(np.exp(-traj.rho * traj.t) * traj.u, traj.t))


def pure_accumulation(model, k0, cfg=None):
    return simulate(model, k0, lambda t, k: 0.0, cfg, payoff=False)


def accumulation_upper_bound(model, k2, p2, k0, t):
    """e^{p2 t}[k0 + A(1 - e^{-p2 t})] with A = (f(k2) - p2 k2)/p2."""
    if not p2 > 0:
        raise DomainError(f"p2 must be > 0, got {p2}")
    if p2 not in model.production.subdifferential(k2):
        raise DomainError(f"p2 = {p2} is not in the subdifferential of f at k2 = {k2}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    A = (float(model.production.value(k2)) - p2 * k2) / p2
    return math.exp(p2 * t) * (k0 + A * (1.0 - math.exp(-p2 * t)))


# --- comparison -------------------------------------------------------------------


@dataclass(frozen=True)
class Dynamics:
    """k' = f(k) - consumption(t, k); consumption may be a constant."""

    production: object
    consumption: object = 0.0

    def c(self, t, k):
        c = self.consumption
        return float(c(t, k)) if callable(c) else float(c)

    def drift(self, t, k):
        return float(self.production.value(k)) - self.c(t, k)


@dataclass
class ComparisonResult:
    ordered: bool
    max_violation: float
    n_nodes: int


def _as_dynamics(x):
    if isinstance(x, Dynamics):
        return x
    if hasattr(x, "production"):
        return Dynamics(x.production)
    raise ConfigError(f"cannot interpret {x!r} as dynamics")


def _path(dyn, k0, T, cfg):
    def drift(t, k):
        return dyn.drift(t, k)

    ts, ks, _, _ = _run_rk4(drift, lambda t, k: 0.0, float(k0), T, cfg)
    return np.asarray(ts), np.asarray(ks)


def comparison_check(lo, hi, k0_lo, k0_hi, cfg=None, T=None, sample=None, tol=None):
    """Check k_lo(t) <= k_hi(t) on shared RK4 nodes.

    ``lo``/``hi`` are Dynamics (or models, meaning zero consumption). The drift
    ordering h_lo <= h_hi is verified first on a (t, k) sample.
    """
    cfg = cfg or IntegratorConfig(T=T or 10.0)
    T = T or cfg.T or 10.0
    lo, hi = _as_dynamics(lo), _as_dynamics(hi)
    if k0_lo > k0_hi:
        raise ConditionFailed("k0_lo <= k0_hi", f"{k0_lo} > {k0_hi}")
    ks_sample = sample if sample is not None else np.geomspace(1e-3, 1e3, 25)
    for t in np.linspace(0.0, T, 5):
        for k in ks_sample:
            if lo.drift(t, k) > hi.drift(t, k) + 1e-12 * max(1.0, abs(hi.drift(t, k))):
                raise ConditionFailed("h_lo <= h_hi", f"violated at t={t}, k={k}")
    tol = 10 * cfg.tol if tol is None else tol
    t1, k1 = _path(lo, k0_lo, T, cfg)
    t2, k2 = _path(hi, k0_hi, T, cfg)
    n = min(len(t1), len(t2))
    diff = k1[:n] - k2[:n]
    scale = np.maximum(1.0, np.abs(k2[:n]))
    worst = float(np.max(diff / scale)) if n else 0.0
    return ComparisonResult(worst <= tol, max(worst, 0.0), n)


# --- growth condition and transversality ----------------------------------------


@dataclass(frozen=True)
class Converges0:
    def __str__(self):
        return "Converges0"


@dataclass(frozen=True)
class ReportsLimit:
    estimate: float

    def __str__(self):
        return f"ReportsLimit({self.estimate:.6g})"


@dataclass
class GrowthReport:
    times: np.ndarray
    tails: np.ndarray
    verdict: object


def growth_condition_check(model, candidate, k0, T=None, cfg=None, n_samples=40, zero_tol=1e-6):
    """Sample e^{-rho t} V(khat(t, k0)) along the pure accumulation path."""
    rho = model.rho
    T = T if T is not None else 30.0 / rho
    base = cfg or IntegratorConfig()
    cfg = IntegratorConfig(method="rk4", dt=base.dt, T=T, k_floor=base.k_floor, tol=base.tol)
    traj = pure_accumulation(model, k0, cfg)
    if traj.hit_floor:
        raise ConditionFailed("pure accumulation stays positive", str(traj.terminated))
    h = traj.t[1] - traj.t[0]
    idx = np.unique(np.round(np.geomspace(1.0, len(traj.t) - 1, n_samples)).astype(int))
    times = traj.t[idx]
    tails = np.array([math.exp(-rho * t) * candidate.value(k) for t, k in zip(times, traj.k[idx])])
    last_decade = tails[times >= times[-1] / 10.0 - 0.5 * h]
    decreasing = bool(np.all(np.diff(last_decade) <= 1e-15))
    if abs(tails[-1]) < zero_tol and decreasing:
        verdict = Converges0()
    else:
        verdict = ReportsLimit(float(tails[-1]))
    return GrowthReport(times, tails, verdict)


def transversality_tail(candidate, traj, rho=None):
    rho = traj.rho if rho is None else rho
    return math.exp(-rho * traj.t_end) * candidate.value(float(traj.k[-1]))


def euler_residual(model, traj):
    """sup |d/dt u'(c) - u'(c)(rho - f'(k))| over interior nodes."""
    if np.any(traj.c <= 0):
        raise DomainError("Euler residual undefined: consumption reaches 0 on the path")
    if len(traj.t) < 3:
        raise DomainError("need at least 3 nodes")
    mu = np.array([float(model.utility.prime(c)) for c in traj.c])
    fp = np.array([model.production.right_derivative(k) for k in traj.k])
    dmu = np.gradient(mu, traj.t)
    r = dmu - mu * (model.rho - fp)
    return float(np.max(np.abs(r[1:-1])))


# --- certification -----------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    tol_r: float = 1e-6
    tol_g: float | None = None  # None means 1e-4 * max(1, |V(k0)|)
    tol_t: float = 1e-4

    def gap_tol(self, v0):
        return self.tol_g if self.tol_g is not None else 1e-4 * max(1.0, abs(v0))


@dataclass
class CertificationReport:
    verdict: str
    reason: str | None
    k0: float
    value_k0: float | None
    payoff: float | None
    payoff_gap: float | None
    transversality_tail: float | None
    residual_on_path: float | None
    euler_residual_norm: float | None
    terminated: str
    t_stop: float | None
    tolerances: dict
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def accepted(self):
        return self.verdict == "ACCEPT"

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k != "trajectory"}
        for key, val in d.items():
            if isinstance(val, float) and math.isinf(val):
                d[key] = ext.to_str(val)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _path_residual(model, candidate, ks):
    """sup over visited k of |H - rho V| / max(1, |rho V|)."""
    worst = 0.0
    for k in np.unique(ks):
        try:
            r = hjb_residual(model, candidate, float(k))
        except KinkDerivativeError:
            return math.inf
        scale = max(1.0, abs(model.rho * candidate.value(float(k))))
        worst = max(worst, abs(r) / scale)
        if math.isinf(worst):
            break
    return worst


def certify(model, candidate, k0, cfg=None, tol=None):
    cfg = cfg or IntegratorConfig()
    tol = tol or Tolerances()
    v0 = candidate.value(k0)
    tol_g = tol.gap_tol(v0)
    tols = {"tol_r": tol.tol_r, "tol_g": tol_g, "tol_t": tol.tol_t}

    def reject(reason, **kw):
        base = dict(verdict="REJECT", reason=reason, k0=float(k0), value_k0=float(v0), payoff=None,
                    payoff_gap=None, transversality_tail=None, residual_on_path=None,
                    euler_residual_norm=None, terminated="NotRun", t_stop=None, tolerances=tols)
        base.update(kw)
        return CertificationReport(**base)

    try:
        traj = integrate_policy(model, candidate, k0, cfg)
    except PolicyUndefined as exc:
        return reject("PolicyUndefined", terminated=f"PolicyUndefined: {exc}")
    except DomainError as exc:
        return reject("domain", terminated=f"DomainError: {exc}")

    try:
        euler = euler_residual(model, traj)
    except DomainError:
        euler = None
    payoff = accumulated_payoff(traj, model.rho)
    gap = v0 - payoff
    tail = transversality_tail(candidate, traj)
    resid = _path_residual(model, candidate, traj.k)
    t_stop = traj.terminated.t_stop if traj.hit_floor else None

    if traj.hit_floor:
        reason = "HitFloor"
    elif not resid <= tol.tol_r:
        reason = "residual"
    elif not abs(gap) <= tol_g:
        reason = "payoff-gap"
    elif not abs(tail) <= tol.tol_t:
        reason = "transversality"
    else:
        reason = None
    return CertificationReport(
        verdict="ACCEPT" if reason is None else "REJECT",
        reason=reason,
        k0=float(k0),
        value_k0=float(v0),
        payoff=payoff,
        payoff_gap=gap,
        transversality_tail=tail,
        residual_on_path=resid,
        euler_residual_norm=euler,
        terminated=str(traj.terminated),
        t_stop=t_stop,
        tolerances=tols,
        trajectory=traj,
    )


# --- dynamic programming principle --------------------------------------------------


def dpp_check(model, value_estimate, traj, t):
    """V(k(0)) - [J(t) + e^{-rho t} V(k(t))] along a recorded path."""
    if not 0 <= t <= traj.t_end + 1e-12:
        raise DomainError(f"t = {t} outside [0, {traj.t_end}]")
    i = int(np.searchsorted(traj.t, t))
    hit = [j for j in (i - 1, i) if 0 <= j < len(traj.t) and abs(traj.t[j] - t) <= 1e-12 * max(1.0, t)]
    if hit:
        kt, jt = float(traj.k[hit[0]]), float(traj.payoff_partial[hit[0]])
    else:
        kdot = np.array([float(model.production.value(k)) for k in traj.k]) - traj.c
        jdot = np.exp(-traj.rho * traj.t) * traj.u
        kt = float(CubicHermiteSpline(traj.t, traj.k, kdot)(t))
        jt = float(CubicHermiteSpline(traj.t, traj.payoff_partial, jdot)(t))
    if not kt > 0:
        raise DomainError(f"k({t}) = {kt} is not positive")
    return value_estimate.value(float(traj.k[0])) - (jt + math.exp(-model.rho * t) * value_estimate.value(kt))
