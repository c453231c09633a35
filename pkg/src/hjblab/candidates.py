"""Candidate value functions for the growth HJB equation.

Every candidate exposes ``value(k)``, ``deriv(k)``, ``one_sided(k)`` (returning
``(D+, D-)``) and ``describe()``. Closed forms are exact; grid functions are
cubic Hermite (or PCHIP / piecewise-linear) interpolants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import interpolate, optimize

from .errors import (
    ConditionFailed,
    DomainError,
    KinkDerivativeError,
    ParseError,
    SolveFailed,
)
from .hamiltonian import hamiltonian, hjb_residual
from .model import audit_assumptions, find_steady_state


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class Candidate:
    def value(self, k):
        raise NotImplementedError

    def deriv(self, k):
        raise NotImplementedError

    def one_sided(self, k):
        d = self.deriv(k)
        return d, d

    def describe(self):
        return type(self).__name__

    def __call__(self, k):
        return self.value(k)


def _need_positive(k):
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k}")


def _need_nonneg(k):
    if not k >= 0:
        raise DomainError(f"k must be >= 0, got {k}")


@dataclass(frozen=True)
class Prop1Family(Candidate):
    """V(k) = A exp(2 rho sqrt(k) - 2 rho); solves sqrt(k) V' = rho V."""

    A: float
    rho: float = 1.0

    def __post_init__(self):
        if not (self.A > 0 and self.rho > 0):
            raise DomainError("Prop1Family needs A > 0 and rho > 0")

    def value(self, k):
        _need_nonneg(k)
        return self.A * _exp(2.0 * self.rho * math.sqrt(k) - 2.0 * self.rho)

    def deriv(self, k):
        _need_positive(k)
        return self.rho * self.value(k) / math.sqrt(k)

    def describe(self):
        return f"prop1:A={self.A},rho={self.rho}"


@dataclass(frozen=True)
class ClairautGeneral(Candidate):
    """V(k) = A k + 1/(4(A - 1)). Works with Fraction inputs."""

    A: object

    def __post_init__(self):
        if not self.A > 1:
            raise DomainError(f"ClairautGeneral needs A > 1, got {self.A}")

    def value(self, k):
        _need_nonneg(k)
        return self.A * k + 1 / (4 * (self.A - 1))

    def deriv(self, k):
        _need_positive(k)
        return self.A

    def describe(self):
        return f"clairaut:A={self.A}"


@dataclass(frozen=True)
class Prop2Singular(Candidate):
    """V(k) = k + sqrt(k), the envelope of the Clairaut family."""

    def value(self, k):
        _need_nonneg(k)
        return k + math.sqrt(k)

    def deriv(self, k):
        _need_positive(k)
        return 1.0 + 0.5 / math.sqrt(k)

    def describe(self):
        return "prop2-singular"


@dataclass(frozen=True)
class AffineLine(Candidate):
    slope: float
    intercept: float = 0.0

    def value(self, k):
        _need_nonneg(k)
        return self.slope * k + self.intercept

    def deriv(self, k):
        _need_positive(k)
        return self.slope

    def describe(self):
        return f"affine:slope={self.slope},intercept={self.intercept}"


class GridFn(Candidate):
    """Interpolated candidate on an increasing knot vector.

    ``kind='hermite'`` uses the supplied knot derivatives, ``'pchip'`` the
    monotone cubic interpolant of the values, ``'linear'`` the broken line
    (kinks at every interior knot).
    """

    def __init__(self, knots, values, derivs=None, kind=None, info=None):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.knots.ndim != 1 or self.knots.size < 2 or self.knots.shape != self.values.shape:
            raise DomainError("knots and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(self.knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        if kind is None:
            kind = "hermite" if derivs is not None else "pchip"
        self.kind = kind
        self.info = dict(info or {})
        if kind == "hermite":
            if derivs is None:
                raise DomainError("hermite GridFn needs knot derivatives")
            self.derivs = np.asarray(derivs, dtype=float)
            self._spline = interpolate.CubicHermiteSpline(self.knots, self.values, self.derivs)
        elif kind == "pchip":
            self._spline = interpolate.PchipInterpolator(self.knots, self.values)
            self.derivs = self._spline.derivative()(self.knots)
        elif kind == "linear":
            self._spline = None
            self._slopes = np.diff(self.values) / np.diff(self.knots)
            self.derivs = None
        else:
            raise DomainError(f"unknown GridFn kind {kind!r}")
        if self._spline is not None:
            self._dspline = self._spline.derivative()

    @property
    def domain(self):
        return float(self.knots[0]), float(self.knots[-1])

    def _check(self, k):
        lo, hi = self.domain
        if not lo <= k <= hi:
            raise DomainError(f"k={k} outside GridFn knot range [{lo}, {hi}]")

    def value(self, k):
        self._check(k)
        if self._spline is None:
            return float(np.interp(k, self.knots, self.values))
        return float(self._spline(k))

    def _segment(self, k):
        return min(int(np.searchsorted(self.knots, k, side="right")) - 1, self.knots.size - 2)

    def one_sided(self, k):
        self._check(k)
        if self._spline is not None:
            d = float(self._dspline(k))
            return d, d
        i = int(np.searchsorted(self.knots, k, side="left"))
        if i < self.knots.size and self.knots[i] == k:
            left = self._slopes[i - 1] if i > 0 else self._slopes[0]
            right = self._slopes[i] if i < self._slopes.size else self._slopes[-1]
            return float(right), float(left)
        s = float(self._slopes[self._segment(k)])
        return s, s

    def deriv(self, k):
        d_plus, d_minus = self.one_sided(k)
        if d_plus != d_minus:
            raise KinkDerivativeError(f"GridFn(linear) has a kink at knot k={k}")
        return d_plus

    def describe(self):
        lo, hi = self.domain
        return f"grid[{self.kind}]:{lo}..{hi}x{self.knots.size}"

    def to_csv(self, path):
        derivs = self.derivs if self.derivs is not None else [self.one_sided(k)[0] for k in self.knots]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "V", "Vprime"])
            for row in zip(self.knots, self.values, derivs):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows and "k" in rows[0] and "value" in rows[0]:
            # value-table CSV from the DP oracle: keep it piecewise linear
            return cls([float(r["k"]) for r in rows], [float(r["value"]) for r in rows], kind="linear")
        if not rows or "k" not in rows[0] or "V" not in rows[0]:
            raise ParseError(str(path), "GridFn CSV needs columns k, V[, Vprime] or k, value")
        k = [float(r["k"]) for r in rows]
        v = [float(r["V"]) for r in rows]
        d = [float(r["Vprime"]) for r in rows] if "Vprime" in rows[0] else None
        return cls(k, v, d)


class MinOf(Candidate):
    """Pointwise minimum of candidates; ``kinks`` lists switch points."""

    _ACTIVE_RTOL = 1e-12

    def __init__(self, members, kinks=()):
        self.members = tuple(members)
        self.kinks = tuple(kinks)

    def value(self, k):
        return min(m.value(k) for m in self.members)

    def _active(self, k):
        vals = [m.value(k) for m in self.members]
        vmin = min(vals)
        tol = self._ACTIVE_RTOL * max(1.0, abs(vmin))
        return [m for m, v in zip(self.members, vals) if v - vmin <= tol]

    def one_sided(self, k):
        sides = [m.one_sided(k) for m in self._active(k)]
        return min(s[0] for s in sides), max(s[1] for s in sides)

    def deriv(self, k):
        d_plus, d_minus = self.one_sided(k)
        if abs(d_minus - d_plus) > 1e-12 * max(1.0, abs(d_plus)):
            raise KinkDerivativeError(f"min-candidate has a kink at k={k} (D+={d_plus}, D-={d_minus})")
        return d_plus

    def describe(self):
        return "min(" + ",".join(m.describe() for m in self.members) + ")"


def eval_candidate(candidate, k):
    return candidate.value(k)


def deriv_candidate(candidate, k):
    return candidate.deriv(k)


def min_combine(*members, scan=(1e-6, 1e6), n_scan=2001):
    """MinOf wrapper with kinks located by root-finding on pairwise differences."""
    if len(members) == 1 and isinstance(members[0], (list, tuple)):
        members = tuple(members[0])
    if len(members) < 2:
        raise DomainError("min_combine needs at least two candidates")
    combined = MinOf(members)
    grid = np.geomspace(scan[0], scan[1], n_scan)
    kinks = set()
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            a, b = members[i], members[j]

            def diff(k, a=a, b=b):
                return float(a.value(k) - b.value(k))

            d = np.array([diff(k) for k in grid])
            if np.all(d == 0):
                continue
            for s in np.nonzero(d == 0)[0]:
                kinks.add(float(grid[s]))
            for s in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
                kinks.add(optimize.brentq(diff, grid[s], grid[s + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    on_envelope = []
    for k in sorted(kinks):
        active = combined._active(k)
        if len(active) >= 2:
            on_envelope.append(k)
    return MinOf(members, on_envelope)


# ---------------------------------------------------------------------------
# Proposition-1 family diagnostics

def prop1_min_A(rho):
    """Least A with inf_k V'(k) >= 1 for the exponential family.

    V'(k)/A is minimized at k = 1/(4 rho^2).
    """
    if not rho > 0:
        raise DomainError("rho must be positive")
    k_min = 1.0 / (4.0 * rho * rho)
    return 1.0 / Prop1Family(1.0, rho).deriv(k_min)


def chord_violation(candidate, x, y, z, tol=0.0):
    """Amount by which V(y) falls below the chord through x < y < z (positive = not concave)."""
    vx, vy, vz = candidate.value(x), candidate.value(y), candidate.value(z)
    chord = vx + (vz - vx) * (y - x) / (z - x)
    return chord - vy - tol


@dataclass
class DivergenceReport:
    witnesses: dict
    chord_triple: tuple
    chord_excess: float
    passed: bool


def divergence_check(candidate, levels=(10.0, 100.0, 1000.0), triple=(0.1, 1.0, 9.0)):
    """Confirm V' -> +inf at both ends and exhibit a concavity violation."""
    if not isinstance(candidate, Prop1Family):
        raise DomainError("divergence_check applies to Prop1Family candidates")
    rho = candidate.rho
    k_min = 1.0 / (4.0 * rho * rho)
    d_min = candidate.deriv(k_min)
    witnesses = {}
    ok = True
    for m in levels:
        if d_min > m:
            witnesses[m] = (math.inf, 0.0)
            continue
        g = lambda k: candidate.deriv(k) - m
        lo = k_min
        while g(lo) <= 0:
            lo *= 0.5
        delta = optimize.brentq(g, lo, k_min, xtol=1e-300)
        hi = k_min
        while g(hi) <= 0:
            hi *= 2.0
        big_k = optimize.brentq(g, k_min, hi, xtol=1e-12)
        witnesses[m] = (delta, big_k)
        ok &= candidate.deriv(0.5 * delta) > m and candidate.deriv(2.0 * big_k) > m
    excess = chord_violation(candidate, *triple)
    return DivergenceReport(witnesses, triple, excess, bool(ok and excess > 0))


# ---------------------------------------------------------------------------
# HJB as an implicit ODE anchored at the steady state

class _BracketLoss(Exception):
    pass


def _branch_root(model, k, v, side, clamp_rtol=0.0):
    """Root p of H(k, p) = rho v on the side of argmin_p H given by ``side``.

    side = -1 (k above the steady state, capital falling) takes the root below
    u'(f(k)); side = +1 takes the root above it.
    """
    u, f = model.utility, model.production
    target = model.rho * v
    y = float(f.value(k))
    if not y > 0:
        raise _BracketLoss(f"f(k) = {y} <= 0")
    p_min = float(u.prime(y))
    gap = target - hamiltonian(model, k, p_min)
    if gap <= 0:
        if gap == 0 or -gap <= clamp_rtol * max(1.0, abs(target)):
            return p_min
        raise _BracketLoss(f"rho V = {target} below min_p H = {target - gap}")

    def g(p):
        return hamiltonian(model, k, p) - target

    eps = 4 * np.finfo(float).eps
    if side > 0:
        hi = 2.0 * p_min
        for _ in range(2000):
            if g(hi) >= 0:
                break
            hi *= 2.0
        else:
            raise _BracketLoss("no upper bracket")
        return optimize.brentq(g, p_min, hi, xtol=1e-300, rtol=eps)
    lo = 0.5 * p_min
    for _ in range(2000):
        if g(lo) >= 0:
            break
        lo *= 0.5
    else:
        raise _BracketLoss("no lower bracket")
    return optimize.brentq(g, lo, p_min, xtol=1e-300, rtol=eps)


def _rk4_march(model, k0, v0, k_end, h, side, clamp_rtol):
    """RK4 on V' = p(k, V) from (k0, v0) to k_end; returns (ks, vs, ps)."""
    direction = 1.0 if k_end > k0 else -1.0
    k, v = k0, v0
    p = _branch_root(model, k, v, side, clamp_rtol)
    ks, vs, ps = [k], [v], [p]
    while (k_end - k) * direction > 1e-12 * abs(k_end):
        hh = direction * min(h, abs(k_end - k))
        try:
            p2 = _branch_root(model, k + hh / 2, v + hh / 2 * p, side, clamp_rtol)
            p3 = _branch_root(model, k + hh / 2, v + hh / 2 * p2, side, clamp_rtol)
            p4 = _branch_root(model, k + hh, v + hh * p3, side, clamp_rtol)
            v = v + hh / 6.0 * (p + 2 * p2 + 2 * p3 + p4)
            k = k_end if abs(k_end - (k + hh)) <= 1e-12 * abs(k_end) else k + hh
            p = _branch_root(model, k, v, side, clamp_rtol)
        except _BracketLoss as exc:
            raise SolveFailed(ks[-1], str(exc)) from None
        ks.append(k)
        vs.append(v)
        ps.append(p)
    return ks, vs, ps


def _steady_state_data(model, k_star):
    u, f, rho = model.utility, model.production, model.rho
    c_star = float(f.value(k_star))
    v_star = float(u.value(c_star)) / rho
    p_star = float(u.prime(c_star))
    f2 = f.second(k_star)
    if f2 is None:
        raise ConditionFailed("smooth steady state", f"f has a kink at k*={k_star}")
    h_pp = -1.0 / float(u.second(c_star))
    h_kk = f2 * p_star
    # second derivative of V at k*: concave root of H_pp q^2 + rho q + H_kk = 0
    q = (-rho - math.sqrt(rho * rho - 4.0 * h_pp * h_kk)) / (2.0 * h_pp)
    return v_star, p_star, q


def solve_hjb_from_steady_state(model, k_range, step=None, strategy="steady-state",
                                clamp_rtol=1e-9):
    """Integrate the HJB outward from the steady state and return a GridFn.

    V(k*) = u(f(k*))/rho; the first step uses the second-order expansion at k*
    and RK4 continues outward, taking at each k the root of H(k, p) = rho V
    on the concave branch. ``strategy='shooting'`` instead bisects on the
    boundary values V(k_lo), V(k_hi) and integrates toward k*.
    """
    k_lo, k_hi = map(float, k_range)
    if not 0 < k_lo < k_hi:
        raise DomainError(f"bad k_range {k_range}")
    k_star = find_steady_state(model)
    audit = audit_assumptions(model)
    for name in ("Thm2(i)", "Thm2(ii)"):
        if not audit.checks[name].passed:
            raise ConditionFailed(name, audit.checks[name].detail)
    if not k_lo < k_star < k_hi:
        raise ConditionFailed("k* in k_range", f"k*={k_star} not inside {k_range}")
    h = step if step is not None else 1e-3 * k_star
    v_star, p_star, q = _steady_state_data(model, k_star)

    if strategy == "steady-state":
        sides = []
        for k_end, side in ((k_hi, -1), (k_lo, +1)):
            hh = math.copysign(min(h, abs(k_end - k_star)), k_end - k_star)
            k1 = k_star + hh
            v1 = v_star + p_star * hh + 0.5 * q * hh * hh
            ks, vs, ps = _rk4_march(model, k1, v1, k_end, h, side, clamp_rtol)
            sides.append((ks, vs, ps))
        (rk, rv, rp), (lk, lv, lp) = sides
        knots = lk[::-1] + [k_star] + rk
        values = lv[::-1] + [v_star] + rv
        derivs = lp[::-1] + [p_star] + rp
    elif strategy == "shooting":
        lk, lv, lp = _shoot(model, k_lo, k_star, v_star, p_star, q, h, +1)
        rk, rv, rp = _shoot(model, k_hi, k_star, v_star, p_star, q, h, -1)
        knots = lk + [k_star] + rk[::-1]
        values = lv + [v_star] + rv[::-1]
        derivs = lp + [p_star] + rp[::-1]
    else:
        raise DomainError(f"unknown strategy {strategy!r}")

    gf = GridFn(knots, values, derivs, kind="hermite")
    res = max(abs(hjb_residual(model, gf, k)) for k in gf.knots)
    slopes = np.diff(gf.values) / np.diff(gf.knots)
    mids = 0.5 * (gf.derivs[1:] + gf.derivs[:-1])
    gf.info.update(
        k_star=k_star,
        v_star=v_star,
        strategy=strategy,
        step=h,
        knot_residual_sup=float(res),
        slope_consistency=float(np.max(np.abs(slopes - mids))),
    )
    return gf


def _shoot(model, k_far, k_star, v_star, p_star, q, h, side, tol=1e-12, max_iter=200):
    """Bisect on V(k_far) so the integration toward k* meets the local expansion."""
    direction = math.copysign(1.0, k_star - k_far)
    k_stop = k_star - direction * min(h, 0.5 * abs(k_star - k_far))
    dk = k_stop - k_star
    v_target = v_star + p_star * dk + 0.5 * q * dk * dk

    def classify(v):
        try:
            ks, vs, ps = _rk4_march(model, k_far, v, k_stop, h, side, 0.0)
        except (SolveFailed, _BracketLoss):
            return -1, None
        return (1 if vs[-1] > v_target else -1), (ks, vs, ps)

    # V is increasing, so V(k_far) lies on the side of v_star given by -direction
    width = max(1.0, abs(p_star * (k_star - k_far)))
    lo, hi = (v_star - width, v_star) if direction > 0 else (v_star, v_star + width)
    for _ in range(200):
        if classify(lo)[0] < 0:
            break
        lo -= width
        width *= 2
    for _ in range(200):
        if classify(hi)[0] > 0:
            break
        hi += width
        width *= 2
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        sign, path = classify(mid)
        if path is not None:
            best = path
        if sign > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, abs(v_star)):
            break
    if best is None:
        raise SolveFailed(k_far, "shooting never reached the steady state")
    return best


# ---------------------------------------------------------------------------
# descriptor mini-language

_KINDS = ("prop1:", "clairaut:", "prop2-singular", "affine:", "zero", "min(", "grid:")


def _kv(body, path):
    out = {}
    if not body:
        return out
    for part in body.split(","):
        if "=" not in part:
            raise ParseError(path, f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ParseError(f"{path}.{key.strip()}", f"not a number: {val!r}") from None
    return out


def _split_top(body):
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    merged = []
    for p in parts:
        p = p.strip()
        if merged and not p.startswith(_KINDS):
            merged[-1] += "," + p
        else:
            merged.append(p)
    return merged


def parse_candidate(desc, model=None):
    """Build a candidate from a compact descriptor such as ``clairaut:A=2``."""
    d = desc.strip()
    rho = model.rho if model is not None else 1.0
    try:
        if d.startswith("min(") and d.endswith(")"):
            parts = _split_top(d[4:-1])
            return min_combine(*[parse_candidate(p, model) for p in parts])
        if d == "prop2-singular":
            return Prop2Singular()
        if d == "zero":
            return AffineLine(0.0, 0.0)
        if d.startswith("grid:"):
            return GridFn.from_csv(d[5:])
        kind, _, body = d.partition(":")
        kw = _kv(body, kind)
        if kind == "prop1":
            return Prop1Family(kw["A"], kw.get("rho", rho))
        if kind == "clairaut":
            return ClairautGeneral(kw["A"])
        if kind == "affine":
            return AffineLine(kw["slope"], kw.get("intercept", 0.0))
    except KeyError as exc:
        raise ParseError(desc, f"missing parameter {exc}") from None
    except DomainError as exc:
        raise ParseError(desc, str(exc)) from None
    except OSError as exc:
        raise ParseError(desc, str(exc)) from None
    raise ParseError(desc, "unrecognized candidate descriptor")
