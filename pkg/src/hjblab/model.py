"""Growth-model specifications: utility and production catalogs, steady states,
assumption audits and the JSON model document.

All catalog functions accept scalars or numpy arrays; scalar calls return
floats. ``u(0)`` may be ``-inf`` (CRRA with theta >= 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionFailed, DomainError, NotInvertible, NotIsolated, ParseError

INF = math.inf


def _nonneg(x, name):
    if type(x) is float:
        if not x >= 0:
            raise DomainError(f"{name} must be >= 0, got {x}")
    elif np.any(np.asarray(x) < 0):
        raise DomainError(f"{name} must be >= 0, got {x}")


def _positive(x, name):
    if type(x) is float:
        if not x > 0:
            raise DomainError(f"{name} must be > 0, got {x}")
    elif np.any(np.asarray(x) <= 0):
        raise DomainError(f"{name} must be > 0, got {x}")


def _out(x):
    return float(x) if type(x) is np.float64 or np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# utilities

@dataclass(frozen=True)
class Linear:
    """u(c) = c."""

    kind = "Linear"

    def value(self, c):
        _nonneg(c, "c")
        return _out(np.asarray(c, dtype=float))

    def prime(self, c):
        _positive(c, "c")
        return _out(np.ones_like(np.asarray(c, dtype=float)))

    def second(self, c):
        _positive(c, "c")
        return 0.0

    def marginal_range(self):
        return (1.0, 1.0)

    def prime_inverse(self, p):
        raise NotInvertible(p, self.marginal_range(), f"u' is constant (=1); cannot invert at p={p}")

    def conjugate(self, p):
        _positive(p, "p")
        return 0.0 if p >= 1.0 else INF

    def params(self):
        return {}


@dataclass(frozen=True)
class SqrtShift:
    """u(c) = c + sqrt(c)."""

    kind = "SqrtShift"

    def value(self, c):
        _nonneg(c, "c")
        if type(c) is float:
            return c + math.sqrt(c)
        c = np.asarray(c, dtype=float)
        return _out(c + np.sqrt(c))

    def prime(self, c):
        _positive(c, "c")
        c = np.asarray(c, dtype=float)
        return _out(1.0 + 0.5 / np.sqrt(c))

    def second(self, c):
        _positive(c, "c")
        return _out(-0.25 * np.asarray(c, dtype=float) ** -1.5)

    def marginal_range(self):
        return (1.0, INF)

    def prime_inverse(self, p):
        if not p > 1.0:
            raise NotInvertible(p, self.marginal_range())
        return 1.0 / (4.0 * (p - 1.0) ** 2)

    def conjugate(self, p):
        _positive(p, "p")
        if p <= 1.0:
            return INF
        return 1.0 / (4.0 * (p - 1.0))

    def params(self):
        return {}


@dataclass(frozen=True)
class CRRA:
    """u(c) = (c^(1-theta) - 1)/(1-theta), log c at theta = 1."""

    theta: float
    kind = "CRRA"

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"CRRA theta must be positive, got {self.theta}")

    def value(self, c):
        _nonneg(c, "c")
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            if self.theta == 1.0:
                out = np.log(c)
            else:
                out = (c ** (1.0 - self.theta) - 1.0) / (1.0 - self.theta)
        return _out(out)

    def prime(self, c):
        _positive(c, "c")
        return _out(np.asarray(c, dtype=float) ** -self.theta)

    def second(self, c):
        _positive(c, "c")
        return _out(-self.theta * np.asarray(c, dtype=float) ** (-self.theta - 1.0))

    def marginal_range(self):
        return (0.0, INF)

    def prime_inverse(self, p):
        if not p > 0:
            raise NotInvertible(p, self.marginal_range())
        return p ** (-1.0 / self.theta)

    def conjugate(self, p):
        _positive(p, "p")
        c = self.prime_inverse(p)
        return self.value(c) - p * c

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class ScaledSqrt:
    """u(c) = a * sqrt(c)."""

    a: float
    kind = "ScaledSqrt"

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"ScaledSqrt a must be positive, got {self.a}")

    def value(self, c):
        _nonneg(c, "c")
        if type(c) is float:
            return self.a * math.sqrt(c)
        return _out(self.a * np.sqrt(np.asarray(c, dtype=float)))

    def prime(self, c):
        _positive(c, "c")
        if type(c) is float:
            return 0.5 * self.a / math.sqrt(c)
        return _out(0.5 * self.a / np.sqrt(np.asarray(c, dtype=float)))

    def second(self, c):
        _positive(c, "c")
        return _out(-0.25 * self.a * np.asarray(c, dtype=float) ** -1.5)

    def marginal_range(self):
        return (0.0, INF)

    def prime_inverse(self, p):
        if not p > 0:
            raise NotInvertible(p, self.marginal_range())
        return (0.5 * self.a / p) ** 2

    def conjugate(self, p):
        _positive(p, "p")
        return self.a**2 / (4.0 * p)

    def params(self):
        return {"a": self.a}


UtilitySpec = Linear | SqrtShift | CRRA | ScaledSqrt


def u_eval(utility, c):
    return utility.value(c)


def u_prime(utility, c):
    return utility.prime(c)


def u_prime_inverse(utility, p):
    return utility.prime_inverse(p)


def u_conjugate(utility, p):
    """sup_{c >= 0} u(c) - p c, +inf when unbounded. Requires p > 0."""
    return utility.conjugate(p)


def marginal_is_decreasing(utility):
    return not isinstance(utility, Linear)


# ---------------------------------------------------------------------------
# production

@dataclass(frozen=True)
class SubdifferentialInterval:
    """[D+ f(k), D- f(k)] of a concave function."""

    lower: float
    upper: float

    def __contains__(self, r):
        return self.lower <= r <= self.upper

    @property
    def degenerate(self):
        return self.lower == self.upper


@dataclass(frozen=True)
class Sqrt:
    kind = "Sqrt"

    def value(self, k):
        _nonneg(k, "k")
        if type(k) is float:
            return math.sqrt(k)
        return _out(np.sqrt(np.asarray(k, dtype=float)))

    def subdifferential(self, k):
        _positive(k, "k")
        d = 0.5 / math.sqrt(k)
        return SubdifferentialInterval(d, d)

    def right_derivative(self, k):
        _nonneg(k, "k")
        return INF if k == 0 else 0.5 / math.sqrt(k)

    def second(self, k):
        _positive(k, "k")
        return -0.25 * k**-1.5

    def kinks(self):
        return ()

    def flat_segment(self, r):
        return None

    def params(self):
        return {}


@dataclass(frozen=True)
class LinearProd:
    """f(k) = slope * k."""

    slope: float = 1.0
    kind = "LinearProd"

    def __post_init__(self):
        if not self.slope > 0:
            raise DomainError(f"LinearProd slope must be positive, got {self.slope}")

    def value(self, k):
        _nonneg(k, "k")
        if type(k) is float:
            return self.slope * k
        return _out(self.slope * np.asarray(k, dtype=float))

    def subdifferential(self, k):
        _positive(k, "k")
        return SubdifferentialInterval(self.slope, self.slope)

    def right_derivative(self, k):
        _nonneg(k, "k")
        return self.slope

    def second(self, k):
        return 0.0

    def kinks(self):
        return ()

    def flat_segment(self, r):
        return (0.0, INF) if r == self.slope else None

    def params(self):
        return {} if self.slope == 1.0 else {"slope": self.slope}


@dataclass(frozen=True)
class PiecewiseLinearConcave:
    """f(0) = 0, slope ``slopes[i]`` between consecutive breakpoints."""

    breakpoints: tuple
    slopes: tuple
    kind = "PiecewiseLinearConcave"

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if len(sl) != len(bp) + 1:
            raise DomainError("need len(slopes) == len(breakpoints) + 1")
        if any(b <= 0 for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise DomainError("breakpoints must be positive and increasing")
        if any(s2 >= s1 for s1, s2 in zip(sl, sl[1:])):
            raise DomainError("slopes must be strictly decreasing")
        knots = [0.0, *bp]
        vals = [0.0]
        for i, b in enumerate(bp):
            vals.append(vals[-1] + sl[i] * (b - knots[i]))
        object.__setattr__(self, "_knot_values", tuple(vals))

    def value(self, k):
        _nonneg(k, "k")
        k = np.asarray(k, dtype=float)
        knots = np.array([0.0, *self.breakpoints])
        idx = np.searchsorted(knots, k, side="right") - 1
        vals = np.array(self._knot_values)
        out = vals[idx] + np.array(self.slopes)[idx] * (k - knots[idx])
        return _out(out)

    def subdifferential(self, k):
        _positive(k, "k")
        i = int(np.searchsorted(self.breakpoints, k, side="left"))
        if i < len(self.breakpoints) and self.breakpoints[i] == k:
            return SubdifferentialInterval(self.slopes[i + 1], self.slopes[i])
        return SubdifferentialInterval(self.slopes[i], self.slopes[i])

    def right_derivative(self, k):
        _nonneg(k, "k")
        if k == 0:
            return self.slopes[0]
        return self.subdifferential(k).lower

    def second(self, k):
        if k in self.breakpoints:
            return None
        return 0.0

    def kinks(self):
        return self.breakpoints

    def flat_segment(self, r):
        edges = [0.0, *self.breakpoints, INF]
        for i, s in enumerate(self.slopes):
            if s == r:
                return (edges[i], edges[i + 1])
        return None

    def params(self):
        return {"breakpoints": list(self.breakpoints), "slopes": list(self.slopes)}


@dataclass(frozen=True)
class AffineCapped:
    """The affine majorant g(k) = p2 (k - k2) + base(k2); g(0) need not vanish."""

    k2: float
    p2: float
    base: object
    kind = "AffineCapped"

    def __post_init__(self):
        if not (self.k2 > 0 and self.p2 > 0):
            raise DomainError("AffineCapped needs k2 > 0 and p2 > 0")
        if self.p2 not in self.base.subdifferential(self.k2):
            raise DomainError(f"p2={self.p2} is not in the subdifferential of base at k2={self.k2}")

    def value(self, k):
        _nonneg(k, "k")
        k = np.asarray(k, dtype=float)
        return _out(self.p2 * (k - self.k2) + self.base.value(self.k2))

    def subdifferential(self, k):
        _positive(k, "k")
        return SubdifferentialInterval(self.p2, self.p2)

    def right_derivative(self, k):
        return self.p2

    def second(self, k):
        return 0.0

    def kinks(self):
        return ()

    def flat_segment(self, r):
        return (0.0, INF) if r == self.p2 else None

    def params(self):
        return {"k2": self.k2, "p2": self.p2, "base": production_to_dict(self.base)}


ProductionSpec = Sqrt | LinearProd | PiecewiseLinearConcave | AffineCapped


def f_eval(production, k):
    return production.value(k)


def f_subdifferential(production, k):
    return production.subdifferential(k)


# ---------------------------------------------------------------------------
# model

@dataclass(frozen=True)
class ModelSpec:
    rho: float
    utility: object
    production: object

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")

    def to_dict(self):
        return {
            "rho": self.rho,
            "utility": {"kind": self.utility.kind, "params": self.utility.params()},
            "production": production_to_dict(self.production),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def prop1_model(rho=1.0):
    return ModelSpec(rho, Linear(), Sqrt())


def prop2_model():
    return ModelSpec(1.0, SqrtShift(), LinearProd())


def theorem2_model():
    return ModelSpec(1.0, ScaledSqrt(2.0), Sqrt())


PRESETS = {"prop1": prop1_model, "prop2": prop2_model, "theorem2": theorem2_model}


# ---------------------------------------------------------------------------
# steady state and audit

def find_steady_state(model, search=(1e-8, 1e8)):
    """Capital k* with rho in the subdifferential of f at k*.

    Bisection on the monotone map k -> subdifferential(k), run to float
    resolution. Raises NotIsolated when rho is a slope of f on a whole
    segment, ConditionFailed when the bracket does not straddle rho.
    """
    rho, f = model.rho, model.production
    k1, k2 = map(float, search)
    if not 0 < k1 < k2:
        raise DomainError(f"search interval must satisfy 0 < k1 < k2, got {search}")
    flat = f.flat_segment(rho)
    if flat is not None and min(flat[1], k2) > max(flat[0], k1):
        raise NotIsolated(flat)
    if not f.right_derivative(k1) > rho:
        raise ConditionFailed("D+f(k1) > rho", f"D+f({k1}) = {f.right_derivative(k1)} <= rho = {rho}")
    if not f.subdifferential(k2).lower < rho:
        raise ConditionFailed("p2 < rho", f"no p2 in subdifferential of f at k2={k2} below rho = {rho}")
    for kink in f.kinks():
        if k1 <= kink <= k2 and rho in f.subdifferential(kink):
            return float(kink)
    lo, hi = k1, k2
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        s = f.subdifferential(mid)
        if s.lower > rho:
            lo = mid
        elif s.upper < rho:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


@dataclass
class Check:
    passed: bool
    detail: str = ""
    witness: dict = field(default_factory=dict)


@dataclass
class AuditReport:
    checks: dict

    @property
    def theorem2(self):
        return all(self.checks[name].passed for name in ("R", "U", "F", "Thm2(i)", "Thm2(ii)"))

    def lines(self):
        out = []
        for name, chk in self.checks.items():
            status = "PASS" if chk.passed else "FAIL"
            out.append(f"{name}: {status} ({chk.detail})" if chk.detail else f"{name}: {status}")
        return out

    def to_dict(self):
        return {
            name: {"passed": c.passed, "detail": c.detail, "witness": c.witness}
            for name, c in self.checks.items()
        }


_K1_CANDIDATES = [10.0**-j for j in range(2, 13)]
_K2_CANDIDATES = [4.0 * 4.0**j for j in range(15)]


def audit_assumptions(model):
    rho, u, f = model.rho, model.utility, model.production
    checks = {}
    checks["R"] = Check(rho > 0, f"rho = {rho}")
    checks["U"] = Check(True, f"{u.kind} is continuous, concave, increasing by construction")

    f0 = float(f.value(0.0))
    if isinstance(f, AffineCapped):
        checks["F"] = Check(f0 == 0.0, f"majorant g(0) = {f0}", {"f(0)": f0})
    else:
        checks["F"] = Check(f0 == 0.0, f"{f.kind} concave, f(0) = {f0}", {"f(0)": f0})

    lo, hi = u.marginal_range()
    if not marginal_is_decreasing(u):
        checks["Thm2(i)"] = Check(False, "u' constant", {"range": [lo, hi]})
    elif (lo, hi) != (0.0, INF):
        checks["Thm2(i)"] = Check(False, f"range(u') = ({lo}, {hi}) != (0, inf)", {"range": [lo, hi]})
    else:
        checks["Thm2(i)"] = Check(True, "u' decreasing onto (0, inf)", {"range": [lo, hi]})

    k1 = next((k for k in _K1_CANDIDATES if f.right_derivative(k) > rho), None)
    k2 = p2 = None
    for k in _K2_CANDIDATES:
        low = f.subdifferential(k).lower
        if 0 < low < rho:
            k2, p2 = k, low
            break
    problems = []
    if k1 is None:
        problems.append(f"no k1 with D+f(k1) > rho among {_K1_CANDIDATES[0]}..{_K1_CANDIDATES[-1]}")
    if k2 is None:
        problems.append("no p2 < rho")
    witness = {"k1": k1, "k2": k2, "p2": p2}
    if problems:
        checks["Thm2(ii)"] = Check(False, "; ".join(problems), witness)
    else:
        checks["Thm2(ii)"] = Check(True, f"D+f({k1}) > rho > p2 = {p2} at k2 = {k2}", witness)
    return AuditReport(checks)


# ---------------------------------------------------------------------------
# JSON

_UTILITIES = {"Linear": Linear, "SqrtShift": SqrtShift, "CRRA": CRRA, "ScaledSqrt": ScaledSqrt}
_PRODUCTIONS = {"Sqrt": Sqrt, "LinearProd": LinearProd,
                "PiecewiseLinearConcave": PiecewiseLinearConcave, "AffineCapped": AffineCapped}


def production_to_dict(f):
    return {"kind": f.kind, "params": f.params()}


def _build(table, doc, path):
    if not isinstance(doc, dict):
        raise ParseError(path, "expected an object")
    kind = doc.get("kind")
    if kind not in table:
        raise ParseError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {sorted(table)}")
    params = dict(doc.get("params") or {})
    if kind == "AffineCapped" and "base" in params:
        params["base"] = _build(_PRODUCTIONS, params["base"], f"{path}.params.base")
    try:
        return table[kind](**params)
    except TypeError as exc:
        raise ParseError(f"{path}.params", str(exc)) from None
    except DomainError as exc:
        raise ParseError(f"{path}.params", str(exc)) from None


def model_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("$", "model document must be an object")
    if "rho" not in doc:
        raise ParseError("rho", "missing")
    try:
        rho = float(doc["rho"])
    except (TypeError, ValueError):
        raise ParseError("rho", f"not a number: {doc['rho']!r}") from None
    if not rho > 0:
        raise ParseError("rho", "must be positive")
    if "utility" not in doc:
        raise ParseError("utility", "missing")
    if "production" not in doc:
        raise ParseError("production", "missing")
    return ModelSpec(rho, _build(_UTILITIES, doc["utility"], "utility"),
                     _build(_PRODUCTIONS, doc["production"], "production"))


def model_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("$", f"invalid JSON: {exc}") from None
    return model_from_dict(doc)
