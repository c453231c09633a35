"""Pointwise viscosity sub/supersolution tests for concave candidates.

Orientation follows the maximization convention: a smooth function touching
V from below tests the subsolution inequality H(k, phi'(k)) <= rho V(k), one
touching from above tests the supersolution inequality H(k, phi'(k)) >= rho V(k).
For concave V the touching slopes from above are exactly [D+V(k), D-V(k)];
from below a C^1 function can only touch where D+ = D-, so the subsolution
test is vacuous at a concave kink.

A grid checker can refute, never confirm: summaries report "no violation
found on grid".
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from . import extended as ext
from .errors import DomainError, NotConcaveHere
from .hamiltonian import hamiltonian

DEFAULT_TOL = 1e-7
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Holds:
    def __str__(self):
        return "Holds"


@dataclass(frozen=True)
class Vacuous:
    def __str__(self):
        return "Vacuous"


@dataclass(frozen=True)
class Violated:
    gap: float
    worst_p: float | None = None

    def __str__(self):
        return "Violated"


@dataclass
class ViscosityVerdict:
    k: float
    sub: object
    super: object
    d_plus: float
    d_minus: float

    @property
    def violated(self):
        return isinstance(self.sub, Violated) or isinstance(self.super, Violated)


def _richardson_one_sided(candidate, k, sign, h0=1e-3, levels=4):
    h = h0 * max(1.0, abs(k))
    table = []
    v0 = candidate.value(k)
    for i in range(levels):
        hi = h / 2**i
        table.append([(candidate.value(k + sign * hi) - v0) / (sign * hi)])
    for j in range(1, levels):
        for i in range(j, levels):
            table[i].append((2**j * table[i][j - 1] - table[i - 1][j - 1]) / (2**j - 1))
    return table[-1][-1]


def one_sided_derivatives(candidate, k, concavity_tol=1e-9):
    """(D+V(k), D-V(k)); analytic where the candidate provides them.

    Candidates without ``one_sided`` fall back to Richardson-extrapolated
    difference quotients after a chord test on shrinking stencils.
    """
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k}")
    mid = candidate.value(k)
    scale = max(1.0, abs(mid))
    for h in (1e-2, 1e-3, 1e-4):
        hk = h * k
        try:
            left, right = candidate.value(k - hk), candidate.value(k + hk)
        except DomainError:
            continue  # stencil leaves the candidate's domain
        if 0.5 * (left + right) - mid > concavity_tol * scale:
            raise NotConcaveHere(k, f"(chord test at h={hk})")
    if hasattr(candidate, "one_sided"):
        d_plus, d_minus = candidate.one_sided(k)
    else:
        d_plus = _richardson_one_sided(candidate, k, +1)
        d_minus = _richardson_one_sided(candidate, k, -1)
    if d_plus > d_minus + concavity_tol * max(1.0, abs(d_minus)):
        raise NotConcaveHere(k, f"(D+={d_plus} > D-={d_minus})")
    return d_plus, d_minus


def _is_kink(d_plus, d_minus):
    return d_minus - d_plus > 1e-12 * max(1.0, abs(d_plus))


def check_subsolution_at(model, candidate, k, tol=DEFAULT_TOL, sides=None):
    d_plus, d_minus = sides or one_sided_derivatives(candidate, k)
    if _is_kink(d_plus, d_minus):
        return Vacuous()
    gap = ext.sub(hamiltonian(model, k, d_plus), model.rho * candidate.value(k))
    return Violated(gap, d_plus) if gap > tol else Holds()


def golden_section_min(fun, a, b, xtol=1e-12, max_iter=200):
    """Minimize a convex extended-real function on [a, b]; endpoints included."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    x_in, f_in = (c, fc) if fc <= fd else (d, fd)
    best = min([(f_in, x_in), (fun(a), a), (fun(b), b)], key=lambda t: t[0])
    return best[1], best[0]


def check_supersolution_at(model, candidate, k, tol=DEFAULT_TOL, sides=None):
    d_plus, d_minus = sides or one_sided_derivatives(candidate, k)
    target = model.rho * candidate.value(k)
    if _is_kink(d_plus, d_minus):
        p, h_min = golden_section_min(lambda p: hamiltonian(model, k, p), d_plus, d_minus)
    else:
        p, h_min = d_plus, hamiltonian(model, k, d_plus)
    gap = ext.sub(target, h_min)
    return Violated(gap, p) if gap > tol else Holds()


def check_at(model, candidate, k, tol=DEFAULT_TOL):
    sides = one_sided_derivatives(candidate, k)
    return ViscosityVerdict(
        k=float(k),
        sub=check_subsolution_at(model, candidate, k, tol, sides),
        super=check_supersolution_at(model, candidate, k, tol, sides),
        d_plus=sides[0],
        d_minus=sides[1],
    )


@dataclass
class ViscosityReport:
    verdicts: list
    tol: float

    @property
    def violations(self):
        return [v for v in self.verdicts if v.violated]

    @property
    def consistent(self):
        return not self.violations

    def summary(self):
        if self.consistent:
            return f"no violation found on grid ({len(self.verdicts)} points, tol={self.tol})"
        ks = ", ".join(f"{v.k:.6g}" for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else ", ..."
        return f"{len(self.violations)} violation(s) on grid at k = {ks}{more}"

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "d_plus", "d_minus", "sub_status", "super_status", "gap", "worst_p"])
            for v in self.verdicts:
                bad = v.super if isinstance(v.super, Violated) else v.sub
                gap = ext.to_str(bad.gap) if isinstance(bad, Violated) else ""
                wp = repr(float(bad.worst_p)) if isinstance(bad, Violated) and bad.worst_p is not None else ""
                w.writerow([repr(v.k), repr(float(v.d_plus)), repr(float(v.d_minus)),
                            str(v.sub), str(v.super), gap, wp])


def viscosity_report(model, candidate, grid, tol=DEFAULT_TOL):
    verdicts = []
    for k in grid:
        try:
            verdicts.append(check_at(model, candidate, float(k), tol))
        except NotConcaveHere as exc:
            raise NotConcaveHere(float(k), "(viscosity_report requires a concave candidate)") from exc
    return ViscosityReport(verdicts, tol)
