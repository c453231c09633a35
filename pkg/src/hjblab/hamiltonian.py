"""The HJB left-hand side H(k, p) = sup_{c>=0} (f(k) - c) p + u(c) and residuals.

H is computed through the concave conjugate, H(k, p) = f(k) p + u*(p), and is
an extended real: p <= 0, or p where u* diverges, gives +inf.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import extended as ext
from .errors import DomainError, NotInvertible


@dataclass(frozen=True)
class Degenerate:
    """Maximizer of the Hamiltonian is not unique or the supremum is not attained."""

    reason: str


def hamiltonian(model, k, p):
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k}")
    if p <= 0:
        return math.inf
    conj = model.utility.conjugate(p)
    if conj == math.inf:
        return math.inf
    return float(model.production.value(k)) * p + conj


def optimal_control(model, k, p):
    """argmax_c (f(k) - c) p + u(c), or a Degenerate marker."""
    if not k > 0:
        raise DomainError(f"k must be > 0, got {k}")
    u = model.utility
    if p <= 0:
        return Degenerate(f"p = {p} <= 0: consumption is rewarded without bound")
    try:
        return u.prime_inverse(p)
    except NotInvertible:
        hi = u.marginal_range()[1]
        if p > hi:
            return 0.0
        return Degenerate(f"p = {p} within [inf u', sup u'] = {u.marginal_range()} but u' is not invertible there")


def hjb_residual(model, candidate, k):
    """H(k, V'(k)) - rho V(k) as an extended real."""
    return ext.sub(hamiltonian(model, k, candidate.deriv(k)), model.rho * candidate.value(k))


def make_grid(lo, hi, n, log=False):
    if not (0 < lo < hi and n >= 2):
        raise DomainError(f"bad grid {lo}:{hi}:{n}")
    return np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)


@dataclass
class ResidualProfile:
    grid: np.ndarray
    residual: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    @property
    def finite(self):
        return np.isfinite(self.residual)

    @property
    def sup_norm_finite(self):
        r = self.residual[self.finite]
        return float(np.max(np.abs(r))) if r.size else 0.0

    @property
    def count_infinite(self):
        return int(np.sum(~self.finite))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "residual", "V", "Vprime"])
            for k, r, v, d in zip(self.grid, self.residual, self.values, self.derivs):
                w.writerow([repr(float(k)), ext.to_str(r), repr(float(v)), repr(float(d))])


def residual_profile(model, candidate, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing and positive")
    values = np.array([candidate.value(k) for k in grid], dtype=float)
    derivs = np.array([candidate.deriv(k) for k in grid], dtype=float)
    residual = np.array([
        ext.sub(hamiltonian(model, k, d), model.rho * v) for k, v, d in zip(grid, values, derivs)
    ])
    return ResidualProfile(grid, residual, values, derivs)
