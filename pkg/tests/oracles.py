"""Independent reference computations used as test oracles.

Nothing here calls the closed forms under test: conjugates come from brute
force maximization, derivatives from finite differences, thresholds from grid
scans.
"""

import numpy as np


def conjugate_by_grid(u, p, c_hi=1e6, n=400_001):
    """sup_{c in [0, c_hi]} u(c) - p c on a log-dense grid plus local refinement."""
    c = np.concatenate(([0.0], np.geomspace(1e-12, c_hi, n)))
    vals = u(c) - p * c
    i = int(np.argmax(vals))
    lo, hi = c[max(i - 1, 0)], c[min(i + 1, c.size - 1)]
    fine = np.linspace(lo, hi, 20_001)
    return float(max(vals[i], np.max(u(fine) - p * fine)))


def hamiltonian_by_grid(f_k, u, p, c_hi=1e6):
    """sup_c (f(k) - c) p + u(c) = f(k) p + sup_c u(c) - p c."""
    return f_k * p + conjugate_by_grid(u, p, c_hi)


def central_diff(g, x, h=1e-5):
    return (g(x + h) - g(x - h)) / (2 * h)


def richardson_diff(g, x, h=1e-3):
    d1 = central_diff(g, x, h)
    d2 = central_diff(g, x, h / 2)
    return (4 * d2 - d1) / 3


def prop1_min_A_by_grid(rho, lo=1e-6, hi=1e6, n=2_000_001):
    """Least A with A * d/dk exp(2 rho sqrt k - 2 rho) >= 1, by scanning finite differences."""
    k = np.geomspace(lo, hi, n)
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.exp(2 * rho * np.sqrt(k) - 2 * rho)
        slope = np.gradient(v, k)
    # the far tail overflows to inf/nan; the minimum sits at moderate k
    return 1.0 / float(np.nanmin(slope))


def golden_grid_min(fun, a, b, n=10_001):
    ps = np.linspace(a, b, n)
    vals = np.array([fun(p) for p in ps])
    i = int(np.argmin(vals))
    return float(ps[i]), float(vals[i])
