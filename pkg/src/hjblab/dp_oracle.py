"""Backward-induction estimate of the value function.

Time is discretized with step dt, the state update is explicit Euler
k' = k + (f(k) - c) dt, and continuation values are linearly interpolated on
the k-grid. The grid is augmented with an absorbing node at k = 0 where only
c = 0 is feasible. Next states above the grid top are clamped to it, which
biases the estimate downward near the top; probe well inside the grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .candidates import GridFn
from .errors import ConfigError, DomainError

DP_ERROR_BOUND = 0.05


def default_k_grid():
    return np.linspace(0.01, 4.0, 400)


@dataclass
class DPConfig:
    dt: float = 0.01
    T: float = 30.0
    k_grid: np.ndarray = field(default_factory=default_k_grid)
    c_max: float = 8.0
    c_grid_size: int = 201
    terminal: str = "zero"  # "zero" or "bound"
    c_floor: float | None = None

    def __post_init__(self):
        self.k_grid = np.asarray(self.k_grid, dtype=float)
        if not (self.dt > 0 and self.T > 0 and self.dt <= self.T):
            raise ConfigError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if not self.c_max > 0:
            raise ConfigError(f"c_max must be > 0, got {self.c_max}")
        if self.c_grid_size < 2:
            raise ConfigError("c_grid_size must be >= 2")
        g = self.k_grid
        if g.ndim != 1 or g.size < 2 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ConfigError("k_grid must be a strictly increasing positive vector")
        if self.terminal not in ("zero", "bound"):
            raise ConfigError(f"terminal must be 'zero' or 'bound', got {self.terminal!r}")
        if self.c_floor is not None and not 0 < self.c_floor < self.c_max:
            raise ConfigError(f"c_floor must lie in (0, c_max), got {self.c_floor}")

    @property
    def n_steps(self):
        return max(1, int(round(self.T / self.dt)))

    def to_dict(self):
        g = self.k_grid
        return {
            "dt": self.dt,
            "T": self.T,
            "k_grid": {"min": float(g[0]), "max": float(g[-1]), "n": int(g.size)},
            "c_max": self.c_max,
            "c_grid_size": self.c_grid_size,
            "terminal": self.terminal,
            "c_floor": self.c_floor,
        }


@dataclass
class ValueTable:
    k_grid: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    monotone_in_T: bool
    concave_on_grid: bool
    config: DPConfig | None = None

    def value_at(self, k):
        g = self.k_grid
        k = np.asarray(k, dtype=float)
        if np.any(k < g[0]) or np.any(k > g[-1]):
            raise DomainError(f"k outside the table range [{g[0]}, {g[-1]}]")
        out = np.interp(k, g, self.values)
        return float(out) if out.ndim == 0 else out

    def as_candidate(self, kind="linear"):
        return GridFn(self.k_grid, self.values, kind=kind, info={"source": "dp"})

    @property
    def diagnostics(self):
        return {"monotone_in_T": self.monotone_in_T, "concave_on_grid": self.concave_on_grid}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value", "policy"])
            for row in zip(self.k_grid, self.values, self.policy):
                w.writerow([repr(float(x)) for x in row])


def _is_concave(grid, values, tol=1e-9):
    s = np.diff(values) / np.diff(grid)
    return bool(np.all(np.diff(s) <= tol * max(1.0, float(np.max(np.abs(s))))))


def _control_grid(model, cfg):
    u0 = float(model.utility.value(0.0))
    if math.isinf(u0) and cfg.c_floor is None:
        raise ConfigError("u(0) = -inf: configure c_floor > 0")
    lo = 0.0 if cfg.c_floor is None else cfg.c_floor
    return np.linspace(lo, cfg.c_max, cfg.c_grid_size), u0


def _terminal(model, cfg, kg):
    if cfg.terminal == "bound":
        b = 1.0 / (4.0 * model.rho ** 2)
        return kg + b, b
    return np.zeros_like(kg), 0.0


def _bellman(kg, fk, c, uc_dt, beta, V, V0, dt, with_zero_node):
    """One backward step; returns (new values, argmax indices)."""
    nk = kg[:, None] + (fk[:, None] - c[None, :]) * dt
    if with_zero_node:
        feas = nk >= 0.0
        xs = np.concatenate(([0.0], kg))
        ys = np.concatenate(([V0], V))
    else:
        feas = nk >= kg[0]
        xs, ys = kg, V
    cont = np.interp(np.clip(nk, xs[0], kg[-1]), xs, ys)
    obj = np.where(feas, uc_dt[None, :] + beta * cont, -np.inf)
    idx = np.argmax(obj, axis=1)
    return obj[np.arange(kg.size), idx], idx


def dp_solve(model, cfg=None):
    cfg = cfg or DPConfig()
    kg = cfg.k_grid
    c, u0 = _control_grid(model, cfg)
    uc_dt = np.asarray(model.utility.value(c), dtype=float) * cfg.dt
    fk = np.asarray(model.production.value(kg), dtype=float)
    beta = math.exp(-model.rho * cfg.dt)
    V, V0 = _terminal(model, cfg, kg)
    # the k = 0 node is absorbing with value sum of u(0) dt beta^n; drop it if u(0) = -inf
    zero_node = math.isfinite(u0)
    monotone = True
    idx = np.zeros(kg.size, dtype=int)
    for _ in range(cfg.n_steps):
        V_new, idx = _bellman(kg, fk, c, uc_dt, beta, V, V0, cfg.dt, zero_node)
        monotone &= bool(np.all(V_new >= V - 1e-12 * np.maximum(1.0, np.abs(V))))
        V = V_new
        if zero_node:
            V0 = u0 * cfg.dt + beta * V0
    if not np.all(np.isfinite(V)):
        raise ConfigError("backward induction produced non-finite values; check c_floor and grid")
    return ValueTable(kg.copy(), V, c[idx], monotone, _is_concave(kg, V), cfg)


# --- studies ----------------------------------------------------------------------


@dataclass
class RefineStudy:
    probes: np.ndarray
    estimates: np.ndarray  # (n_cfg, n_probe)
    configs: list

    @property
    def differences(self):
        return np.diff(self.estimates, axis=0)

    @property
    def differences_shrink(self):
        d = np.abs(self.differences)
        return bool(np.all(d[1:] <= d[:-1] + 1e-12)) if len(d) > 1 else True

    @property
    def nondecreasing(self):
        return bool(np.all(self.differences >= -1e-12))

    @property
    def flags(self):
        out = []
        if not self.differences_shrink:
            out.append("successive differences do not shrink")
        if not self.nondecreasing:
            out.append("estimates decrease under refinement")
        return out

    def rows(self):
        out = []
        for i, cfg in enumerate(self.configs):
            row = {"config": cfg.to_dict(), "estimates": [float(x) for x in self.estimates[i]]}
            if i:
                row["difference"] = [float(x) for x in self.differences[i - 1]]
            out.append(row)
        return out


def dp_refine_study(model, cfgs, probes=(1.0,)):
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    est = np.array([dp_solve(model, cfg).value_at(probes) for cfg in cfgs], dtype=float)
    return RefineStudy(probes, est.reshape(len(cfgs), probes.size), list(cfgs))


@dataclass
class CrossCheck:
    k0: float
    table_value: float
    achieved: float
    gap: float
    k_path: np.ndarray = field(repr=False)
    c_path: np.ndarray = field(repr=False)


def dp_policy_rollout_crosscheck(model, table, k0, cfg=None):
    """Roll the greedy one-step policy against the stationary table forward.

    Each step maximizes u(c) dt + e^{-rho dt} V_table(k + (f(k) - c) dt) over the
    same control grid and Euler update used by the induction.
    """
    cfg = cfg or table.config or DPConfig()
    kg = table.k_grid
    if not kg[0] <= k0 <= kg[-1]:
        raise DomainError(f"k0 = {k0} outside the table range [{kg[0]}, {kg[-1]}]")
    c, u0 = _control_grid(model, cfg)
    uc = np.asarray(model.utility.value(c), dtype=float)
    beta = math.exp(-model.rho * cfg.dt)
    zero_node = math.isfinite(u0)
    V0 = u0 / (1.0 - beta) * cfg.dt if zero_node else -math.inf
    xs = np.concatenate(([0.0], kg)) if zero_node else kg
    ys = np.concatenate(([V0], table.values)) if zero_node else table.values
    k, total, disc = float(k0), 0.0, 1.0
    ks, cs = [k], []
    for _ in range(cfg.n_steps):
        if k <= 0.0:
            cs.append(0.0)
            total += disc * u0 * cfg.dt
        else:
            nk = k + (float(model.production.value(k)) - c) * cfg.dt
            feas = nk >= xs[0]
            cont = np.interp(np.clip(nk, xs[0], kg[-1]), xs, ys)
            obj = np.where(feas, uc * cfg.dt + beta * cont, -np.inf)
            j = int(np.argmax(obj))
            cs.append(float(c[j]))
            total += disc * uc[j] * cfg.dt
            k = max(float(nk[j]), 0.0)
        disc *= beta
        ks.append(k)
    tv = table.value_at(k0)
    return CrossCheck(float(k0), tv, total, abs(total - tv), np.array(ks), np.array(cs))
