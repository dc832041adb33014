"""Hydrodynamic limit: the fast price sits at ``pi^{s}`` and the disagreement
``d = (L - M) / 2`` solves ``d' = -(e^{c d} - 1) V`` with ``V`` the equilibrium
taker rate. News is not part of this reduced dynamics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .equilibrium import stationary_pi
from .errors import ConfigurationError, DomainError, StepSizeError
from .model import ModelParams, SlowState, taker_rates


def equilibrium_V(s: float, params: ModelParams, window: tuple[int, int] | None = None,
                  rtol: float = 1e-10) -> float:
    """``E lambda`` under ``pi^s`` with ``L = M = s``; checked against ``E mu``."""
    measure = stationary_pi(s, params, window)
    lam, mu = taker_rates(measure.dist.indices, SlowState(s, s), params)
    v_lam = math.fsum(lam * measure.dist.mass)
    v_mu = math.fsum(mu * measure.dist.mass)
    if abs(v_lam - v_mu) > rtol * max(v_lam, v_mu):
        raise ArithmeticError(f"equilibrium rates disagree: {v_lam!r} vs {v_mu!r}")
    return v_lam


@dataclass(frozen=True)
class HydroSolution:
    """One of the two explicit branches, parametrized by ``A > 0``."""

    branch: str
    A: float
    c: float
    V: float

    def __post_init__(self):
        if self.branch not in ("negative", "positive"):
            raise ConfigurationError("branch must be 'negative' or 'positive'")
        if not self.A > 0 or not self.c > 0 or not self.V > 0:
            raise ConfigurationError("A, c and V must be positive")

    @property
    def t0(self) -> float:
        """Left end of the positive branch's domain (``-inf`` for the negative branch)."""
        if self.branch == "negative":
            return -math.inf
        return -math.log(self.A) / (self.c * self.V)

    @classmethod
    def from_d0(cls, d0: float, c: float, V: float) -> "HydroSolution | None":
        """Branch and ``A`` through ``d(0) = d0``; ``None`` for the fixed point ``d0 = 0``."""
        if d0 == 0:
            return None
        u = math.exp(c * d0)
        if d0 < 0:
            return cls("negative", u / (1.0 - u), c, V)
        return cls("positive", u / (u - 1.0), c, V)


def d_closed_form(t, sol: HydroSolution):
    """``(1/c) log(A e^{cVt} / (A e^{cVt} + 1))`` or its ``-1`` counterpart."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-sol.c * sol.V * t) / sol.A
    if sol.branch == "negative":
        d = -np.log1p(decay) / sol.c
    else:
        if np.any(t <= sol.t0):
            raise DomainError(f"positive branch is defined only for t > t0 = {sol.t0:.6g}")
        d = -np.log1p(-decay) / sol.c
    return float(d) if d.ndim == 0 else d


def integrate_d(d0: float, c: float, V: float, horizon: float, dt: float,
                t_start: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step RK4 for ``d' = -(e^{cd} - 1) V``; returns ``(t, d)`` on the step grid."""
    if dt <= 0 or horizon < 0:
        raise ConfigurationError("need dt > 0 and horizon >= 0")

    def f(d):
        return -math.expm1(c * d) * V

    n_steps = math.ceil(horizon / dt - 1e-9)
    t = t_start + np.minimum(np.arange(n_steps + 1) * dt, horizon)
    d = np.empty(n_steps + 1)
    d[0] = d0
    for k in range(n_steps):
        h = t[k + 1] - t[k]
        x = d[k]
        if c * abs(h * f(x)) >= 0.5:
            raise StepSizeError(f"|c * delta d| = {c * abs(h * f(x)):.3g} >= 0.5 at t = {t[k]:.6g}")
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        d[k + 1] = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t, d


def compare(d0: float, c: float, V: float, horizon: float, dt: float, t_start: float = 0.0):
    """ODE solution next to the closed form; returns ``(t, d_closed, d_ode, abs_err)``."""
    t, d_ode = integrate_d(d0, c, V, horizon, dt, t_start)
    sol = HydroSolution.from_d0(d0, c, V)
    if sol is None:
        d_closed = np.zeros_like(t)
    else:
        # from_d0 anchors the branch at t = 0; shift it to t_start
        sol = HydroSolution(sol.branch, sol.A * math.exp(-c * V * t_start), c, V)
        d_closed = d_closed_form(t, sol)
    return t, d_closed, d_ode, np.abs(d_closed - d_ode)


def write_comparison_csv(path, t, d_closed, d_ode, abs_err) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "d_closed", "d_ode", "abs_err"])
        for row in zip(t, d_closed, d_ode, abs_err):
            w.writerow([repr(float(v)) for v in row])


__all__ = [
    "HydroSolution",
    "compare",
    "d_closed_form",
    "equilibrium_V",
    "integrate_d",
    "write_comparison_csv",
]
