"""Scaling limits: the Ehrenfest urn, generator scaling towards Ornstein-Uhlenbeck,
and the continuum SDE with slowly relaxing beliefs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, StepSizeError
from .model import LatticeDistribution


def ehrenfest_stationary(N: int) -> LatticeDistribution:
    """Binomial law ``C(2N, N+k) / 4^N`` on ``k = -N..N``."""
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    k = np.arange(-N, N + 1)
    log_w = gammaln(2 * N + 1) - gammaln(N + k + 1) - gammaln(N - k + 1) - 2 * N * math.log(2)
    return LatticeDistribution.normalized(-N, np.exp(log_w))


def ehrenfest_gaussian_tv(N: int) -> float:
    """Total variation between the urn law and the N(0, N/2) density sampled on the integers.

    The Gaussian mass that falls outside ``[-N, N]`` counts towards the distance.
    """
    pi = ehrenfest_stationary(N)
    var = N / 2.0
    k = pi.indices
    g = np.exp(-k * k / (2 * var)) / math.sqrt(2 * math.pi * var)
    outside = max(0.0, 1.0 - math.fsum(g))
    return 0.5 * (math.fsum(np.abs(pi.mass - g)) + outside)


@dataclass
class EhrenfestChain:
    """Discrete-time urn chain; ``k`` is the first urn's count minus ``N``."""

    N: int
    k: int = 0

    def __post_init__(self):
        if self.N < 1 or abs(self.k) > self.N:
            raise ConfigurationError("need N >= 1 and |k| <= N")

    def run(self, steps: int, seed) -> np.ndarray:
        """Path of ``steps`` moves (the initial state excluded)."""
        rng = np.random.Generator(np.random.PCG64(seed))
        u = rng.random(steps)
        path = np.empty(steps, dtype=np.int64)
        k, two_n = self.k, 2 * self.N
        for i in range(steps):
            # a ball from the first urn (N + k of 2N) moves out
            k += -1 if u[i] * two_n < self.N + k else 1
            path[i] = k
        self.k = k
        return path


# f, f', f''
TEST_FUNCTIONS = {
    "x": (lambda x: x, lambda x: 1.0, lambda x: 0.0),
    "x2": (lambda x: x * x, lambda x: 2 * x, lambda x: 2.0),
    "gauss": (
        lambda x: math.exp(-x * x),
        lambda x: -2 * x * math.exp(-x * x),
        lambda x: (4 * x * x - 2) * math.exp(-x * x),
    ),
    "cos": (math.cos, lambda x: -math.sin(x), lambda x: -math.cos(x)),
}


def ou_generator(f_name: str, x: float, c: float) -> float:
    """``f''(x) - 2 c x f'(x)``."""
    _, df, d2f = _lookup(f_name)
    return d2f(x) - 2 * c * x * df(x)


def _lookup(f_name):
    try:
        return TEST_FUNCTIONS[f_name]
    except KeyError:
        raise ConfigurationError(f"unknown test function {f_name!r}; choose from {sorted(TEST_FUNCTIONS)}") from None


def scaled_generator(model: str, f_name: str, x: float, n: float, c: float) -> float:
    """Discrete generator at spatial step ``1/sqrt(n)``, times its prefactor (2n or n)."""
    f, _, _ = _lookup(f_name)
    if n < 4:
        raise ConfigurationError("n must be >= 4")
    h = 1.0 / math.sqrt(n)
    fx, fp, fm = f(x), f(x + h), f(x - h)
    if model == "ehrenfest":
        # N ~ sqrt(n)/c, so k/N becomes c x / sqrt(n)
        a = c * x / math.sqrt(n)
        if abs(a) > 1:
            raise ConfigurationError("x outside the urn's range at this scale")
        value = 0.5 * (1 - a) * (fp - fx) + 0.5 * (1 + a) * (fm - fx)
        return 2 * n * value
    if model == "discrete_ou":
        cn = c / math.sqrt(n)
        value = math.exp(-cn * x) * (fp - fx) + math.exp(cn * x) * (fm - fx)
        return n * value
    raise ConfigurationError(f"unknown model {model!r}; expected 'ehrenfest' or 'discrete_ou'")


def generator_scaling_error(model: str, f_name: str, x: float, n: float, c: float = 1.0) -> float:
    return abs(scaled_generator(model, f_name, x, n, c) - ou_generator(f_name, x, c))


def scaling_table(models=("ehrenfest", "discrete_ou"), functions=tuple(TEST_FUNCTIONS),
                  xs=(0.0, 0.5), ns=(16, 64, 256), c: float = 1.0) -> list[tuple]:
    return [
        (model, f, x, n, generator_scaling_error(model, f, x, n, c))
        for model in models for f in functions for x in xs for n in ns
    ]


def write_scaling_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "f", "x", "n", "err"])
        for model, f, x, n, err in rows:
            w.writerow([model, f, repr(float(x)), n, repr(float(err))])


def lm_closed_form(L0: float, M0: float, frak_c: float, t):
    """Exact slow flow ``L' = 1 - e^{c(L-M)}``, ``M' = e^{c(L-M)} - 1``.

    With ``D = L - M`` and ``w = 1 - e^{-cD}`` one gets ``w' = -2c w``, so
    ``D(t) = -log(1 - w0 e^{-2ct}) / c`` while ``L + M`` stays fixed.
    """
    t = np.asarray(t, dtype=float)
    total = L0 + M0
    D0 = L0 - M0
    # 1 - w0 e^{-2ct} = (1 - e^{-2ct}) + e^{-cD0 - 2ct}, summed in logs so w0 ~ 1 keeps precision
    with np.errstate(divide="ignore"):
        log_relax = np.log(-np.expm1(-2 * frak_c * t))
    D = -np.logaddexp(log_relax, -frak_c * D0 - 2 * frak_c * t) / frak_c
    L = 0.5 * (total + D)
    M = 0.5 * (total - D)
    if L.ndim == 0:
        return float(L), float(M)
    return L, M


def lm_rk4(L0: float, M0: float, frak_c: float, horizon: float, dt: float):
    """Classical RK4 for the slow pair; the independent check of :func:`lm_closed_form`."""
    n_steps = math.ceil(horizon / dt - 1e-9)
    t = np.minimum(np.arange(n_steps + 1) * dt, horizon)
    y = np.empty((n_steps + 1, 2))
    y[0] = L0, M0

    def f(v):
        g = math.expm1(frak_c * (v[0] - v[1]))
        return np.array([-g, g])

    for k in range(n_steps):
        h = t[k + 1] - t[k]
        v = y[k]
        k1 = f(v)
        k2 = f(v + 0.5 * h * k1)
        k3 = f(v + 0.5 * h * k2)
        k4 = f(v + h * k3)
        y[k + 1] = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t, y[:, 0], y[:, 1]


@dataclass
class ContinuumPath:
    t: np.ndarray
    X: np.ndarray
    L: np.ndarray
    M: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "X", "L", "M"])
            for row in zip(self.t, self.X, self.L, self.M):
                w.writerow([repr(float(v)) for v in row])


def simulate_continuum(x0: float, L0: float, M0: float, frak_c: float, dt: float, horizon: float,
                       seed, noise: bool = True) -> ContinuumPath:
    """Euler-Maruyama for the price with the slow pair substituted exactly.

    The price has generator ``g(t) [f'' - 2c (x - s) f']`` with
    ``g = e^{c(L - M)}`` and ``s = (L + M)/2``, i.e.
    ``dX = -2 c g (X - s) dt + sqrt(2 g) dW``; for ``L = M`` its stationary
    law is ``N(s, 1/(2c))``.
    """
    if dt * 2 * frak_c * math.exp(frak_c * abs(L0 - M0)) > 0.1:
        raise StepSizeError("dt * 2c * exp(c |L0 - M0|) must not exceed 0.1")
    n_steps = math.ceil(horizon / dt - 1e-9)
    t = np.minimum(np.arange(n_steps + 1) * dt, horizon)
    L, M = lm_closed_form(L0, M0, frak_c, t)
    L, M = np.atleast_1d(L), np.atleast_1d(M)
    s = 0.5 * (L + M)
    g = np.exp(frak_c * (L - M))
    rng = np.random.Generator(np.random.PCG64(seed))
    dW = rng.standard_normal(n_steps) if noise else np.zeros(n_steps)
    X = np.empty(n_steps + 1)
    X[0] = x0
    h = np.diff(t)
    for k in range(n_steps):
        X[k + 1] = X[k] - 2 * frak_c * g[k] * (X[k] - s[k]) * h[k] + math.sqrt(2 * g[k] * h[k]) * dW[k]
    return ContinuumPath(t, X, L, M)


__all__ = [
    "ContinuumPath",
    "EhrenfestChain",
    "TEST_FUNCTIONS",
    "ehrenfest_gaussian_tv",
    "ehrenfest_stationary",
    "generator_scaling_error",
    "lm_closed_form",
    "lm_rk4",
    "ou_generator",
    "scaled_generator",
    "scaling_table",
    "simulate_continuum",
    "write_scaling_csv",
]
