"""Stationary analysis with L and M frozen.

The invariant measure is the discrete Gaussian ``exp(-c (n - s)^2) / Xi``.
It depends on ``s = (L + M) / 2`` only; the disagreement ``d`` just rescales
every rate by ``exp(c d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .master import build_window
from .model import LatticeDistribution, ModelParams, SlowState, taker_rates

# e^{-c m^2} < 1e-320 beyond this many |n - s| units; far below double eps
_TAIL_LOG = 745.0


@dataclass(frozen=True)
class StationaryMeasure:
    s: float
    c: float
    dist: LatticeDistribution


def stationary_pi(s: float, params: ModelParams, window: tuple[int, int] | None = None,
                  tail_eps: float = 1e-12) -> StationaryMeasure:
    lo, hi = window if window is not None else build_window(s, params, tail_eps)
    n = np.arange(lo, hi + 1)
    dist = LatticeDistribution.from_log_weights(lo, -params.c * (n - s) ** 2)
    dist.check_window()
    return StationaryMeasure(s, params.c, dist)


def _lattice_terms(s: float, c: float) -> np.ndarray:
    reach = math.ceil(math.sqrt(_TAIL_LOG / c)) + 1
    center = math.floor(s + 0.5)
    n = np.arange(center - reach, center + reach + 1, dtype=float)
    return n


def theta_normalizer_direct(s: float, c: float) -> float:
    """``sum_n exp(-c (n - s)^2)`` summed until terms underflow."""
    if c <= 0:
        raise ConfigurationError("c must be positive")
    n = _lattice_terms(s, c)
    return math.fsum(np.exp(-c * (n - s) ** 2))


def jacobi_theta(v: complex, tau: complex, terms) -> complex:
    """Truncated ``sum_n exp(2 pi i v n + pi i tau n^2)`` over the given ``n``."""
    n = np.asarray(terms, dtype=float)
    z = np.exp(2j * np.pi * v * n + 1j * np.pi * tau * n * n)
    return complex(math.fsum(z.real), math.fsum(z.imag))


def theta_normalizer_series(s: float, c: float) -> float:
    """``Xi = exp(-c s^2) Theta(c s / (i pi), c i / pi)`` evaluated in complex arithmetic."""
    if c <= 0:
        raise ConfigurationError("c must be positive")
    # the series is centered on n = 0, so shift s into [-1/2, 1/2) first; Xi is 1-periodic in s
    s0 = s - math.floor(s + 0.5)
    n = _lattice_terms(s0, c)
    value = math.exp(-c * s0 * s0) * jacobi_theta(c * s0 / (1j * math.pi), 1j * c / math.pi, n)
    return value.real


def theta_normalizer(s: float, c: float, rtol: float = 1e-12) -> float:
    """Normalizer ``Xi(s, c)``; the direct lattice sum is returned after the theta cross-check."""
    direct = theta_normalizer_direct(s, c)
    series = theta_normalizer_series(s, c)
    if abs(direct - series) > rtol * direct:
        raise ArithmeticError(f"theta cross-check failed: {direct!r} vs {series!r}")
    return direct


def detailed_balance_residual(measure: StationaryMeasure, params: ModelParams) -> float:
    """Largest relative violation of ``pi_n lambda_n = pi_{n+1} mu_{n+1}`` with ``L = M = s``."""
    dist = measure.dist
    if len(dist) < 2:
        return 0.0
    lam, mu = taker_rates(dist.indices, SlowState(measure.s, measure.s), params)
    up = dist.mass[:-1] * lam[:-1]
    down = dist.mass[1:] * mu[1:]
    return float(np.max(np.abs(up - down) / np.maximum(up, 1e-300)))


@dataclass(frozen=True)
class FellerScale:
    """Scale points ``x_0..x_N`` (stored as logs) and speed measure ``mu_0..mu_N``."""

    log_x: np.ndarray
    log_speed: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.log_x)

    @property
    def speed(self) -> np.ndarray:
        return np.exp(self.log_speed)


@dataclass(frozen=True)
class FellerReport:
    scale: FellerScale
    entrance_sum: float
    tail_bound: float


def _tail_sum(m: int, q: float) -> float:
    # sum_{n > m} (n + 1) q^n
    return q ** (m + 1) * ((m + 2) - (m + 1) * q) / (1.0 - q) ** 2


def feller_objects(s: float, c: float, n_max: int) -> FellerReport:
    """Feller scale and speed of the frozen chain on the right half-line.

    Rates are ``lambda_n = e^{-c(n-s)}`` and ``mu_n = e^{c(n-s)}``;
    ``x_0 = 1/mu_0``, ``x_1 = x_0 + 1/lambda_0`` and
    ``x_{n+1} = x_n + exp(c n (n+1) - 2 c n s)``. The entrance sum is
    ``sum_{n <= n_max} x_n mu_n`` with speed ``mu_n = e^{-c (n-s)^2}``;
    ``tail_bound`` bounds the neglected terms.
    """
    if n_max < 2:
        raise ConfigurationError("n_max must be >= 2")
    if c <= 0:
        raise ConfigurationError("c must be positive")
    if n_max > math.sqrt(1400.0 / c):
        raise OverflowError(f"n_max={n_max} exceeds sqrt(1400/c); scale increments overflow")
    log_x = np.empty(n_max + 1)
    log_x[0] = c * s
    log_x[1] = np.logaddexp(log_x[0], -c * s)
    for n in range(1, n_max):
        log_x[n + 1] = np.logaddexp(log_x[n], c * n * (n + 1) - 2 * c * n * s)
    ns = np.arange(n_max + 1)
    log_speed = -c * (ns - s) ** 2
    entrance = math.fsum(np.exp(log_x + log_speed))

    # x_n <= (n + 1) * exp(max exponent of its summands); the last summand wins for large n
    def log_term_bound(n):
        pieces = [c * s, -c * s] + [c * k * (k + 1) - 2 * c * k * s for k in (1, n - 1)]
        return math.log(n + 1) + max(pieces) - c * (n - s) ** 2

    tail = 0.0
    n = n_max + 1
    while True:
        last = c * (n - 1) * n - 2 * c * (n - 1) * s
        if last >= max(c * abs(s), 2 * c - 2 * c * s) and n > 2:
            # from here on x_n mu_n <= (n + 1) e^{-cn} e^{c(2s - s^2)}
            tail += math.exp(c * (2 * s - s * s)) * _tail_sum(n - 1, math.exp(-c))
            break
        tail += math.exp(log_term_bound(n))
        n += 1
    return FellerReport(FellerScale(log_x, log_speed), entrance, tail)


def disagreement_expectations(s: float, d: float, params: ModelParams,
                              window: tuple[int, int] | None = None) -> tuple[float, float]:
    """``E lambda`` and ``E mu`` under ``pi^s`` with ``L = s + d``, ``M = s - d``."""
    measure = stationary_pi(s, params, window)
    lam, mu = taker_rates(measure.dist.indices, SlowState.from_sd(s, d), params)
    return float(np.dot(lam, measure.dist.mass)), float(np.dot(mu, measure.dist.mass))


__all__ = [
    "FellerReport",
    "FellerScale",
    "StationaryMeasure",
    "detailed_balance_residual",
    "disagreement_expectations",
    "feller_objects",
    "jacobi_theta",
    "stationary_pi",
    "theta_normalizer",
    "theta_normalizer_direct",
    "theta_normalizer_series",
]
