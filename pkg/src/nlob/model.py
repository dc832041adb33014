"""Core value types, taker rates, news flows and weighted lattice norms.

Everything lives on the integer lattice; ``ModelParams.tick`` only converts
lattice indices to price units when results are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, WindowError

MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class ModelParams:
    """Static constants of the dynamics.

    ``K`` may be zero (no taker activity at all); every other field must be
    strictly positive.
    """

    c: float = 1.0
    C_lambda: float = 1.0
    C_mu: float | None = None
    K: float = 1.0
    tick: float = 1.0

    def __post_init__(self):
        if self.C_mu is None:
            object.__setattr__(self, "C_mu", self.C_lambda)
        for name in ("c", "C_lambda", "C_mu", "tick"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ConfigurationError(f"K must be nonnegative and finite, got {self.K!r}")

    def replace(self, **changes) -> "ModelParams":
        values = {f: getattr(self, f) for f in ("c", "C_lambda", "C_mu", "K", "tick")}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class SlowState:
    """Bull and bear fair-price beliefs ``L`` and ``M``."""

    L: float
    M: float

    @property
    def s(self) -> float:
        return 0.5 * (self.L + self.M)

    @property
    def d(self) -> float:
        return 0.5 * (self.L - self.M)

    @classmethod
    def from_sd(cls, s: float, d: float = 0.0) -> "SlowState":
        return cls(s + d, s - d)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Probability vector ``mass[k] = p_{window_lo + k}`` on a finite window."""

    window_lo: int
    mass: np.ndarray

    def __post_init__(self):
        mass = _readonly(self.mass)
        if mass.ndim != 1 or mass.size == 0:
            raise ConfigurationError("mass must be a nonempty 1-d vector")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ConfigurationError("mass entries must be finite and nonnegative")
        object.__setattr__(self, "window_lo", int(self.window_lo))
        object.__setattr__(self, "mass", mass)

    @property
    def window_hi(self) -> int:
        return self.window_lo + self.mass.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    def __len__(self) -> int:
        return self.mass.size

    def __getitem__(self, n: int) -> float:
        k = n - self.window_lo
        if 0 <= k < self.mass.size:
            return float(self.mass[k])
        return 0.0

    def total(self) -> float:
        return math.fsum(self.mass)

    def mean(self) -> float:
        return float(np.dot(self.indices, self.mass))

    def boundary_mass(self) -> float:
        if self.mass.size == 1:
            return float(self.mass[0])
        return float(self.mass[0] + self.mass[-1])

    def check_window(self, tol: float = 1e-8) -> None:
        if self.boundary_mass() > tol:
            raise WindowError(
                f"boundary mass {self.boundary_mass():.3e} exceeds {tol:.0e} "
                f"on window [{self.window_lo}, {self.window_hi}]"
            )

    def on_window(self, lo: int, hi: int) -> "LatticeDistribution":
        """Re-embed on ``[lo, hi]``; mass outside the new window is dropped."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.window_lo), min(hi, self.window_hi)
        if a <= b:
            out[a - lo : b - lo + 1] = self.mass[a - self.window_lo : b - self.window_lo + 1]
        return LatticeDistribution(lo, out)

    @classmethod
    def normalized(cls, window_lo: int, weights) -> "LatticeDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(window_lo, w / math.fsum(w))

    @classmethod
    def from_log_weights(cls, window_lo: int, log_w) -> "LatticeDistribution":
        log_w = np.asarray(log_w, dtype=float)
        return cls(window_lo, np.exp(log_w - logsumexp(log_w)))

    @classmethod
    def point_mass(cls, n: int, lo: int | None = None, hi: int | None = None) -> "LatticeDistribution":
        lo = n if lo is None else lo
        hi = n if hi is None else hi
        if not lo <= n <= hi:
            raise ConfigurationError(f"point {n} outside window [{lo}, {hi}]")
        mass = np.zeros(hi - lo + 1)
        mass[n - lo] = 1.0
        return cls(lo, mass)


@dataclass(frozen=True)
class NewsSequence:
    """Realized news: ``(time, amplitude)`` jumps of L and of M."""

    l_events: tuple = ()
    m_events: tuple = ()

    def __post_init__(self):
        for name in ("l_events", "m_events"):
            events = tuple((float(t), float(a)) for t, a in getattr(self, name))
            times = [t for t, _ in events]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ConfigurationError(f"{name} times must be strictly increasing")
            if not all(math.isfinite(t) and math.isfinite(a) for t, a in events):
                raise ConfigurationError(f"{name} must be finite")
            object.__setattr__(self, name, events)

    def __bool__(self) -> bool:
        return bool(self.l_events or self.m_events)

    def times(self) -> list[float]:
        """Sorted distinct event times over both sides."""
        return sorted({t for t, _ in self.l_events} | {t for t, _ in self.m_events})

    def jumps_at(self, t: float) -> tuple[float, float]:
        dl = math.fsum(a for u, a in self.l_events if u == t)
        dm = math.fsum(a for u, a in self.m_events if u == t)
        return dl, dm

    def total_jump(self, t0: float, t1: float) -> tuple[float, float]:
        """Summed amplitudes of events with ``t0 < time <= t1``."""
        dl = math.fsum(a for u, a in self.l_events if t0 < u <= t1)
        dm = math.fsum(a for u, a in self.m_events if t0 < u <= t1)
        return dl, dm


@dataclass(frozen=True)
class AmplitudeLaw:
    """Distribution of news amplitudes.

    kinds: ``constant`` (value ``a``), ``gaussian`` (mean ``a``, sd ``b``),
    ``exponential`` (mean ``a``). ``sign`` multiplies every draw.
    """

    kind: str = "constant"
    a: float = 1.0
    b: float = 0.0
    sign: int = 1

    KINDS = ("constant", "gaussian", "exponential")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown amplitude law {self.kind!r}; expected one of {self.KINDS}")
        if self.sign not in (1, -1):
            raise ConfigurationError("sign must be +1 or -1")
        if self.kind == "gaussian" and self.b < 0:
            raise ConfigurationError("gaussian sd must be >= 0")
        if self.kind == "exponential" and self.a <= 0:
            raise ConfigurationError("exponential mean must be > 0")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            out = np.full(size, float(self.a))
        elif self.kind == "gaussian":
            out = rng.normal(self.a, self.b, size)
        else:
            out = rng.exponential(self.a, size)
        return self.sign * out


def _poisson_times(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    if rate <= 0 or horizon <= 0:
        return np.empty(0)
    count = rng.poisson(rate * horizon)
    return np.sort(rng.uniform(0.0, horizon, count))


def sample_news(rate_l: float, rate_m: float, law: AmplitudeLaw | str, horizon: float,
                seed: int, law_m: AmplitudeLaw | str | None = None) -> NewsSequence:
    """Independent Poisson news flows on ``[0, horizon]`` for L and for M."""
    if rate_l < 0 or rate_m < 0:
        raise ConfigurationError("news rates must be nonnegative")
    if isinstance(law, str):
        law = AmplitudeLaw(law)
    law_m = law if law_m is None else (AmplitudeLaw(law_m) if isinstance(law_m, str) else law_m)
    rng_l, rng_m = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    tl = _poisson_times(rng_l, rate_l, horizon)
    tm = _poisson_times(rng_m, rate_m, horizon)
    return NewsSequence(
        tuple(zip(tl, law.draw(rng_l, tl.size))),
        tuple(zip(tm, law_m.draw(rng_m, tm.size))),
    )


def taker_rates(n, slow: SlowState, params: ModelParams):
    """Ask-taker and bid-taker intensities at ask level(s) ``n``.

    ``lambda_n = K exp(-c (n - L))`` and ``mu_n = K exp(c (n - M))``.
    """
    n = np.asarray(n, dtype=float)
    up = -params.c * (n - slow.L)
    down = params.c * (n - slow.M)
    worst = max(np.max(np.abs(up)), np.max(np.abs(down)))
    if worst > MAX_EXPONENT:
        raise WindowError(f"rate exponent {worst:.1f} exceeds {MAX_EXPONENT}; window too wide")
    lam = params.K * np.exp(up)
    mu = params.K * np.exp(down)
    if lam.ndim == 0:
        return float(lam), float(mu)
    return lam, mu


@dataclass(frozen=True)
class NormSpec:
    """Weights ``alpha_n = exp(c n^2 / 2 + alpha |n|)`` of the B/H norm family."""

    alpha: float = 0.0
    c: float = 1.0

    def log_weights(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return 0.5 * self.c * n * n + self.alpha * np.abs(n)

    def weights(self, n) -> np.ndarray:
        return np.exp(self.log_weights(n))


def _values_and_indices(x, lo):
    if isinstance(x, LatticeDistribution):
        return x.mass, x.indices
    x = np.asarray(x, dtype=float)
    return x, np.arange(lo, lo + x.size)


def _log_weighted_sum(log_terms: np.ndarray) -> float:
    log_terms = log_terms[np.isfinite(log_terms)]
    if log_terms.size == 0:
        return 0.0
    return float(np.exp(logsumexp(log_terms)))


def norm_B(x, spec: NormSpec, lo: int = 0) -> float:
    """``sum_n alpha_n |x_n|`` for ``x`` given on ``[lo, lo + len(x))``."""
    values, n = _values_and_indices(x, lo)
    with np.errstate(divide="ignore"):
        return _log_weighted_sum(np.log(np.abs(values)) + spec.log_weights(n))


def norm_H_sq(x, spec: NormSpec, lo: int = 0) -> float:
    """``sum_n alpha_n x_n^2``, the squared Hilbert norm."""
    values, n = _values_and_indices(x, lo)
    with np.errstate(divide="ignore"):
        return _log_weighted_sum(2.0 * np.log(np.abs(values)) + spec.log_weights(n))


def difference_on_union(p: LatticeDistribution, q: LatticeDistribution) -> tuple[np.ndarray, int]:
    """``p - q`` on the smallest window containing both supports."""
    lo = min(p.window_lo, q.window_lo)
    hi = max(p.window_hi, q.window_hi)
    return p.on_window(lo, hi).mass - q.on_window(lo, hi).mass, lo


__all__ = [
    "AmplitudeLaw",
    "LatticeDistribution",
    "ModelParams",
    "NewsSequence",
    "NormSpec",
    "SlowState",
    "difference_on_union",
    "norm_B",
    "norm_H_sq",
    "sample_news",
    "taker_rates",
]
