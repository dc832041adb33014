"""Truncated Kolmogorov forward equations coupled to the (L, M) beliefs.

The state vector is ``y = (p_lo, ..., p_hi, L, M)``. News enters as exact
jumps: the integrator stops at each event time, shifts L or M by the
amplitude and resumes.

Two fixed-step fourth-order schemes are available. ``"rk4"`` is the
classical Runge-Kutta method and needs ``dt * max_rate <= 0.1``. On wide
windows the edge rates grow like ``exp(c |n|)`` and that bound becomes
prohibitive, so ``"lawson"`` treats the generator frozen at the start of
each step exactly (matrix exponential) and the remaining, slowly varying
part by RK4. ``"auto"`` picks rk4 whenever its bound holds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, StepSizeError, WindowError
from .model import LatticeDistribution, ModelParams, NewsSequence, SlowState, taker_rates

RK4_RATE_BOUND = 0.1
# the explicit part of the Lawson step must stay well inside RK4's stability interval (~2.78)
LAWSON_DRIFT_BOUND = 1.0
RECENTER_EDGE_MASS = 1e-10
RECENTER_FAIL_MASS = 1e-6
MAX_HALF_WIDTH = 100_000


def build_window(s: float, params: ModelParams, tail_eps: float = 1e-12) -> tuple[int, int]:
    """Window around ``round(s)`` holding all but ``tail_eps`` of the stationary mass."""
    if not 0 < tail_eps < 1:
        raise ConfigurationError("tail_eps must lie in (0, 1)")
    half = math.ceil(math.sqrt(math.log(1.0 / tail_eps) / params.c)) + 5
    if half > MAX_HALF_WIDTH:
        raise ConfigurationError(f"window half-width {half} exceeds {MAX_HALF_WIDTH}")
    center = math.floor(s + 0.5)
    return center - half, center + half


@dataclass(frozen=True)
class MasterState:
    t: float
    dist: LatticeDistribution
    slow: SlowState


def initial_state(s: float, params: ModelParams, d: float = 0.0, tail_eps: float = 1e-12,
                  point_mass: bool = False, window: tuple[int, int] | None = None) -> MasterState:
    """Start at ``L = s + d``, ``M = s - d`` with ``p`` the discrete Gaussian around s.

    With ``point_mass=True`` the distribution starts at ``round(s)`` instead.
    """
    lo, hi = window if window is not None else build_window(s, params, tail_eps)
    if point_mass:
        dist = LatticeDistribution.point_mass(math.floor(s + 0.5), lo, hi)
    else:
        n = np.arange(lo, hi + 1)
        dist = LatticeDistribution.from_log_weights(lo, -params.c * (n - s) ** 2)
    return MasterState(0.0, dist, SlowState.from_sd(s, d))


def mean_rates(dist: LatticeDistribution, slow: SlowState, params: ModelParams) -> tuple[float, float]:
    lam, mu = taker_rates(dist.indices, slow, params)
    return float(np.dot(lam, dist.mass)), float(np.dot(mu, dist.mass))


def integral_of_motion(state: MasterState) -> float:
    """``L + M + sum_n n p_n``; constant in time when ``C_lambda == C_mu``."""
    return state.slow.L + state.slow.M + state.dist.mean()


def _kolmogorov(p, lam, mu):
    # inflow from outside the window is zero; outflow across the edges is lost
    dp = -(lam + mu) * p
    dp[1:] += lam[:-1] * p[:-1]
    dp[:-1] += mu[1:] * p[1:]
    return dp


def _generator(lam, mu) -> np.ndarray:
    m = lam.size
    Q = np.diag(-(lam + mu))
    idx = np.arange(m - 1)
    Q[idx + 1, idx] = lam[:-1]
    Q[idx, idx + 1] = mu[1:]
    return Q


class _System:
    """Vector field of the coupled system on a fixed window."""

    def __init__(self, lo: int, hi: int, params: ModelParams, fast_factor: float = 1.0):
        self.lo, self.hi = lo, hi
        self.params = params
        self.fast = fast_factor
        n = np.arange(lo, hi + 1, dtype=float)
        c, K = params.c, params.K
        if c * (hi - lo) > 2 * 700:
            raise WindowError("window too wide for exponent cap")
        # lambda_n = K e^{cL} e^{-cn}, mu_n = K e^{-cM} e^{cn}
        self.base_up = K * np.exp(-c * n)
        self.base_down = K * np.exp(c * n)

    def rates(self, L, M):
        c = self.params.c
        if c * max(abs(self.lo - L), abs(self.hi - L), abs(self.lo - M), abs(self.hi - M)) > 700:
            raise WindowError("rate exponent exceeds 700; window too wide")
        return self.base_up * math.exp(c * L), self.base_down * math.exp(-c * M)

    def __call__(self, y):
        p, L, M = y[:-2], y[-2], y[-1]
        lam, mu = self.rates(L, M)
        out = np.empty_like(y)
        out[:-2] = self.fast * _kolmogorov(p, lam, mu)
        out[-2] = -np.dot(lam, p) + self.params.C_lambda
        out[-1] = np.dot(mu, p) - self.params.C_mu
        return out

    def max_rate(self, L, M) -> float:
        lam, mu = self.rates(L, M)
        return self.fast * float(np.max(lam + mu))

    def rk4_step(self, y, h):
        k1 = self(y)
        k2 = self(y + 0.5 * h * k1)
        k3 = self(y + 0.5 * h * k2)
        k4 = self(y + h * k3)
        return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    def lawson_step(self, y, h):
        L0, M0 = y[-2], y[-1]
        lam0, mu0 = self.rates(L0, M0)
        Q0 = self.fast * _generator(lam0, mu0)
        E2 = expm(0.5 * h * Q0)
        E = E2 @ E2

        def lin(u, mat):
            out = u.copy()
            out[:-2] = mat @ u[:-2]
            return out

        def nonlin(u):
            f = self(u)
            f[:-2] -= Q0 @ u[:-2]
            return f

        k1 = nonlin(y)
        u2 = lin(y + 0.5 * h * k1, E2)
        k2 = nonlin(u2)
        u3 = lin(y, E2) + 0.5 * h * k2
        k3 = nonlin(u3)
        u4 = lin(y, E) + h * lin(k3, E2)
        k4 = nonlin(u4)
        return lin(y, E) + (h / 6.0) * (lin(k1, E) + 2 * lin(k2 + k3, E2) + k4)

    def lawson_drift(self, y, h) -> float:
        """Row-sum change of the generator over one step, times ``h``."""
        f = self(y)
        L, M = y[-2], y[-1]
        lam, mu = self.rates(L, M)
        c = self.params.c
        dlam = lam * abs(math.expm1(c * h * f[-2]))
        dmu = mu * abs(math.expm1(-c * h * f[-1]))
        return h * self.fast * float(np.max(dlam + dmu))


@dataclass
class MasterTrajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    E_lambda: list = field(default_factory=list)
    E_mu: list = field(default_factory=list)
    jumps: list = field(default_factory=list)
    scheme: str = "rk4"

    def append(self, state: MasterState, params: ModelParams):
        el, em = mean_rates(state.dist, state.slow, params)
        self.times.append(state.t)
        self.states.append(state)
        self.E_lambda.append(el)
        self.E_mu.append(em)

    def __len__(self):
        return len(self.states)

    @property
    def final(self) -> MasterState:
        return self.states[-1]

    def L(self) -> np.ndarray:
        return np.array([s.slow.L for s in self.states])

    def M(self) -> np.ndarray:
        return np.array([s.slow.M for s in self.states])

    def integrals(self) -> np.ndarray:
        return np.array([integral_of_motion(s) for s in self.states])

    def totals(self) -> np.ndarray:
        return np.array([s.dist.total() for s in self.states])

    def window(self) -> tuple[int, int]:
        lo = min(s.dist.window_lo for s in self.states)
        hi = max(s.dist.window_hi for s in self.states)
        return lo, hi

    def dist_at(self, k: int, window: tuple[int, int] | None = None) -> LatticeDistribution:
        dist = self.states[k].dist
        return dist if window is None else dist.on_window(*window)

    def to_csv(self, path) -> None:
        lo, hi = self.window()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "L", "M", "I", "E_lambda", "E_mu"] + [f"p{n}" for n in range(lo, hi + 1)])
            for k, st in enumerate(self.states):
                row = [st.t, st.slow.L, st.slow.M, integral_of_motion(st), self.E_lambda[k], self.E_mu[k]]
                row += list(st.dist.on_window(lo, hi).mass)
                w.writerow([repr(float(v)) for v in row])


def rhs(state: MasterState, params: ModelParams, fast_factor: float = 1.0):
    """Right-hand sides ``(dp/dt, dL/dt, dM/dt)`` with news stripped."""
    dist = state.dist
    system = _System(dist.window_lo, dist.window_hi, params, fast_factor)
    f = system(np.concatenate([dist.mass, [state.slow.L, state.slow.M]]))
    return f[:-2], float(f[-2]), float(f[-1])


def _recenter(p: np.ndarray, lo: int, hi: int):
    """Shift (and if needed widen) the window so its edges carry negligible mass."""
    dist = LatticeDistribution(lo, np.clip(p, 0.0, None))
    if dist.boundary_mass() <= RECENTER_EDGE_MASS:
        return p, lo, hi
    half = (hi - lo) // 2
    center = math.floor(dist.mean() / max(dist.total(), 1e-300) + 0.5)
    while True:
        new_lo, new_hi = center - half, center + half
        moved = LatticeDistribution(lo, p).on_window(new_lo, new_hi)
        dropped = abs(math.fsum(p) - moved.total())
        if dropped > RECENTER_FAIL_MASS:
            raise WindowError(f"re-centering dropped mass {dropped:.2e}")
        if moved.boundary_mass() <= RECENTER_EDGE_MASS:
            return moved.mass.copy(), new_lo, new_hi
        half += max(2, half // 4)
        if half > MAX_HALF_WIDTH:
            raise WindowError("re-centering could not contain the distribution")


def integrate(initial: MasterState, params: ModelParams, news: NewsSequence | None = None,
              horizon: float = 1.0, dt: float = 1e-3, stride: int = 1, scheme: str = "auto",
              fast_factor: float = 1.0, recenter: bool = True) -> MasterTrajectory:
    """Integrate on the fixed grid ``t = k dt`` up to ``horizon``.

    Samples are taken every ``stride`` grid steps (and at the end); a sample
    at a news time shows the post-jump state.
    """
    if scheme not in ("auto", "rk4", "lawson"):
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if horizon < 0 or dt <= 0 or stride < 1:
        raise ConfigurationError("need horizon >= 0, dt > 0, stride >= 1")
    news = news or NewsSequence()
    t0 = initial.t
    lo, hi = initial.dist.window_lo, initial.dist.window_hi
    system = _System(lo, hi, params, fast_factor)
    y = np.concatenate([initial.dist.mass, [initial.slow.L, initial.slow.M]])

    traj = MasterTrajectory(scheme=scheme)
    traj.append(initial, params)
    if horizon == 0:
        return traj

    pending = [u for u in news.times() if t0 < u <= t0 + horizon]
    n_steps = math.ceil(horizon / dt - 1e-9)
    used = set()

    def step(y, h):
        L, M = y[-2], y[-1]
        rk4_ok = h * system.max_rate(L, M) <= RK4_RATE_BOUND
        if scheme == "rk4" or (scheme == "auto" and rk4_ok):
            if not rk4_ok:
                raise StepSizeError(
                    f"dt*max_rate = {h * system.max_rate(L, M):.3g} > {RK4_RATE_BOUND}; "
                    "reduce dt or use scheme='lawson'"
                )
            used.add("rk4")
            return system.rk4_step(y, h)
        drift = system.lawson_drift(y, h)
        if drift > LAWSON_DRIFT_BOUND:
            raise StepSizeError(f"generator drift per step {drift:.3g} > {LAWSON_DRIFT_BOUND}; reduce dt")
        used.add("lawson")
        return system.lawson_step(y, h)

    t = t0
    for k in range(1, n_steps + 1):
        t_next = min(t0 + k * dt, t0 + horizon)
        while pending and pending[0] <= t_next:
            tau = pending.pop(0)
            if tau > t:
                y = step(y, tau - t)
                t = tau
            dl, dm = news.jumps_at(tau)
            before = (y[-2], y[-1])
            y[-2] += dl
            y[-1] += dm
            traj.jumps.append((tau, before[0], y[-2], before[1], y[-1]))
        if t_next > t:
            y = step(y, t_next - t)
        t = t_next
        if recenter:
            p, new_lo, new_hi = _recenter(y[:-2], lo, hi)
            if (new_lo, new_hi) != (lo, hi):
                lo, hi = new_lo, new_hi
                system = _System(lo, hi, params, fast_factor)
                y = np.concatenate([p, y[-2:]])
        if k % stride == 0 or k == n_steps:
            dist = LatticeDistribution(lo, np.clip(y[:-2], 0.0, None))
            traj.append(MasterState(t, dist, SlowState(float(y[-2]), float(y[-1]))), params)
    traj.scheme = "+".join(sorted(used)) or scheme
    return traj


__all__ = [
    "MasterState",
    "MasterTrajectory",
    "build_window",
    "initial_state",
    "integral_of_motion",
    "integrate",
    "mean_rates",
    "rhs",
]
