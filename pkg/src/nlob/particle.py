"""N-particle approximation of the nonlinear process.

Each particle is an ask level jumping up at rate ``K e^{-c(x - L^N)}`` and down
at rate ``K e^{c(x - M^N)}``; the beliefs follow the mean-field ODE driven by
the empirical averages of those rates.

Time stepping is operator split: over a micro step the rates are frozen and
every particle jumps at most once (up with probability ``lambda h``, down
with ``mu h``), then ``(L^N, M^N)`` takes one RK4 step with the post-jump
positions held fixed. The per-step jump probability is capped at 0.05.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, StepSizeError, WindowError
from .master import integrate, MasterState
from .model import LatticeDistribution, ModelParams, NewsSequence, NormSpec, SlowState, norm_H_sq

JUMP_PROB_CAP = 0.05
MAX_HALVINGS = 8


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    L: float
    M: float
    t: float
    rng: np.random.Generator

    @property
    def N(self) -> int:
        return self.positions.size

    @property
    def slow(self) -> SlowState:
        return SlowState(self.L, self.M)

    def copy(self) -> "ParticleEnsemble":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return ParticleEnsemble(self.positions.copy(), self.L, self.M, self.t, rng)


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_ensemble(N: int, p0: LatticeDistribution, L0: float, M0: float, seed,
                  t0: float = 0.0) -> ParticleEnsemble:
    """``N`` i.i.d. draws from ``p0`` by inverse CDF."""
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    rng = _generator(seed)
    cdf = np.cumsum(p0.mass)
    cdf /= cdf[-1]
    k = np.searchsorted(cdf, rng.random(N), side="right")
    positions = p0.window_lo + np.minimum(k, p0.mass.size - 1)
    return ParticleEnsemble(positions.astype(np.int64), float(L0), float(M0), float(t0), rng)


@dataclass
class EventLog:
    """Executed market orders: one row per particle jump."""

    time: list = field(default_factory=list)
    particle: list = field(default_factory=list)
    direction: list = field(default_factory=list)
    level: list = field(default_factory=list)

    def add(self, t: float, idx: np.ndarray, direction: np.ndarray, level: np.ndarray):
        if idx.size:
            self.time.append(np.full(idx.size, t))
            self.particle.append(idx)
            self.direction.append(direction)
            self.level.append(level)

    def extend(self, other: "EventLog"):
        for name in ("time", "particle", "direction", "level"):
            getattr(self, name).extend(getattr(other, name))

    def arrays(self):
        def cat(parts, dtype):
            return np.concatenate(parts).astype(dtype) if parts else np.empty(0, dtype)
        return (cat(self.time, float), cat(self.particle, np.int64),
                cat(self.direction, np.int8), cat(self.level, np.int64))

    def times(self) -> np.ndarray:
        return self.arrays()[0]

    def __len__(self) -> int:
        return int(sum(len(t) for t in self.time))

    def to_csv(self, path) -> None:
        t, i, d, lvl = self.arrays()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "i", "dir", "level"])
            for row in zip(t, i, d, lvl):
                w.writerow([repr(float(row[0])), int(row[1]), int(row[2]), int(row[3])])


def _check_exponent(x: np.ndarray, L: float, M: float, c: float):
    lo, hi = float(x.min()), float(x.max())
    if c * max(abs(lo - L), abs(hi - L), abs(lo - M), abs(hi - M)) > 700:
        raise WindowError("particle rate exponent exceeds 700")


def _slow_rk4(y: float, h: float, f) -> float:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def advance(ens: ParticleEnsemble, params: ModelParams, dt_micro: float, horizon: float,
            news: NewsSequence | None = None, freeze_slow: bool = False,
            record_events: bool = True) -> tuple[ParticleEnsemble, EventLog]:
    """Advance a copy of ``ens`` by ``horizon``; returns it with the jump log.

    News events in ``(t, t + horizon]`` are applied exactly at their times.
    """
    if dt_micro <= 0 or horizon < 0:
        raise ConfigurationError("need dt_micro > 0 and horizon >= 0")
    ens = ens.copy()
    log = EventLog()
    c, K = params.c, params.K
    C_lam, C_mu = params.C_lambda, params.C_mu
    t_end = ens.t + horizon
    pending = [u for u in (news.times() if news else []) if ens.t < u <= t_end]
    x = ens.positions
    L, M, t = ens.L, ens.M, ens.t
    eps = 1e-12 * max(1.0, abs(t_end))

    while t < t_end - eps:
        target = min(t + dt_micro, t_end)
        if pending and pending[0] < target:
            target = pending[0]
        h = target - t
        _check_exponent(x, L, M, c)
        e_minus = np.exp(-c * x)
        e_plus = np.exp(c * x)
        up_scale = K * math.exp(c * L)
        down_scale = K * math.exp(-c * M)
        lam = up_scale * e_minus
        mu = down_scale * e_plus
        max_rate = float(np.max(lam + mu))
        halvings = 0
        while max_rate * h > JUMP_PROB_CAP:
            if halvings == MAX_HALVINGS:
                raise StepSizeError(
                    f"jump probability {max_rate * h:.3g} > {JUMP_PROB_CAP} after {MAX_HALVINGS} halvings"
                )
            h *= 0.5
            halvings += 1
        u = ens.rng.random(x.size)
        up = u < lam * h
        down = ~up & (u < (lam + mu) * h)
        moved = up | down
        if record_events and moved.any():
            idx = np.flatnonzero(moved)
            log.add(t + h, idx, np.where(up[idx], 1, -1).astype(np.int8), x[idx].copy())
        if moved.any():
            x = x + up.astype(np.int64) - down.astype(np.int64)
            e_minus = np.exp(-c * x)
            e_plus = np.exp(c * x)
        if not freeze_slow:
            s_minus = float(np.mean(e_minus))
            s_plus = float(np.mean(e_plus))
            L = _slow_rk4(L, h, lambda v: -K * math.exp(c * v) * s_minus + C_lam)
            M = _slow_rk4(M, h, lambda v: K * math.exp(-c * v) * s_plus - C_mu)
        t = t + h
        if pending and abs(t - pending[0]) <= eps:
            t = pending.pop(0)
            dl, dm = news.jumps_at(t)
            L += dl
            M += dm
    ens.positions, ens.L, ens.M, ens.t = x, L, M, t_end
    return ens, log


def empirical_counts(ens: ParticleEnsemble) -> tuple[int, np.ndarray]:
    lo = int(ens.positions.min())
    return lo, np.bincount(ens.positions - lo)


def empirical_distribution(ens: ParticleEnsemble) -> LatticeDistribution:
    """``p_n^N = #{i : x_i = n} / N`` on ``[min x, max x]``."""
    lo, counts = empirical_counts(ens)
    return LatticeDistribution(lo, counts / ens.N)


def volume_series(events: EventLog | np.ndarray, bucket: float, t0: float = 0.0,
                  t_end: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Event counts per ``[t0 + k b, t0 + (k+1) b)``; returns ``(bucket_start, count)``."""
    if bucket <= 0:
        raise ConfigurationError("bucket must be > 0")
    times = events.times() if isinstance(events, EventLog) else np.asarray(events, float)
    if t_end is None:
        t_end = float(times.max()) if times.size else t0 + bucket
    n_buckets = max(1, math.ceil((t_end - t0) / bucket - 1e-9))
    k = np.floor((times - t0) / bucket).astype(np.int64)
    k = np.clip(k, 0, n_buckets - 1)
    counts = np.bincount(k, minlength=n_buckets)
    return t0 + bucket * np.arange(n_buckets), counts


@dataclass
class ConvergenceRow:
    N: int
    R: int
    sup_err: float
    stderr: float
    curve: np.ndarray


@dataclass
class ConvergenceReport:
    rows: list
    times: np.ndarray
    alpha: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "R", "sup_err"])
            for row in sorted(self.rows, key=lambda r: r.N):
                w.writerow([row.N, row.R, repr(float(row.sup_err))])


def replica_seed(seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent stream for replica ``keys`` of run ``seed``."""
    return np.random.SeedSequence([int(seed), *map(int, keys)])


def convergence_experiment(Ns, params: ModelParams, p0: LatticeDistribution, L0: float, M0: float,
                           horizon: float, alpha: float = -1.0, R: int = 32, seed: int = 0,
                           dt_micro: float = 1e-3, sample_dt: float = 0.25,
                           master_dt: float | None = None) -> ConvergenceReport:
    """Estimate ``sup_{s <= t} E |p^N(s) - p(s)|_alpha^2`` for each ``N``.

    The deterministic reference ``p(t)`` comes from the master equation on
    ``p0``'s window; ensemble errors are averaged over ``R`` seeds at every
    sample time and the supremum over time is reported.
    """
    master_dt = dt_micro if master_dt is None else master_dt
    if master_dt > dt_micro:
        raise ConfigurationError("master_dt must not exceed dt_micro")
    stride = round(sample_dt / master_dt)
    if stride < 1 or abs(stride * master_dt - sample_dt) > 1e-9 * sample_dt:
        raise ConfigurationError("sample_dt must be a multiple of master_dt")
    p0.check_window()
    ref = integrate(MasterState(0.0, p0, SlowState(L0, M0)), params, horizon=horizon,
                    dt=master_dt, stride=stride, recenter=False)
    times = np.asarray(ref.times)
    spec = NormSpec(alpha, params.c)
    rows = []
    for N in sorted(Ns):
        errs = np.empty((R, times.size))
        for r in range(R):
            ens = init_ensemble(N, p0, L0, M0, replica_seed(seed, N, r))
            for k, t in enumerate(times):
                if k:
                    ens, _ = advance(ens, params, dt_micro, t - ens.t, record_events=False)
                emp = empirical_distribution(ens)
                lo = min(emp.window_lo, p0.window_lo)
                hi = max(emp.window_hi, p0.window_hi)
                diff = emp.on_window(lo, hi).mass - ref.states[k].dist.on_window(lo, hi).mass
                errs[r, k] = norm_H_sq(diff, spec, lo)
        mean = errs.mean(axis=0)
        k_sup = int(np.argmax(mean))
        stderr = float(errs[:, k_sup].std(ddof=1) / math.sqrt(R)) if R > 1 else math.nan
        rows.append(ConvergenceRow(N, R, float(mean[k_sup]), stderr, mean))
    return ConvergenceReport(rows, times, alpha)


@dataclass(frozen=True)
class Fig2Config:
    """News-shock scenario. Lattice quantities (A, s0, positions) are in ticks."""

    N: int = 1000
    tick: float = 0.1
    c: float = 0.05
    K: float = 0.0333
    A: float = 80.0
    s0: float = 0.0
    C_lambda: float | None = None
    t_shock: float = 500.0
    mean_wait: float = 1500.0
    horizon: float = 8000.0
    dt_micro: float = 0.5
    bucket: float = 10.0
    shock_target: str = "L"

    def __post_init__(self):
        if self.shock_target not in ("L", "M"):
            raise ConfigurationError("shock_target must be 'L' or 'M'")
        if not 0 < self.t_shock < self.horizon:
            raise ConfigurationError("t_shock must lie inside (0, horizon)")

    def params(self) -> ModelParams:
        from .hydro import equilibrium_V

        base = ModelParams(c=self.c, K=self.K, tick=self.tick, C_lambda=1.0)
        C = self.C_lambda if self.C_lambda is not None else equilibrium_V(self.s0, base)
        return base.replace(C_lambda=C, C_mu=C)


@dataclass
class Fig2Result:
    config: Fig2Config
    params: ModelParams
    seed: int
    second_jump_time: float
    t: np.ndarray
    L: np.ndarray
    M: np.ndarray
    price_mean: np.ndarray
    price_particle0: np.ndarray
    bucket_start: np.ndarray
    volume: np.ndarray
    events: EventLog

    def header(self) -> str:
        cfg = self.config
        return (f"# c={cfg.c!r} K={cfg.K!r} N={cfg.N} tick={cfg.tick!r} A={cfg.A!r} "
                f"C={self.params.C_lambda!r} t_shock={cfg.t_shock!r} "
                f"t_second={self.second_jump_time!r} shock_target={cfg.shock_target} seed={self.seed}")

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            w = csv.writer(fh)
            w.writerow(["t", "L", "M", "price_mean", "price_particle0"])
            for row in zip(self.t, self.L, self.M, self.price_mean, self.price_particle0):
                w.writerow([repr(float(v)) for v in row])

    def write_volume_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            w = csv.writer(fh)
            w.writerow(["bucket_start", "count"])
            for b, n in zip(self.bucket_start, self.volume):
                w.writerow([repr(float(b)), int(n)])


def run_fig2_scenario(seed: int, config: Fig2Config | None = None) -> Fig2Result:
    """Equilibrium start, a shock ``-A`` at ``t_shock`` and a ``+A/2`` rebound after
    an exponential wait with mean ``mean_wait``.

    Prices and beliefs are reported in price units (ticks times ``tick``);
    samples are taken at the end of every volume bucket.
    """
    cfg = config or Fig2Config()
    params = cfg.params()
    root = np.random.SeedSequence(int(seed))
    ens_seed, wait_seed = root.spawn(2)
    wait = float(_generator(wait_seed).exponential(cfg.mean_wait))
    t_second = cfg.t_shock + wait
    jumps = [(cfg.t_shock, -cfg.A)]
    if t_second <= cfg.horizon:
        jumps.append((t_second, cfg.A / 2))
    news = NewsSequence(l_events=jumps) if cfg.shock_target == "L" else NewsSequence(m_events=jumps)

    from .equilibrium import stationary_pi

    p0 = stationary_pi(cfg.s0, params).dist
    ens = init_ensemble(cfg.N, p0, cfg.s0, cfg.s0, ens_seed)
    n_buckets = math.ceil(cfg.horizon / cfg.bucket - 1e-9)
    rows = [(0.0, ens.L, ens.M, ens.positions.mean(), ens.positions[0])]
    events = EventLog()
    for k in range(1, n_buckets + 1):
        t_next = min(k * cfg.bucket, cfg.horizon)
        ens, log = advance(ens, params, cfg.dt_micro, t_next - ens.t, news=news)
        events.extend(log)
        rows.append((ens.t, ens.L, ens.M, ens.positions.mean(), ens.positions[0]))
    t, L, M, mean, x0 = (np.array(col, dtype=float) for col in zip(*rows))
    starts, counts = volume_series(events, cfg.bucket, 0.0, cfg.horizon)
    tick = cfg.tick
    return Fig2Result(cfg, params, int(seed), t_second, t, L * tick, M * tick, mean * tick,
                      x0 * tick, starts, counts, events)


__all__ = [
    "ConvergenceReport",
    "EventLog",
    "Fig2Config",
    "Fig2Result",
    "ParticleEnsemble",
    "advance",
    "convergence_experiment",
    "empirical_counts",
    "empirical_distribution",
    "init_ensemble",
    "replica_seed",
    "run_fig2_scenario",
    "volume_series",
]
