import math

import numpy as np
import pytest

from nlob import hydro, master, particle
from nlob.equilibrium import stationary_pi
from nlob.errors import ConfigurationError, StepSizeError
from nlob.model import LatticeDistribution, ModelParams, NewsSequence


def eq_params(c=1.0, K=1.0, s=0.0):
    base = ModelParams(c=c, K=K)
    V = hydro.equilibrium_V(s, base)
    return base.replace(C_lambda=V, C_mu=V)


class TestInit:
    def test_point_mass(self):
        ens = particle.init_ensemble(50, LatticeDistribution.point_mass(0, -3, 3), 0.0, 0.0, seed=1)
        assert np.all(ens.positions == 0) and ens.positions.dtype == np.int64

    def test_clt_band(self):
        c = 0.5
        pi = stationary_pi(0.0, ModelParams(c=c)).dist
        N = 100_000
        ens = particle.init_ensemble(N, pi, 0.0, 0.0, seed=2)
        assert abs(ens.positions.mean()) <= 3 / math.sqrt(2 * c * N)

    def test_deterministic(self):
        pi = stationary_pi(0.2, ModelParams(c=0.3)).dist
        a = particle.init_ensemble(500, pi, 0.0, 0.0, seed=2**64 - 1)
        b = particle.init_ensemble(500, pi, 0.0, 0.0, seed=2**64 - 1)
        assert np.array_equal(a.positions, b.positions)
        assert a.rng.bit_generator.state == b.rng.bit_generator.state

    def test_rejects_empty(self):
        with pytest.raises(ConfigurationError):
            particle.init_ensemble(0, LatticeDistribution.point_mass(0), 0.0, 0.0, seed=1)


class TestAdvance:
    def test_no_takers_linear_beliefs(self):
        params = ModelParams(K=0.0, C_lambda=0.7, C_mu=0.4)
        ens = particle.init_ensemble(10, LatticeDistribution.point_mass(0), 1.0, -1.0, seed=3)
        out, log = particle.advance(ens, params, 0.01, 2.0)
        assert len(log) == 0 and np.all(out.positions == 0)
        assert out.L == pytest.approx(1.0 + 0.7 * 2.0, abs=1e-12)
        assert out.M == pytest.approx(-1.0 - 0.4 * 2.0, abs=1e-12)

    def test_input_untouched(self):
        params = eq_params()
        ens = particle.init_ensemble(20, stationary_pi(0.0, params).dist, 0.0, 0.0, seed=4)
        before = ens.positions.copy()
        particle.advance(ens, params, 0.01, 1.0)
        assert np.array_equal(ens.positions, before) and ens.t == 0.0

    def test_split_equals_whole(self):
        params = eq_params()
        ens = particle.init_ensemble(30, stationary_pi(0.0, params).dist, 0.1, -0.1, seed=6)
        whole, log_w = particle.advance(ens, params, 0.01, 1.0)
        half, log_a = particle.advance(ens, params, 0.01, 0.5)
        half, log_b = particle.advance(half, params, 0.01, 0.5)
        assert np.array_equal(whole.positions, half.positions)
        assert whole.L == pytest.approx(half.L, abs=1e-12)
        assert len(log_w) == len(log_a) + len(log_b)

    def test_event_log_consistent(self):
        params = eq_params()
        ens = particle.init_ensemble(40, stationary_pi(0.0, params).dist, 0.3, -0.3, seed=7)
        out, log = particle.advance(ens, params, 0.01, 3.0)
        t, i, d, lvl = log.arrays()
        assert np.all(np.diff(t) >= 0) and set(np.unique(d)) <= {-1, 1}
        replay = ens.positions.copy()
        for ti, ii, di, li in zip(t, i, d, lvl):
            assert replay[ii] == li
            replay[ii] += di
        assert np.array_equal(replay, out.positions)

    def test_news_jumps_beliefs(self):
        params = ModelParams(K=0.0)
        ens = particle.init_ensemble(5, LatticeDistribution.point_mass(0), 0.0, 0.0, seed=1)
        news = NewsSequence(l_events=((0.505, -2.0),), m_events=((0.7, 1.5),))
        out, _ = particle.advance(ens, params, 0.01, 1.0, news=news)
        assert out.L == pytest.approx(1.0 - 2.0, abs=1e-12)
        assert out.M == pytest.approx(-1.0 + 1.5, abs=1e-12)

    def test_rate_guard(self):
        params = ModelParams(c=1.0, K=1e6)
        ens = particle.init_ensemble(5, LatticeDistribution.point_mass(0), 0.0, 0.0, seed=1)
        with pytest.raises(StepSizeError):
            particle.advance(ens, params, 1.0, 1.0)

    def test_event_count_matches_master_rates(self):
        params = eq_params()
        s, d, N, T = 0.0, 0.3, 400, 2.0
        st = master.initial_state(s, params, d)
        ref = master.integrate(st, params, horizon=T, dt=1e-3, stride=10)
        rate = np.array(ref.E_lambda) + np.array(ref.E_mu)
        t = np.array(ref.times)
        mean = N * float(np.sum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t)))
        for seed in range(6):
            ens = particle.init_ensemble(N, st.dist, s + d, s - d, seed=seed)
            _, log = particle.advance(ens, params, 1e-3, T)
            assert abs(len(log) - mean) <= 4 * math.sqrt(mean)

    def test_relabeling(self):
        params = eq_params()
        pi = stationary_pi(0.0, params).dist
        ens = particle.init_ensemble(64, pi, 0.2, -0.2, seed=8)
        perm = ens.copy()
        perm.positions = ens.positions[::-1].copy()
        assert np.array_equal(particle.empirical_distribution(ens).mass, particle.empirical_distribution(perm).mass)
        # with rates too small to fire in one step, the belief flow sees only symmetric sums
        tiny = params.replace(K=1e-12)
        a, _ = particle.advance(ens, tiny, 0.01, 0.5)
        b, _ = particle.advance(perm, tiny, 0.01, 0.5)
        assert a.L == pytest.approx(b.L, rel=1e-14) and a.M == pytest.approx(b.M, rel=1e-14)


class TestEmpirical:
    def test_point(self):
        ens = particle.ParticleEnsemble(np.full(7, 3), 0.0, 0.0, 0.0, np.random.default_rng(0))
        p = particle.empirical_distribution(ens)
        assert p.window_lo == 3 and p.mass.tolist() == [1.0]

    def test_counts(self):
        ens = particle.ParticleEnsemble(np.array([0, 0, 1, 2]), 0.0, 0.0, 0.0, np.random.default_rng(0))
        p = particle.empirical_distribution(ens)
        assert p.mass.tolist() == [0.5, 0.25, 0.25] and p.total() == 1.0

    def test_sum_exact(self):
        rng = np.random.default_rng(1)
        ens = particle.ParticleEnsemble(rng.integers(-20, 20, 999), 0.0, 0.0, 0.0, rng)
        lo, counts = particle.empirical_counts(ens)
        assert counts.sum() == 999


class TestVolume:
    def test_empty(self):
        _, counts = particle.volume_series(particle.EventLog(), 1.0, 0.0, 5.0)
        assert counts.tolist() == [0] * 5

    def test_single_bucket(self):
        starts, counts = particle.volume_series(np.array([2.1, 2.2, 2.9]), 1.0, 0.0, 4.0)
        assert counts.tolist() == [0, 0, 3, 0] and starts.tolist() == [0.0, 1.0, 2.0, 3.0]

    def test_bad_bucket(self):
        with pytest.raises(ConfigurationError):
            particle.volume_series(np.array([1.0]), 0.0)


class TestConvergence:
    def test_report_shape(self, tmp_path):
        params = eq_params()
        p0 = master.initial_state(0.0, params, point_mass=True).dist
        rep = particle.convergence_experiment([40, 20], params, p0, 0.3, -0.3, 0.5, R=3, seed=1,
                                              dt_micro=1e-3, sample_dt=0.25)
        assert [r.N for r in rep.rows] == [20, 40]
        assert all(r.sup_err >= 0 for r in rep.rows)
        path = tmp_path / "c.csv"
        rep.to_csv(path)
        assert path.read_text().splitlines()[0] == "N,R,sup_err"

    def test_master_dt_check(self):
        params = eq_params()
        p0 = master.initial_state(0.0, params).dist
        with pytest.raises(ConfigurationError):
            particle.convergence_experiment([10], params, p0, 0, 0, 1.0, R=2, dt_micro=1e-3, master_dt=2e-3)

    def test_step_halving_bias_below_noise(self):
        params = eq_params()
        p0 = master.initial_state(0.0, params, point_mass=True).dist
        kw = dict(horizon=2.0, alpha=-1.0, R=32, seed=11, sample_dt=0.25, master_dt=5e-4)
        coarse = particle.convergence_experiment([100], params, p0, 0.5, -0.5, dt_micro=2e-3, **kw).rows[0]
        fine = particle.convergence_experiment([100], params, p0, 0.5, -0.5, dt_micro=1e-3, **kw).rows[0]
        diff = abs(coarse.sup_err - fine.sup_err)
        # below the spread between seeds, and not detectable against the two estimates' joint error
        assert diff < fine.stderr * math.sqrt(fine.R)
        assert diff <= 3 * math.hypot(coarse.stderr, fine.stderr)


class TestFig2:
    def test_header_and_determinism(self, tmp_path):
        cfg = particle.Fig2Config(horizon=1500.0)
        a = particle.run_fig2_scenario(3, cfg)
        b = particle.run_fig2_scenario(3, cfg)
        for res, name in ((a, "a"), (b, "b")):
            res.write_summary_csv(tmp_path / f"s{name}.csv")
            res.write_volume_csv(tmp_path / f"v{name}.csv")
            res.events.to_csv(tmp_path / f"e{name}.csv")
        for stem in "sve":
            assert (tmp_path / f"{stem}a.csv").read_bytes() == (tmp_path / f"{stem}b.csv").read_bytes()
        header = (tmp_path / "sa.csv").read_text().splitlines()[0]
        for token in ("c=0.05", "K=0.0333", "N=1000", "tick=0.1", "A=80.0"):
            assert token in header.split()

    def test_quiet_before_shock(self):
        res = particle.run_fig2_scenario(4, particle.Fig2Config(horizon=1000.0))
        pre = res.t <= res.config.t_shock
        assert np.max(np.abs(res.price_mean[pre])) < 0.5  # price units; stationary spread is ~0.03
        vol = res.volume[res.bucket_start < res.config.t_shock]
        assert vol.std() < 0.25 * vol.mean()

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            particle.Fig2Config(shock_target="X")
        with pytest.raises(ConfigurationError):
            particle.Fig2Config(t_shock=9000.0)
