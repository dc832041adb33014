import math

import numpy as np
import pytest

import oracles as orc
from nlob import limits
from nlob.errors import ConfigurationError, StepSizeError


class TestEhrenfest:
    def test_n1(self):
        assert limits.ehrenfest_stationary(1).mass.tolist() == pytest.approx([0.25, 0.5, 0.25], rel=1e-15)

    def test_symmetric(self):
        m = limits.ehrenfest_stationary(37).mass
        assert np.allclose(m, m[::-1], rtol=1e-13, atol=0)

    def test_tv(self):
        tv = limits.ehrenfest_gaussian_tv(50)
        assert tv <= 0.01
        assert tv == pytest.approx(orc.FROZEN["ehrenfest_tv_50"], rel=1e-9)

    @pytest.mark.parametrize("N", [3, 16, 64])
    def test_chain_occupation(self, N):
        chain = limits.EhrenfestChain(N)
        steps, batches = 400_000, 40
        path = chain.run(steps, seed=N)
        assert np.all(np.abs(path) <= N)
        # the urn has period 2: pool visits at k and k+1 by looking at even and odd steps together
        pi = limits.ehrenfest_stationary(N).mass
        occ = np.stack([np.bincount(b + N, minlength=2 * N + 1) for b in np.split(path[steps // 10:], batches)])
        freq = occ / occ.sum(axis=1, keepdims=True)
        mean, se = freq.mean(axis=0), freq.std(axis=0, ddof=1) / math.sqrt(batches)
        core = pi > 1e-3
        assert np.all(np.abs(mean - pi)[core] <= 3 * se[core] + 1e-12)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            limits.EhrenfestChain(3, 4)
        with pytest.raises(ConfigurationError):
            limits.ehrenfest_stationary(0)


class TestGeneratorScaling:
    def test_linear_ou_rate(self):
        e = [limits.generator_scaling_error("discrete_ou", "x", 0.5, n) for n in (16, 64, 256)]
        assert e[0] / e[1] >= 1.8 and e[1] / e[2] >= 1.8

    def test_quadratic_at_origin(self):
        for model in ("ehrenfest", "discrete_ou"):
            vals = [limits.scaled_generator(model, "x2", 0.0, n, 1.0) for n in (16, 64, 256)]
            assert vals == pytest.approx([2.0] * 3, abs=1e-12)

    @pytest.mark.parametrize("model", ["ehrenfest", "discrete_ou"])
    @pytest.mark.parametrize("f", sorted(limits.TEST_FUNCTIONS))
    @pytest.mark.parametrize("x", [0.0, 0.5])
    def test_decreasing(self, model, f, x):
        e = [limits.generator_scaling_error(model, f, x, n) for n in (16, 64, 256)]
        for a, b in zip(e, e[1:]):
            # an exact Taylor match (error at roundoff) may repeat; anything larger must shrink
            assert b < a or max(a, b) <= 1e-12

    def test_ou_generator_values(self):
        assert limits.ou_generator("x2", 0.5, 1.0) == pytest.approx(2 - 4 * 0.25)
        assert limits.ou_generator("cos", 0.0, 3.0) == pytest.approx(-1.0)

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            limits.generator_scaling_error("ehrenfest", "sin", 0.0, 16)
        with pytest.raises(ConfigurationError):
            limits.generator_scaling_error("brownian", "x", 0.0, 16)
        with pytest.raises(ConfigurationError):
            limits.generator_scaling_error("discrete_ou", "x", 0.0, 2)

    def test_csv(self, tmp_path):
        path = tmp_path / "s.csv"
        limits.write_scaling_csv(path, limits.scaling_table())
        lines = path.read_text().splitlines()
        assert lines[0] == "model,f,x,n,err" and len(lines) == 1 + 2 * 4 * 2 * 3


class TestSlowFlow:
    def test_constant_when_equal(self):
        L, M = limits.lm_closed_form(0.4, 0.4, 1.0, np.linspace(0, 10, 11))
        assert np.all(L == 0.4) and np.all(M == 0.4)

    def test_d0_minus_one(self):
        L, M = limits.lm_closed_form(-0.5, 0.5, 1.0, 5.0)
        t, Lr, Mr = limits.lm_rk4(-0.5, 0.5, 1.0, 5.0, 1e-3)
        assert L - M == pytest.approx(Lr[-1] - Mr[-1], abs=1e-8)

    @pytest.mark.parametrize("L0,M0,c", [(1.0, -0.5, 1.0), (-2.0, 0.3, 0.5), (0.2, 0.1, 3.0)])
    def test_sup_norm(self, L0, M0, c):
        t, Lr, Mr = limits.lm_rk4(L0, M0, c, 10.0, 1e-3)
        L, M = limits.lm_closed_form(L0, M0, c, t)
        assert max(np.max(np.abs(L - Lr)), np.max(np.abs(M - Mr))) <= 1e-8
        assert np.max(np.abs(L + M - (L0 + M0))) <= 1e-12

    def test_independent_oracle(self):
        ref = orc.euler_rk4(lambda y: [1 - math.exp(0.7 * (y[0] - y[1])), math.exp(0.7 * (y[0] - y[1])) - 1],
                            [1.5, -1.0], 3.0, 1e-3)
        L, M = limits.lm_closed_form(1.5, -1.0, 0.7, 3.0)
        assert (L, M) == pytest.approx(tuple(ref[-1]), abs=1e-10)

    def test_long_run(self):
        L, M = limits.lm_closed_form(2.0, -1.0, 1.0, 50.0)
        assert L == pytest.approx(0.5, abs=1e-12) and M == pytest.approx(0.5, abs=1e-12)


class TestContinuum:
    def test_noise_free_fixed_point(self):
        p = limits.simulate_continuum(0.3, 0.3, 0.3, 1.0, 0.01, 20.0, seed=1, noise=False)
        assert np.all(p.X == 0.3)

    def test_gap_closes(self):
        p = limits.simulate_continuum(0.0, 1.0, -1.0, 1.0, 0.005, 10.0, seed=1)
        gap = np.abs(p.L - p.M)
        assert np.all(np.diff(gap) <= 0) and gap[-1] < 1e-6
        assert np.max(np.abs(p.L + p.M)) <= 1e-12

    def test_variance_across_seeds(self):
        # single 200-unit paths scatter by ~6%; the pooled estimate must be close and unbiased
        target = 1 / (2 * 1.0)
        ests = []
        for seed in range(24):
            p = limits.simulate_continuum(0.0, 0.0, 0.0, 1.0, 0.01, 200.0, seed=seed)
            ests.append(p.X[500:].var())
        ests = np.array(ests)
        assert np.mean(np.abs(ests / target - 1) <= 0.10) >= 0.8
        assert abs(ests.mean() / target - 1) <= 3 * ests.std(ddof=1) / math.sqrt(ests.size) / target + 0.01

    def test_autocorrelation(self):
        c, dt, lag = 1.0, 0.01, 10
        p = limits.simulate_continuum(0.0, 0.3, 0.3, c, dt, 2000.0, seed=3)
        X = p.X[1000:] - p.X[1000:].mean()
        ac = np.dot(X[:-lag], X[lag:]) / np.dot(X, X)
        assert ac == pytest.approx(math.exp(-2 * c * lag * dt), rel=0.05)

    def test_deterministic(self):
        a = limits.simulate_continuum(0.1, 0.5, -0.2, 1.0, 0.01, 5.0, seed=9)
        b = limits.simulate_continuum(0.1, 0.5, -0.2, 1.0, 0.01, 5.0, seed=9)
        assert np.array_equal(a.X, b.X)

    def test_step_guard(self):
        with pytest.raises(StepSizeError):
            limits.simulate_continuum(0.0, 3.0, 0.0, 1.0, 0.01, 1.0, seed=1)

    def test_csv(self, tmp_path):
        path = tmp_path / "x.csv"
        limits.simulate_continuum(0.0, 0.0, 0.0, 1.0, 0.01, 0.05, seed=1).to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,X,L,M" and len(lines) == 7
