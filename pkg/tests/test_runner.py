import numpy as np
import pytest

from bridgepoint.diagnostics import gelman_rubin
from bridgepoint.distributions import RngStream
from bridgepoint.model import HYPER_NAMES, Link, PriorConfig
from bridgepoint.runner import RunSettings, fit, run
from bridgepoint.simulation import ScenarioConfig, generate
from helpers import random_data


@pytest.fixture(scope="module")
def small_data():
    return random_data(np.random.default_rng(0), 6, 10, missing_rate=0.05)


class TestSettings:
    def test_defaults(self):
        s = RunSettings()
        assert (s.n_chains, s.n_iter, s.burn_in, s.thin) == (4, 5000, 2500, 5)
        assert s.n_kept == 500

    @pytest.mark.parametrize("kw", [dict(n_iter=10, burn_in=10), dict(burn_in=-1), dict(thin=0), dict(n_chains=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            RunSettings(**kw)


class TestRun:
    def test_single_kept_draw(self, small_data):
        draws = run(small_data, PriorConfig(), n_chains=2, n_iter=6, burn_in=5, thin=1)
        assert draws.beta0.shape == (2, 1, 6)
        assert draws.hypers.shape == (2, 1, len(HYPER_NAMES))

    def test_kept_count_with_thinning(self, small_data):
        draws = run(small_data, PriorConfig(), n_chains=1, n_iter=23, burn_in=3, thin=5)
        assert draws.n_kept == len(range(3, 23, 5)) == 4

    @pytest.mark.parametrize("link", list(Link))
    def test_deterministic(self, small_data, link):
        kw = dict(n_chains=2, n_iter=60, burn_in=20, thin=2, seed=9)
        a = run(small_data, PriorConfig(link=link), **kw)
        b = run(small_data, PriorConfig(link=link), **kw)
        for name in ("mu", "alpha", "beta0", "beta1", "zeta", "hypers"):
            assert np.array_equal(getattr(a, name), getattr(b, name))
        assert a.config_fingerprint() == b.config_fingerprint()

    def test_worker_count_does_not_matter(self, small_data):
        settings = RunSettings(n_chains=3, n_iter=40, burn_in=10, thin=1, seed=4)
        a = run(small_data, PriorConfig(), settings, max_workers=1)
        b = run(small_data, PriorConfig(), settings, max_workers=3)
        assert np.array_equal(a.beta1, b.beta1) and np.array_equal(a.zeta, b.zeta)

    def test_chains_differ(self, small_data):
        draws = run(small_data, PriorConfig(), n_chains=2, n_iter=30, burn_in=10, thin=1)
        assert not np.array_equal(draws.beta0[0], draws.beta0[1])

    def test_stored_draws_respect_invariants(self, small_data):
        draws = run(small_data, PriorConfig(a=1.0, b=1.0), n_chains=2, n_iter=300, burn_in=100, thin=1)
        z = draws.zeta
        assert np.all(z.sum(axis=2) >= 2)
        assert np.array_equal(draws.beta0[z], draws.beta1[z])
        assert np.all(draws.beta0[:, :, small_data.anchor_neg] == -1.0)
        assert np.all(draws.beta0[:, :, small_data.anchor_pos] == 1.0)
        assert np.all((draws.alpha == 0.0) | ~np.isclose(draws.alpha, 0.0, atol=0))
        assert np.all(draws.hypers[:, :, [1, 3, 5]] > 0)

    def test_fixed_bridges(self, small_data):
        draws = run(small_data, PriorConfig(), n_chains=1, n_iter=50, burn_in=10, thin=1, fix_zeta=True)
        assert draws.zeta.all() and draws.fix_zeta
        assert np.array_equal(draws.beta0, draws.beta1)

    def test_settings_and_overrides_are_exclusive(self, small_data):
        with pytest.raises(TypeError):
            run(small_data, PriorConfig(), RunSettings(), n_iter=10)

    def test_fit_wrapper(self, small_data):
        draws = fit(small_data, "logit", n_chains=1, n_iter=20, burn_in=10, thin=1)
        assert draws.config.link is Link.LOGIT
        assert draws.legislator_ids == small_data.legislator_ids
        assert draws.data_fingerprint == small_data.fingerprint()

    def test_trace_selectors(self, small_data):
        draws = run(small_data, PriorConfig(), n_chains=2, n_iter=20, burn_in=10, thin=1)
        assert draws.trace("sigma2").shape == (2, 10)
        assert draws.trace("zeta[1]").dtype == np.float64
        with pytest.raises(KeyError):
            draws.trace("gamma[0]")
        assert len(draws.selectors(("beta0",))) == 6 + len(HYPER_NAMES)


@pytest.mark.slow
def test_chains_agree_on_identifiable_instance():
    cfg = ScenarioConfig(n_legislators=12, n_group0=30, n_group1=40, n_changers=2, link=Link.PROBIT, seed=3,
                         truth_source="direct")
    data, _ = generate(cfg, RngStream(3, 1))
    draws = run(data, PriorConfig(), n_chains=4, n_iter=5000, seed=1)
    rhat = {s: gelman_rubin(draws, s) for s in draws.selectors(("beta0", "beta1"))
            if draws.trace(s).var(axis=1).min() > 0}
    worst = max(rhat, key=rhat.get)
    assert rhat[worst] < 1.1, (worst, rhat[worst])
