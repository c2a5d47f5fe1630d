"""Successive-conditional simulation against direct prior draws.

Alternating a full sweep with fresh votes drawn from the current parameters
leaves the prior invariant, so long-run moments must match direct prior
simulation.  A light-tailed test prior keeps every second moment finite.
"""
import math

import numpy as np
import pytest
from numba import njit

from bridgepoint.distributions import RngStream
from bridgepoint.model import Legislator, Link, PriorConfig, RollCallData, Vote
from bridgepoint.sampler import SweepPlan, _sweep, _update_latent, initialize

N_ITER = 200_000
BURN = 5_000
N_PRIOR = 200_000
MAX_Z = 4.0
_MISSING = int(Vote.MISSING)

TEST_PRIOR = dict(
    a=2.0, b=2.0, a_omega=2.0, b_omega=3.0,
    kappa2_alpha_shape=6.0, kappa2_alpha_rate=5.0,
    kappa2_mu_shape=6.0, kappa2_mu_rate=5.0,
    sigma2_shape=6.0, sigma2_rate=5.0,
)
NAMES = ("mu0", "mu2", "alpha0", "alpha2", "spike0", "spike2", "eta", "sigma2", "n_bridges")


@njit(cache=True)
def _cdf(x, logit):
    if logit:
        return 1.0 / (1.0 + math.exp(-x))
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit
def _simulate(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, zeta, hypers,
              prior, anchors, logit, rng, rec):
    n_leg, n_mot = votes.shape
    for t in range(rec.shape[0]):
        _sweep(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, zeta, hypers,
               prior, anchors, True, False, logit, rng)
        for i in range(n_leg):
            for j in range(n_mot):
                if votes[i, j] == _MISSING:
                    continue
                b = beta1[i] if group[j] == 1 else beta0[i]
                votes[i, j] = 1 if rng.random() < _cdf(mu[j] + alpha[j] * b, logit) else 0
        _update_latent(votes, imputed, group, latent, mu, alpha, beta0, beta1, logit, rng)
        rec[t, 0] = mu[0]
        rec[t, 1] = mu[2]
        rec[t, 2] = alpha[0]
        rec[t, 3] = alpha[2]
        rec[t, 4] = 1.0 if is_zero[0] else 0.0
        rec[t, 5] = 1.0 if is_zero[2] else 0.0
        rec[t, 6] = hypers[4]
        rec[t, 7] = hypers[5]
        rec[t, 8] = zeta.sum()


def _prior_draws(cfg, n_leg, seed):
    g = np.random.default_rng(seed)
    n = N_PRIOR
    omega = g.beta(cfg.a_omega, cfg.b_omega, n)
    k2a = 1.0 / g.gamma(cfg.kappa2_alpha_shape, 1.0 / cfg.kappa2_alpha_rate, n)
    rho = g.normal(cfg.rho_mu_mean, math.sqrt(cfg.rho_mu_var), n)
    k2m = 1.0 / g.gamma(cfg.kappa2_mu_shape, 1.0 / cfg.kappa2_mu_rate, n)
    eta = g.normal(cfg.eta_mean, math.sqrt(cfg.eta_var), n)
    s2 = 1.0 / g.gamma(cfg.sigma2_shape, 1.0 / cfg.sigma2_rate, n)
    cols = []
    for _ in range(2):
        cols.append(g.normal(rho, np.sqrt(k2m)))
    spikes = [g.random(n) < omega for _ in range(2)]
    alphas = [np.where(s, 0.0, g.normal(0.0, np.sqrt(k2a))) for s in spikes]
    # bridge count: truncated beta-binomial, enumerated with lgamma
    counts = np.arange(2, n_leg + 1)
    logw = np.array([math.lgamma(n_leg + 1) - math.lgamma(s + 1) - math.lgamma(n_leg - s + 1)
                     + math.lgamma(cfg.a + s) + math.lgamma(cfg.b + n_leg - s) for s in counts])
    w = np.exp(logw - logw.max())
    bridges = g.choice(counts, n, p=w / w.sum())
    return np.column_stack([cols[0], cols[1], alphas[0], alphas[1], spikes[0], spikes[1], eta, s2, bridges])


def _batch_se(x, n_batches=200):
    b = x[: x.size // n_batches * n_batches].reshape(n_batches, -1).mean(axis=1)
    return b.std(ddof=1) / math.sqrt(n_batches)


def _z_scores(link, votes, seed):
    cfg = PriorConfig(link=link, **TEST_PRIOR)
    data = RollCallData(np.array(votes), np.array([0, 1, 1]), [Legislator(str(i)) for i in range(4)], 0, 1)
    plan = SweepPlan(cfg)
    rng = RngStream(seed)
    state = initialize(data, cfg, rng)
    rec = np.zeros((N_ITER, len(NAMES)))
    _simulate(data.votes.copy(), state.imputed, data.group, state.latent, state.mu, state.alpha,
              state.is_zero, state.beta0, state.beta1, state.zeta, state.hypers, cfg.as_array(),
              np.array([0, 1]), plan.is_logit, rng.generator, rec)
    chain = rec[BURN:]
    prior = _prior_draws(cfg, 4, seed + 1)
    out = {}
    for k, name in enumerate(NAMES):
        for label, f in (("mean", lambda v: v), ("second", lambda v: v * v)):
            if name.startswith("spike") and label == "second":
                continue
            a, b = f(chain[:, k]), f(prior[:, k])
            se = math.sqrt(_batch_se(a) ** 2 + b.var(ddof=1) / b.size)
            out[f"{name}.{label}"] = (a.mean() - b.mean()) / se
    return out


@pytest.mark.slow
@pytest.mark.parametrize("link", [Link.PROBIT, Link.LOGIT])
def test_getting_it_right(link):
    votes = [[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]]
    z = _z_scores(link, votes, seed=31)
    bad = {k: round(v, 2) for k, v in z.items() if abs(v) > MAX_Z}
    assert not bad, bad


@pytest.mark.slow
def test_getting_it_right_with_missing_cells():
    m = int(Vote.MISSING)
    votes = [[1, m, 0], [0, 1, 0], [m, 1, 0], [0, 0, m]]
    z = _z_scores(Link.PROBIT, votes, seed=32)
    bad = {k: round(v, 2) for k, v in z.items() if abs(v) > MAX_Z}
    assert not bad, bad
