"""Gibbs sweeps for the joint two-group spatial voting model.

One sweep runs, in order: the spike-and-slab discrimination update, the
intercept update, a sequential scan drawing each bridge indicator with that
legislator's ideal points integrated out (followed at once by a fresh draw of
those ideal points), the identification map, the latent augmentation (probit
utilities or Polya-Gamma weights), the hyperparameters, and finally fresh
imputations for missing votes.

Anchor handling comes in two flavours.  With ``anchor_mode="pinned"`` (the
default) the anchors' group-0 ideal points are constants of the model, so every
step is an exact full conditional and the identification map reduces to the
identity.  With ``anchor_mode="expanded"`` the anchors are drawn like everyone
else and the affine map re-pins them after each sweep; this parameter-expanded
variant is kept for comparison but is not an exact sampler for the stated prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .distributions import as_generator, inverse_gamma, polya_gamma_1, truncnorm_geq0, truncnorm_lt0
from .model import K_DIM, Link, ModelState, PriorConfig, RollCallData, Vote

STEP_ORDER = ("policy", "identification", "latent", "hyperparameters", "missing")
ANCHOR_MODES = ("pinned", "expanded")

# prior array layout (PriorConfig.as_array)
_A, _B, _A_OM, _B_OM, _KA_SH, _KA_RT, _KM_SH, _KM_RT, _S2_SH, _S2_RT, _RHO_M, _RHO_V, _ETA_M, _ETA_V, _K = range(15)
# hyper array layout (model.HYPER_NAMES)
_OMEGA, _KAPPA2_A, _RHO, _KAPPA2_M, _ETA, _SIGMA2 = range(6)

_MISSING = int(Vote.MISSING)


class DegenerateAnchorError(ArithmeticError):
    """Both anchors landed on the same ideal point; the identification map is undefined."""


@dataclass(frozen=True)
class SweepPlan:
    config: PriorConfig = field(default_factory=PriorConfig)
    anchor_mode: str = "pinned"
    fix_zeta: bool = False
    step_order: tuple = STEP_ORDER

    def __post_init__(self):
        if self.anchor_mode not in ANCHOR_MODES:
            raise ValueError(f"anchor_mode must be one of {ANCHOR_MODES}")
        if tuple(self.step_order) != STEP_ORDER:
            raise ValueError("the sweep step order is fixed")

    @property
    def link(self) -> Link:
        return self.config.link

    @property
    def is_logit(self) -> bool:
        return self.config.link is Link.LOGIT

    @property
    def pinned(self) -> bool:
        return self.anchor_mode == "pinned"


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, inline="always")
def _yea(votes, imputed, i, j):
    v = votes[i, j]
    if v == _MISSING:
        return 1.0 if imputed[i, j] else 0.0
    return float(v)


@njit(cache=True, inline="always")
def _beta_for(beta0, beta1, group, i, j):
    return beta1[i] if group[j] == 1 else beta0[i]


@njit(cache=True)
def _spike_probability(omega, kappa2, post_var, post_mean):
    """Posterior weight of the point mass at zero for one discrimination parameter.

    Slab evidence relative to the spike is sqrt(post_var / kappa2) *
    exp(post_mean^2 / (2 post_var)); the ratio involves standard deviations.
    """
    if omega <= 0.0:
        return 0.0
    if omega >= 1.0:
        return 1.0
    log_odds_slab = (
        math.log1p(-omega) - math.log(omega)
        + 0.5 * math.log(post_var / kappa2)
        + 0.5 * post_mean * post_mean / post_var
    )
    if log_odds_slab > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(log_odds_slab))


@njit(cache=True)
def _alpha_moments(votes, imputed, group, latent, mu, beta0, beta1, kappa2, logit, j):
    n_leg = votes.shape[0]
    prec = 1.0 / kappa2
    lin = 0.0
    for i in range(n_leg):
        b = _beta_for(beta0, beta1, group, i, j)
        if logit:
            w = latent[i, j]
            prec += w * b * b
            lin += (_yea(votes, imputed, i, j) - 0.5 - w * mu[j]) * b
        else:
            prec += b * b
            lin += (latent[i, j] - mu[j]) * b
    post_var = 1.0 / prec
    return post_var, post_var * lin


@njit(cache=True)
def _update_alpha(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, hypers, logit, rng):
    omega = hypers[_OMEGA]
    kappa2 = hypers[_KAPPA2_A]
    for j in range(votes.shape[1]):
        v, m = _alpha_moments(votes, imputed, group, latent, mu, beta0, beta1, kappa2, logit, j)
        if rng.random() < _spike_probability(omega, kappa2, v, m):
            alpha[j] = 0.0
            is_zero[j] = True
        else:
            alpha[j] = m + math.sqrt(v) * rng.standard_normal()
            is_zero[j] = False


@njit(cache=True)
def _mu_moments(votes, imputed, group, latent, alpha, beta0, beta1, hypers, logit, j):
    n_leg = votes.shape[0]
    prec = 1.0 / hypers[_KAPPA2_M]
    lin = hypers[_RHO] / hypers[_KAPPA2_M]
    for i in range(n_leg):
        ab = alpha[j] * _beta_for(beta0, beta1, group, i, j)
        if logit:
            w = latent[i, j]
            prec += w
            lin += _yea(votes, imputed, i, j) - 0.5 - w * ab
        else:
            prec += 1.0
            lin += latent[i, j] - ab
    post_var = 1.0 / prec
    return post_var, post_var * lin


@njit(cache=True)
def _update_mu(votes, imputed, group, latent, mu, alpha, beta0, beta1, hypers, logit, rng):
    for j in range(votes.shape[1]):
        v, m = _mu_moments(votes, imputed, group, latent, alpha, beta0, beta1, hypers, logit, j)
        mu[j] = m + math.sqrt(v) * rng.standard_normal()


@njit(cache=True)
def _legislator_sums(votes, imputed, group, latent, mu, alpha, logit, i):
    """Per-group precision and linear terms of legislator i's ideal-point likelihood."""
    a0 = 0.0
    a1 = 0.0
    c0 = 0.0
    c1 = 0.0
    for j in range(votes.shape[1]):
        a = alpha[j]
        if a == 0.0:
            continue
        if logit:
            w = latent[i, j]
            aa = w * a * a
            cc = (_yea(votes, imputed, i, j) - 0.5 - w * mu[j]) * a
        else:
            aa = a * a
            cc = (latent[i, j] - mu[j]) * a
        if group[j] == 1:
            a1 += aa
            c1 += cc
        else:
            a0 += aa
            c0 += cc
    return a0, a1, c0, c1


@njit(cache=True)
def _log_marginal(prec_lik, lin, eta, sigma2):
    """log of the integral of exp(-prec_lik b^2 / 2 + lin b) N(b | eta, sigma2) db."""
    prec = prec_lik + 1.0 / sigma2
    t = lin + eta / sigma2
    return -0.5 * math.log(sigma2) - 0.5 * math.log(prec) - 0.5 * eta * eta / sigma2 + 0.5 * t * t / prec


@njit(cache=True)
def _draw_ideal(prec_lik, lin, eta, sigma2, rng):
    prec = prec_lik + 1.0 / sigma2
    return (lin + eta / sigma2) / prec + rng.standard_normal() / math.sqrt(prec)


@njit(cache=True)
def _anchor_value(i, neg, pos, pinned):
    if pinned:
        if i == neg:
            return -1.0
        if i == pos:
            return 1.0
    return math.nan


@njit(cache=True)
def _zeta_log_odds(a0, a1, c0, c1, n_other, n_leg, prior, eta, sigma2, pin):
    """log P(zeta_i = 1 | ...) - log P(zeta_i = 0 | ...), ideal points integrated out."""
    a = prior[_A]
    b = prior[_B]
    log_prior = (
        math.lgamma(a + 1.0 + n_other) + math.lgamma(b + n_leg - 1.0 - n_other)
        - math.lgamma(a + n_other) - math.lgamma(b + n_leg - n_other)
    )
    if math.isnan(pin):
        l1 = _log_marginal(a0 + a1, c0 + c1, eta, sigma2)
        l0 = _log_marginal(a0, c0, eta, sigma2) + _log_marginal(a1, c1, eta, sigma2)
    else:
        # group-0 position is a constant; only the group-1 factor differs
        l1 = -0.5 * a1 * pin * pin + c1 * pin
        l0 = _log_marginal(a1, c1, eta, sigma2)
    return log_prior + l1 - l0


@njit(cache=True)
def _draw_beta_i(a0, a1, c0, c1, bridge, eta, sigma2, pin, beta0, beta1, i, rng):
    if math.isnan(pin):
        if bridge:
            b = _draw_ideal(a0 + a1, c0 + c1, eta, sigma2, rng)
            beta0[i] = b
            beta1[i] = b
        else:
            beta0[i] = _draw_ideal(a0, c0, eta, sigma2, rng)
            beta1[i] = _draw_ideal(a1, c1, eta, sigma2, rng)
    else:
        beta0[i] = pin
        beta1[i] = pin if bridge else _draw_ideal(a1, c1, eta, sigma2, rng)


@njit(cache=True)
def _update_beta(votes, imputed, group, latent, mu, alpha, beta0, beta1, zeta, hypers, anchors, pinned, logit, rng):
    for i in range(votes.shape[0]):
        a0, a1, c0, c1 = _legislator_sums(votes, imputed, group, latent, mu, alpha, logit, i)
        pin = _anchor_value(i, anchors[0], anchors[1], pinned)
        _draw_beta_i(a0, a1, c0, c1, zeta[i], hypers[_ETA], hypers[_SIGMA2], pin, beta0, beta1, i, rng)


@njit(cache=True)
def _update_zeta(votes, imputed, group, latent, mu, alpha, beta0, beta1, zeta, hypers, prior, anchors, pinned, logit, rng):
    n_leg = votes.shape[0]
    min_bridges = int(prior[_K]) + 1
    eta = hypers[_ETA]
    sigma2 = hypers[_SIGMA2]
    n_bridges = 0
    for i in range(n_leg):
        if zeta[i]:
            n_bridges += 1
    for i in range(n_leg):
        a0, a1, c0, c1 = _legislator_sums(votes, imputed, group, latent, mu, alpha, logit, i)
        pin = _anchor_value(i, anchors[0], anchors[1], pinned)
        n_other = n_bridges - (1 if zeta[i] else 0)
        u = rng.random()
        if n_other < min_bridges:
            bridge = True
        else:
            lo = _zeta_log_odds(a0, a1, c0, c1, n_other, n_leg, prior, eta, sigma2, pin)
            if lo > 0.0:
                p1 = 1.0 / (1.0 + math.exp(-lo))
            else:
                e = math.exp(lo)
                p1 = e / (1.0 + e)
            bridge = u < p1
        zeta[i] = bridge
        n_bridges = n_other + (1 if bridge else 0)
        _draw_beta_i(a0, a1, c0, c1, bridge, eta, sigma2, pin, beta0, beta1, i, rng)


@njit(cache=True)
def _identify(mu, alpha, beta0, beta1, zeta, neg, pos):
    lo = beta0[neg]
    hi = beta0[pos]
    span = hi - lo
    if span == 0.0 or not math.isfinite(span):
        return False
    total = lo + hi
    half_span = 0.5 * span
    half_total = 0.5 * total
    for j in range(mu.size):
        mu[j] = mu[j] + alpha[j] * half_total
        alpha[j] = alpha[j] * half_span
    for i in range(beta0.size):
        beta0[i] = (2.0 * beta0[i] - total) / span
        beta1[i] = (2.0 * beta1[i] - total) / span
    beta0[neg] = -1.0
    beta0[pos] = 1.0
    if zeta[neg]:
        beta1[neg] = -1.0
    if zeta[pos]:
        beta1[pos] = 1.0
    return True


@njit(cache=True)
def _update_latent(votes, imputed, group, latent, mu, alpha, beta0, beta1, logit, rng):
    n_leg, n_mot = votes.shape
    for i in range(n_leg):
        for j in range(n_mot):
            psi = mu[j] + alpha[j] * _beta_for(beta0, beta1, group, i, j)
            if logit:
                latent[i, j] = polya_gamma_1(rng, psi)
            elif _yea(votes, imputed, i, j) == 1.0:
                latent[i, j] = truncnorm_geq0(rng, psi, 1.0)
            else:
                latent[i, j] = truncnorm_lt0(rng, psi, 1.0)


@njit(cache=True)
def _update_hypers(mu, alpha, is_zero, beta0, beta1, zeta, hypers, prior, anchors, pinned, rng):
    n_mot = mu.size
    n_leg = beta0.size

    n_spike = 0
    slab_ss = 0.0
    for j in range(n_mot):
        if is_zero[j]:
            n_spike += 1
        else:
            slab_ss += alpha[j] * alpha[j]
    hypers[_OMEGA] = rng.beta(prior[_A_OM] + n_spike, prior[_B_OM] + n_mot - n_spike)
    hypers[_KAPPA2_A] = inverse_gamma(
        rng, prior[_KA_SH] + 0.5 * (n_mot - n_spike), prior[_KA_RT] + 0.5 * slab_ss
    )

    k2m = hypers[_KAPPA2_M]
    prec = 1.0 / prior[_RHO_V] + n_mot / k2m
    lin = prior[_RHO_M] / prior[_RHO_V]
    for j in range(n_mot):
        lin += mu[j] / k2m
    rho = lin / prec + rng.standard_normal() / math.sqrt(prec)
    hypers[_RHO] = rho
    ss = 0.0
    for j in range(n_mot):
        ss += (mu[j] - rho) ** 2
    hypers[_KAPPA2_M] = inverse_gamma(rng, prior[_KM_SH] + 0.5 * n_mot, prior[_KM_RT] + 0.5 * ss)

    # ideal points that are random draws from N(eta, sigma2)
    s2 = hypers[_SIGMA2]
    n_free = 0
    total = 0.0
    for i in range(n_leg):
        anchored = pinned and (i == anchors[0] or i == anchors[1])
        if not anchored:
            n_free += 1
            total += beta0[i]
        if not zeta[i]:
            n_free += 1
            total += beta1[i]
    prec = 1.0 / prior[_ETA_V] + n_free / s2
    eta = (prior[_ETA_M] / prior[_ETA_V] + total / s2) / prec + rng.standard_normal() / math.sqrt(prec)
    hypers[_ETA] = eta
    ss = 0.0
    for i in range(n_leg):
        anchored = pinned and (i == anchors[0] or i == anchors[1])
        if not anchored:
            ss += (beta0[i] - eta) ** 2
        if not zeta[i]:
            ss += (beta1[i] - eta) ** 2
    hypers[_SIGMA2] = inverse_gamma(rng, prior[_S2_SH] + 0.5 * n_free, prior[_S2_RT] + 0.5 * ss)


@njit(cache=True)
def _link_cdf(x, logit):
    if logit:
        if x >= 0.0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit(cache=True)
def _impute_missing(votes, imputed, group, latent, mu, alpha, beta0, beta1, logit, rng):
    n_leg, n_mot = votes.shape
    for i in range(n_leg):
        for j in range(n_mot):
            if votes[i, j] != _MISSING:
                continue
            psi = mu[j] + alpha[j] * _beta_for(beta0, beta1, group, i, j)
            yea = rng.random() < _link_cdf(psi, logit)
            imputed[i, j] = yea
            if not logit:
                # keep the utility consistent with the new vote; Polya-Gamma
                # weights are independent of the vote given psi
                latent[i, j] = truncnorm_geq0(rng, psi, 1.0) if yea else truncnorm_lt0(rng, psi, 1.0)


@njit(cache=True)
def _sweep(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, zeta, hypers,
           prior, anchors, pinned, fix_zeta, logit, rng):
    _update_alpha(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, hypers, logit, rng)
    _update_mu(votes, imputed, group, latent, mu, alpha, beta0, beta1, hypers, logit, rng)
    if fix_zeta:
        _update_beta(votes, imputed, group, latent, mu, alpha, beta0, beta1, zeta, hypers, anchors, pinned, logit, rng)
    else:
        _update_zeta(votes, imputed, group, latent, mu, alpha, beta0, beta1, zeta, hypers, prior, anchors, pinned, logit, rng)
    if not _identify(mu, alpha, beta0, beta1, zeta, anchors[0], anchors[1]):
        return 1
    _update_latent(votes, imputed, group, latent, mu, alpha, beta0, beta1, logit, rng)
    _update_hypers(mu, alpha, is_zero, beta0, beta1, zeta, hypers, prior, anchors, pinned, rng)
    _impute_missing(votes, imputed, group, latent, mu, alpha, beta0, beta1, logit, rng)
    return 0


@njit(cache=True, nogil=True)
def _run_chain(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, zeta, hypers,
               prior, anchors, pinned, fix_zeta, logit, rng, n_iter, burn_in, thin,
               out_mu, out_alpha, out_beta0, out_beta1, out_zeta, out_hypers):
    k = 0
    for it in range(n_iter):
        status = _sweep(votes, imputed, group, latent, mu, alpha, is_zero, beta0, beta1, zeta, hypers,
                        prior, anchors, pinned, fix_zeta, logit, rng)
        if status != 0:
            return -(it + 1)
        if it >= burn_in and (it - burn_in) % thin == 0:
            out_mu[k] = mu
            out_alpha[k] = alpha
            out_beta0[k] = beta0
            out_beta1[k] = beta1
            out_zeta[k] = zeta
            out_hypers[k] = hypers
            k += 1
    return k


# ---------------------------------------------------------------------------
# state-level operations


def _anchors(data: RollCallData) -> np.ndarray:
    return np.array([data.anchor_neg, data.anchor_pos], dtype=np.int64)


def update_alpha(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _update_alpha(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                  state.is_zero, state.beta0, state.beta1, state.hypers, plan.is_logit, as_generator(rng))


def update_mu(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _update_mu(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
               state.beta0, state.beta1, state.hypers, plan.is_logit, as_generator(rng))


def update_zeta(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    """Sequential scan over legislators; each bridge draw is followed by an ideal-point draw."""
    _update_zeta(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                 state.beta0, state.beta1, state.zeta, state.hypers, plan.config.as_array(),
                 _anchors(data), plan.pinned, plan.is_logit, as_generator(rng))


def update_beta(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _update_beta(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                 state.beta0, state.beta1, state.zeta, state.hypers, _anchors(data), plan.pinned,
                 plan.is_logit, as_generator(rng))


def apply_identification(state: ModelState, data: RollCallData) -> None:
    """Affine map pinning ``beta0[anchor_neg] = -1`` and ``beta0[anchor_pos] = +1``.

    Intercepts and discriminations are co-transformed so that every linear
    predictor is unchanged; exact zeros in ``alpha`` stay exact.
    """
    ok = _identify(state.mu, state.alpha, state.beta0, state.beta1, state.zeta,
                   data.anchor_neg, data.anchor_pos)
    if not ok:
        raise DegenerateAnchorError(
            f"anchors {data.anchor_neg} and {data.anchor_pos} share the ideal point "
            f"{state.beta0[data.anchor_neg]!r}"
        )


def update_latent(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _update_latent(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                   state.beta0, state.beta1, plan.is_logit, as_generator(rng))


def update_latent_probit(state: ModelState, data: RollCallData, rng) -> None:
    _update_latent(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                   state.beta0, state.beta1, False, as_generator(rng))


def update_latent_logit(state: ModelState, data: RollCallData, rng) -> None:
    _update_latent(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                   state.beta0, state.beta1, True, as_generator(rng))


def update_hyperparameters(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _update_hypers(state.mu, state.alpha, state.is_zero, state.beta0, state.beta1, state.zeta,
                   state.hypers, plan.config.as_array(), _anchors(data), plan.pinned, as_generator(rng))


def impute_missing(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    _impute_missing(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                    state.beta0, state.beta1, plan.is_logit, as_generator(rng))


def sweep(state: ModelState, data: RollCallData, plan: SweepPlan, rng) -> None:
    status = _sweep(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                    state.is_zero, state.beta0, state.beta1, state.zeta, state.hypers,
                    plan.config.as_array(), _anchors(data), plan.pinned, plan.fix_zeta,
                    plan.is_logit, as_generator(rng))
    if status != 0:
        raise DegenerateAnchorError("anchors collapsed onto one ideal point during the sweep")


def initialize(data: RollCallData, config: PriorConfig, rng) -> ModelState:
    """Starting state: all legislators bridges, party-seeded ideal points, anchors at -1/+1."""
    gen = as_generator(rng)
    n_leg, n_mot = data.votes.shape
    if config.K != K_DIM:
        raise ValueError("only K=1 is supported")

    alpha = gen.standard_normal(n_mot)
    parties = [leg.party for leg in data.legislators]
    neg_party = parties[data.anchor_neg]
    pos_party = parties[data.anchor_pos]
    centre = np.zeros(n_leg)
    if neg_party != pos_party:
        for i, p in enumerate(parties):
            if p == neg_party:
                centre[i] = -1.0
            elif p == pos_party:
                centre[i] = 1.0
    beta = centre + 0.1 * gen.standard_normal(n_leg)
    beta[data.anchor_neg] = -1.0
    beta[data.anchor_pos] = 1.0

    missing = data.votes == Vote.MISSING
    imputed = np.zeros((n_leg, n_mot), dtype=np.bool_)
    imputed[missing] = gen.random(int(missing.sum())) < 0.5

    state = ModelState(
        mu=np.zeros(n_mot),
        alpha=alpha,
        is_zero=np.zeros(n_mot, dtype=np.bool_),
        beta0=beta,
        beta1=beta.copy(),
        zeta=np.ones(n_leg, dtype=np.bool_),
        latent=np.ones((n_leg, n_mot)),
        hypers=config.prior_means(),
        imputed=imputed,
    )
    _update_latent(data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha,
                   state.beta0, state.beta1, config.link is Link.LOGIT, gen)
    return state
