"""Synthetic roll calls with known bridges, the rank-interval baseline, and error metrics."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, ndtr

from .distributions import RngStream, as_generator
from .model import Legislator, Link, PriorConfig, RollCallData, Vote
from .report import _ranks, summarize
from .runner import ChainDraws, RunSettings, run

log = logging.getLogger(__name__)

_TRUTH_STREAM = 0
_SOURCE_STREAM = 999_999
TRUTH_SOURCES = ("fitted", "direct")


@dataclass(frozen=True)
class ScenarioConfig:
    """Shape of a simulation study.

    ``n_changers = 0`` gives the no-change scenario; otherwise that many
    non-anchor legislators get group-1 ideal points shifted by a magnitude
    drawn uniformly from ``shift_range`` with random sign.
    """

    n_legislators: int = 30
    n_group0: int = 40
    n_group1: int = 80
    link: Link = Link.LOGIT
    n_changers: int = 0
    changer_indices: tuple[int, ...] | None = None
    shift_range: tuple[float, float] = (0.2, 0.6)
    n_datasets: int = 3
    seed: int = 0
    missing_rate: float = 0.0
    party_gap: float = 0.8
    party_sd: float = 0.45
    alpha_scale: float = 12.0
    spike_rate: float = 0.1
    cut_range: float = 1.2
    anchor_depth: float = 0.0
    cut_jitter: float | None = None
    truth_source: str = "fitted"
    source_iters: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "link", Link(self.link))
        if self.truth_source not in TRUTH_SOURCES:
            raise ValueError(f"truth_source must be one of {TRUTH_SOURCES}")
        if self.n_legislators < 3 or self.n_group0 < 1 or self.n_group1 < 1:
            raise ValueError("need >= 3 legislators and >= 1 motion per group")
        if self.changer_indices is not None:
            idx = tuple(int(i) for i in self.changer_indices)
            if any(not 0 <= i < self.n_legislators for i in idx) or len(set(idx)) != len(idx):
                raise ValueError("changer indices must be distinct and in range")
            object.__setattr__(self, "changer_indices", idx)
            object.__setattr__(self, "n_changers", len(idx))
        if self.n_changers > self.n_legislators - 4:
            raise ValueError("too many changers: the model needs at least two bridges besides the anchors")
        lo, hi = self.shift_range
        if not 0 <= lo <= hi:
            raise ValueError("shift_range must satisfy 0 <= low <= high")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ValueError("missing_rate must lie in [0, 1)")

    @property
    def n_motions(self) -> int:
        return self.n_group0 + self.n_group1


@dataclass
class Truth:
    mu: np.ndarray
    alpha: np.ndarray
    beta0: np.ndarray
    beta1: np.ndarray
    group: np.ndarray
    parties: list[str]
    anchor_neg: int
    anchor_pos: int

    @property
    def changed(self) -> np.ndarray:
        return self.beta0 != self.beta1

    def linear_predictors(self) -> np.ndarray:
        beta = np.where(self.group[None, :] == 1, self.beta1[:, None], self.beta0[:, None])
        return self.mu[None, :] + self.alpha[None, :] * beta


def _base_parameters(config: ScenarioConfig, g: np.random.Generator):
    """Two-party ideal points with anchors near each party's outer edge pinned at -1/+1."""
    n = config.n_legislators
    n_left = n // 2
    parties = ["D"] * n_left + ["R"] * (n - n_left)
    beta = np.where(np.arange(n) < n_left, -config.party_gap, config.party_gap)
    beta = beta + config.party_sd * g.standard_normal(n)

    left = np.flatnonzero(np.arange(n) < n_left)
    right = np.flatnonzero(np.arange(n) >= n_left)
    # anchor_depth = 0 picks each party's most extreme member
    anchor_neg = int(left[np.argsort(beta[left])[int(config.anchor_depth * len(left))]])
    anchor_pos = int(right[np.argsort(beta[right])[len(right) - 1 - int(config.anchor_depth * len(right))]])

    lo, hi = beta[anchor_neg], beta[anchor_pos]
    beta = (2 * beta - lo - hi) / (hi - lo)
    beta[anchor_neg], beta[anchor_pos] = -1.0, 1.0

    # motions: cutpoints spread over the ideal-point range, so every
    # legislator sits near some of them; a share of motions is uninformative
    J = config.n_motions
    group = np.r_[np.zeros(config.n_group0, dtype=np.int8), np.ones(config.n_group1, dtype=np.int8)]
    alpha = config.alpha_scale * g.standard_normal(J)
    alpha[g.random(J) < config.spike_rate] = 0.0
    if config.cut_jitter is None:
        cut = g.uniform(-config.cut_range, config.cut_range, J)
    else:
        # cutpoints placed among the legislators, where real divisions fall
        cut = beta[g.integers(0, n, J)] + config.cut_jitter * g.standard_normal(J)
    mu = -alpha * cut + np.where(alpha == 0.0, g.standard_normal(J), 0.0)
    return Truth(mu=mu, alpha=alpha, beta0=beta, beta1=beta.copy(), group=group, parties=parties,
                 anchor_neg=anchor_neg, anchor_pos=anchor_pos)


def _fitted_parameters(config: ScenarioConfig, base: Truth) -> Truth:
    """Posterior means of a standard (all-bridge) fit to one roll call drawn from ``base``."""
    data, _ = generate(config, RngStream(config.seed, _SOURCE_STREAM), base)
    settings = RunSettings(n_chains=2, n_iter=config.source_iters, seed=config.seed)
    draws = run(data, PriorConfig(link=config.link), settings, fix_zeta=True)
    beta = draws.pooled("beta0").mean(axis=0)
    beta[base.anchor_neg], beta[base.anchor_pos] = -1.0, 1.0
    return dataclasses.replace(
        base, mu=draws.pooled("mu").mean(axis=0), alpha=draws.pooled("alpha").mean(axis=0),
        beta0=beta, beta1=beta.copy(),
    )


def build_truth(config: ScenarioConfig) -> Truth:
    """Scenario parameters, with planted changers when ``config.n_changers > 0``.

    With ``truth_source="fitted"`` the parameters are posterior means from
    fitting a standard spatial model to a roll call drawn from the two-party
    construction; ``"direct"`` uses the construction itself.
    """
    g = RngStream(config.seed, _TRUTH_STREAM).generator
    truth = _base_parameters(config, g)
    if config.truth_source == "fitted":
        truth = _fitted_parameters(config, truth)

    n = config.n_legislators
    if config.changer_indices is not None:
        movers = np.array(config.changer_indices, dtype=int)
    else:
        candidates = np.setdiff1d(np.arange(n), [truth.anchor_neg, truth.anchor_pos])
        movers = np.sort(g.choice(candidates, size=config.n_changers, replace=False))
    lo_s, hi_s = config.shift_range
    for i in movers:
        magnitude = lo_s + (hi_s - lo_s) * g.random()
        sign = 1.0 if g.random() < 0.5 else -1.0
        truth.beta1[i] = truth.beta0[i] + sign * magnitude
    return truth


def generate(config: ScenarioConfig, rng, truth: Truth | None = None) -> tuple[RollCallData, np.ndarray]:
    """One synthetic roll call from the scenario truth; returns the data and true change labels."""
    gen = as_generator(rng)
    truth = build_truth(config) if truth is None else truth
    psi = truth.linear_predictors()
    prob = expit(psi) if config.link is Link.LOGIT else ndtr(psi)
    votes = (gen.random(prob.shape) < prob).astype(np.int8)
    if config.missing_rate > 0:
        votes[gen.random(prob.shape) < config.missing_rate] = Vote.MISSING
        # every legislator and motion keeps at least one recorded vote
        for i in np.flatnonzero((votes == Vote.MISSING).all(axis=1)):
            votes[i, 0] = prob[i, 0] > 0.5
        for j in np.flatnonzero((votes == Vote.MISSING).all(axis=0)):
            votes[0, j] = prob[0, j] > 0.5
    legislators = [Legislator(id=f"L{i:03d}", name=f"Legislator {i}", party=p)
                   for i, p in enumerate(truth.parties)]
    motion_ids = [f"M{j:04d}" for j in range(config.n_motions)]
    data = RollCallData(votes, truth.group, legislators, truth.anchor_neg, truth.anchor_pos, motion_ids)
    return data, truth.changed.copy()


def single_group(data: RollCallData, g: int) -> RollCallData:
    """The motions of one group as a stand-alone roll call (all labelled group 0)."""
    cols = np.flatnonzero(data.group == g)
    return RollCallData(
        data.votes[:, cols], np.zeros(cols.size, dtype=np.int8), list(data.legislators),
        data.anchor_neg, data.anchor_pos, [data.motion_ids[j] for j in cols],
    )


def rank_difference_draws(data: RollCallData, config: PriorConfig, settings: RunSettings) -> np.ndarray:
    """Per-draw rank differences (group 1 minus group 0) from two independent single-group fits."""
    std = []
    for g in (0, 1):
        sub_settings = dataclasses.replace(settings, seed=settings.seed + 7919 * g)
        draws = run(single_group(data, g), config, sub_settings, fix_zeta=True)
        b = draws.pooled("beta0")
        std.append((b - b.mean(axis=1, keepdims=True)) / b.std(axis=1, keepdims=True))
    return _ranks(std[1]) - _ranks(std[0])


def rank_baseline(data: RollCallData, config: PriorConfig, settings: RunSettings) -> np.ndarray:
    """Detection score per legislator from rank-difference credible intervals.

    The score is the largest central-interval level whose interval excludes
    zero, ``1 - 2 min(P(d <= 0), P(d >= 0))`` clipped at 0; thresholding it
    at ``L`` flags exactly the legislators whose level-``L`` interval misses 0.
    """
    d = rank_difference_draws(data, config, settings)
    p_le = (d <= 0).mean(axis=0)
    p_ge = (d >= 0).mean(axis=0)
    return np.clip(1.0 - 2.0 * np.minimum(p_le, p_ge), 0.0, 1.0)


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc(scores, truth) -> RocCurve:
    """ROC over every distinct score threshold (flag when score >= threshold); trapezoidal AUC."""
    scores = np.asarray(scores, dtype=float).ravel()
    truth = np.asarray(truth, dtype=bool).ravel()
    if scores.shape != truth.shape:
        raise ValueError("scores and truth must have the same length")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("truth needs at least one positive and one negative")
    thresholds = np.unique(scores)[::-1]
    tpr = np.array([0.0] + [(scores[truth] >= t).sum() / n_pos for t in thresholds])
    fpr = np.array([0.0] + [(scores[~truth] >= t).sum() / n_neg for t in thresholds])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=np.r_[np.inf, thresholds], auc=auc)


def error_rates(p_change, truth, thresholds) -> dict:
    """Mean false-positive rate and familywise rate (share of datasets with >= 1 false positive).

    ``p_change`` and ``truth`` are sequences with one array per dataset; a
    legislator is flagged when its change probability is >= the threshold.
    """
    p_sets = [np.asarray(p, dtype=float) for p in p_change]
    if not p_sets:
        raise ValueError("need at least one dataset")
    truth = [np.asarray(t, dtype=bool) for t in truth]
    if len(truth) == 1 and len(p_sets) > 1:
        truth = truth * len(p_sets)
    thresholds = np.asarray(thresholds, dtype=float)
    fpr = np.zeros(thresholds.size)
    fwer = np.zeros(thresholds.size)
    for p, t in zip(p_sets, truth):
        null = ~t
        for k, thr in enumerate(thresholds):
            flagged = p[null] >= thr
            fpr[k] += flagged.mean() if null.any() else 0.0
            fwer[k] += float(flagged.any())
    n = len(p_sets)
    return {"threshold": thresholds, "fpr": fpr / n, "familywise": fwer / n}


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    truth: list[np.ndarray] = field(default_factory=list)
    p_change: list[np.ndarray] = field(default_factory=list)
    baseline: list[np.ndarray] = field(default_factory=list)
    datasets: list[RollCallData] = field(default_factory=list)
    draws: list[ChainDraws] = field(default_factory=list)

    def pooled_roc(self, which: str = "p_change") -> RocCurve:
        scores = self.p_change if which == "p_change" else self.baseline
        return roc(np.concatenate(scores), np.concatenate(self.truth))

    def error_rates(self, thresholds=None) -> dict:
        if thresholds is None:
            thresholds = np.round(np.linspace(0.05, 0.95, 19), 2)
        return error_rates(self.p_change, self.truth, thresholds)


def run_scenario(
    config: ScenarioConfig,
    settings: RunSettings,
    *,
    baseline: bool = False,
    prior: PriorConfig | None = None,
) -> ScenarioResult:
    """Generate ``config.n_datasets`` datasets, fit the joint model to each, optionally the baseline."""
    prior = prior or PriorConfig(link=config.link)
    truth = build_truth(config)
    result = ScenarioResult(config=config)
    for d in range(config.n_datasets):
        data, labels = generate(config, RngStream(config.seed, d + 1), truth)
        fit_settings = dataclasses.replace(settings, seed=settings.seed + 1000 * d)
        draws = run(data, prior, fit_settings)
        result.datasets.append(data)
        result.draws.append(draws)
        result.truth.append(labels)
        result.p_change.append(summarize(draws, data).p_change)
        if baseline:
            result.baseline.append(rank_baseline(data, prior, fit_settings))
        log.info("dataset %d/%d done", d + 1, config.n_datasets)
    return result
