"""Data containers, linear predictor, likelihood and the bridge-count prior.

Votes are coded with :class:`Vote`; ``MISSING`` is its own state and never
folded into a numeric placeholder.  Ideal points live on two scales, one per
motion group, and ``zeta[i]`` marks legislator ``i`` as a bridge whose two
ideal points coincide.
"""
from __future__ import annotations

import enum
import functools
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_expit, log_ndtr, logsumexp

K_DIM = 1
HYPER_NAMES = ("omega_alpha", "kappa2_alpha", "rho_mu", "kappa2_mu", "eta", "sigma2")


class DataError(ValueError):
    """Roll-call data violating a structural requirement."""


class InvariantError(AssertionError):
    """A model state that breaks one of its invariants."""


class Vote(enum.IntEnum):
    NAY = 0
    YEA = 1
    MISSING = 2


class Link(str, enum.Enum):
    PROBIT = "probit"
    LOGIT = "logit"


@dataclass(frozen=True)
class Legislator:
    id: str
    name: str = ""
    party: str = ""


@dataclass
class RollCallData:
    """I x J roll-call matrix split into two motion groups.

    ``anchor_neg`` and ``anchor_pos`` index the legislators whose group-0 ideal
    points are pinned to -1 and +1.
    """

    votes: np.ndarray
    group: np.ndarray
    legislators: list[Legislator]
    anchor_neg: int
    anchor_pos: int
    motion_ids: list[str] | None = None

    def __post_init__(self):
        self.votes = np.ascontiguousarray(self.votes, dtype=np.int8)
        self.group = np.ascontiguousarray(self.group, dtype=np.int8)
        if self.votes.ndim != 2:
            raise DataError("votes must be a 2-D matrix")
        n_leg, n_mot = self.votes.shape
        if self.group.shape != (n_mot,):
            raise DataError(f"group has shape {self.group.shape}, expected ({n_mot},)")
        if not np.isin(self.group, (0, 1)).all():
            raise DataError("group labels must be 0 or 1")
        if not np.isin(self.votes, (Vote.NAY, Vote.YEA, Vote.MISSING)).all():
            raise DataError("votes must be coded NAY, YEA or MISSING")
        if len(self.legislators) != n_leg:
            raise DataError(f"{len(self.legislators)} legislator records for {n_leg} rows")
        if self.motion_ids is None:
            self.motion_ids = [f"m{j}" for j in range(n_mot)]
        elif len(self.motion_ids) != n_mot:
            raise DataError(f"{len(self.motion_ids)} motion ids for {n_mot} columns")
        self.anchor_neg = int(self.anchor_neg)
        self.anchor_pos = int(self.anchor_pos)
        for a in (self.anchor_neg, self.anchor_pos):
            if not 0 <= a < n_leg:
                raise DataError(f"anchor index {a} outside [0, {n_leg})")
        if self.anchor_neg == self.anchor_pos:
            raise DataError("anchor_neg and anchor_pos must be different legislators")

    @property
    def n_legislators(self) -> int:
        return self.votes.shape[0]

    @property
    def n_motions(self) -> int:
        return self.votes.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return self.votes != Vote.MISSING

    @property
    def missing_rate(self) -> float:
        return float(np.mean(self.votes == Vote.MISSING))

    @property
    def legislator_ids(self) -> list[str]:
        return [leg.id for leg in self.legislators]

    def validate(self, require_both_groups: bool = True) -> None:
        n_leg, n_mot = self.votes.shape
        if n_leg < 3:
            raise DataError(f"need at least 3 legislators, got {n_leg}")
        if n_mot < 2:
            raise DataError(f"need at least 2 motions, got {n_mot}")
        if require_both_groups:
            for g in (0, 1):
                if not np.any(self.group == g):
                    raise DataError(f"no motions in group {g}")
        obs = self.observed
        empty_rows = np.flatnonzero(~obs.any(axis=1))
        if empty_rows.size:
            raise DataError(f"legislators without any recorded vote: {empty_rows.tolist()}")
        empty_cols = np.flatnonzero(~obs.any(axis=0))
        if empty_cols.size:
            raise DataError(f"motions without any recorded vote: {empty_cols.tolist()}")

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.votes.shape, dtype=np.int64).tobytes())
        h.update(self.votes.tobytes())
        h.update(self.group.tobytes())
        meta = {
            "legislators": [leg.id for leg in self.legislators],
            "motions": list(self.motion_ids),
            "anchors": [self.anchor_neg, self.anchor_pos],
        }
        h.update(json.dumps(meta, sort_keys=True).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class PriorConfig:
    """Fixed prior constants and the link function.

    ``a``/``b`` govern the truncated beta-binomial prior on the number of
    bridges.  Setting ``a_omega = upsilon / K`` and ``b_omega = 1`` gives the
    Beta(upsilon/K, 1) prior on the spike weight.
    """

    a: float = 1.0
    b: float = 9.0
    a_omega: float = 1.0
    b_omega: float = 1.0
    kappa2_alpha_shape: float = 2.0
    kappa2_alpha_rate: float = 1.0
    kappa2_mu_shape: float = 2.0
    kappa2_mu_rate: float = 1.0
    sigma2_shape: float = 2.0
    sigma2_rate: float = 1.0
    rho_mu_mean: float = 0.0
    rho_mu_var: float = 1.0
    eta_mean: float = 0.0
    eta_var: float = 1.0
    K: int = K_DIM
    link: Link = Link.PROBIT

    def __post_init__(self):
        object.__setattr__(self, "link", Link(self.link))
        positive = (
            "a", "b", "a_omega", "b_omega",
            "kappa2_alpha_shape", "kappa2_alpha_rate",
            "kappa2_mu_shape", "kappa2_mu_rate",
            "sigma2_shape", "sigma2_rate",
            "rho_mu_var", "eta_var",
        )
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.K != K_DIM:
            raise ValueError("only one-dimensional policy spaces (K=1) are supported")

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.a, self.b, self.a_omega, self.b_omega,
                self.kappa2_alpha_shape, self.kappa2_alpha_rate,
                self.kappa2_mu_shape, self.kappa2_mu_rate,
                self.sigma2_shape, self.sigma2_rate,
                self.rho_mu_mean, self.rho_mu_var,
                self.eta_mean, self.eta_var,
                float(self.K),
            ],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in self.__dataclass_fields__}
        d["link"] = self.link.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PriorConfig":
        return cls(**d)

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def prior_means(self) -> np.ndarray:
        """Hyperparameter values used to start a chain (prior means where finite)."""

        def ig_mean(shape, rate):
            return rate / (shape - 1.0) if shape > 1.0 else rate / shape

        return np.array(
            [
                self.a_omega / (self.a_omega + self.b_omega),
                ig_mean(self.kappa2_alpha_shape, self.kappa2_alpha_rate),
                self.rho_mu_mean,
                ig_mean(self.kappa2_mu_shape, self.kappa2_mu_rate),
                self.eta_mean,
                ig_mean(self.sigma2_shape, self.sigma2_rate),
            ]
        )


@dataclass
class ModelState:
    """One Gibbs-sweep snapshot.

    ``latent`` holds probit utilities or Polya-Gamma weights depending on the
    link.  ``imputed`` carries the current Yea/Nay fill-in for missing cells
    and is ignored on observed cells.
    """

    mu: np.ndarray
    alpha: np.ndarray
    is_zero: np.ndarray
    beta0: np.ndarray
    beta1: np.ndarray
    zeta: np.ndarray
    latent: np.ndarray
    hypers: np.ndarray
    imputed: np.ndarray = field(default=None)

    def __post_init__(self):
        self.mu = np.ascontiguousarray(self.mu, dtype=np.float64)
        self.alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        self.is_zero = np.ascontiguousarray(self.is_zero, dtype=np.bool_)
        self.beta0 = np.ascontiguousarray(self.beta0, dtype=np.float64)
        self.beta1 = np.ascontiguousarray(self.beta1, dtype=np.float64)
        self.zeta = np.ascontiguousarray(self.zeta, dtype=np.bool_)
        self.latent = np.ascontiguousarray(self.latent, dtype=np.float64)
        self.hypers = np.ascontiguousarray(self.hypers, dtype=np.float64)
        if self.hypers.shape != (len(HYPER_NAMES),):
            raise ValueError(f"hypers must have {len(HYPER_NAMES)} entries")
        if self.imputed is None:
            self.imputed = np.zeros(self.latent.shape, dtype=np.bool_)
        self.imputed = np.ascontiguousarray(self.imputed, dtype=np.bool_)

    def hyper(self, name: str) -> float:
        return float(self.hypers[HYPER_NAMES.index(name)])

    def set_hyper(self, name: str, value: float) -> None:
        self.hypers[HYPER_NAMES.index(name)] = value

    def copy(self) -> "ModelState":
        return ModelState(
            mu=self.mu.copy(), alpha=self.alpha.copy(), is_zero=self.is_zero.copy(),
            beta0=self.beta0.copy(), beta1=self.beta1.copy(), zeta=self.zeta.copy(),
            latent=self.latent.copy(), hypers=self.hypers.copy(), imputed=self.imputed.copy(),
        )

    def check_invariants(self, data: RollCallData, link: Link | str, K: int = K_DIM) -> None:
        n_leg, n_mot = data.votes.shape
        if self.mu.shape != (n_mot,) or self.alpha.shape != (n_mot,):
            raise InvariantError("motion parameter shapes do not match the data")
        if self.beta0.shape != (n_leg,) or self.zeta.shape != (n_leg,):
            raise InvariantError("legislator parameter shapes do not match the data")
        bridges = self.zeta
        if not np.array_equal(self.beta0[bridges], self.beta1[bridges]):
            raise InvariantError("bridge legislator with unequal ideal points")
        if int(bridges.sum()) < K + 1:
            raise InvariantError(f"only {int(bridges.sum())} bridges; need at least {K + 1}")
        if np.any(self.alpha[self.is_zero] != 0.0):
            raise InvariantError("alpha flagged as exact zero but nonzero")
        if self.beta0[data.anchor_neg] != -1.0 or self.beta0[data.anchor_pos] != 1.0:
            raise InvariantError("anchor ideal points are not pinned at -1/+1")
        h = dict(zip(HYPER_NAMES, self.hypers))
        if not (0.0 < h["omega_alpha"] < 1.0):
            raise InvariantError("omega_alpha outside (0, 1)")
        for name in ("kappa2_alpha", "kappa2_mu", "sigma2"):
            if not h[name] > 0.0:
                raise InvariantError(f"{name} is not positive")
        if Link(link) is Link.LOGIT:
            if not np.all(self.latent > 0.0):
                raise InvariantError("Polya-Gamma weights must be positive")
        else:
            yea = working_votes(self, data).astype(bool)
            if np.any(self.latent[yea] < 0.0) or np.any(self.latent[~yea] >= 0.0):
                raise InvariantError("latent utility sign disagrees with the vote")


def working_votes(state: ModelState, data: RollCallData) -> np.ndarray:
    """Observed votes with the current imputations filled in, as 0/1 ints."""
    missing = data.votes == Vote.MISSING
    return np.where(missing, state.imputed, data.votes).astype(np.int8)


def linear_predictor(state: ModelState, data: RollCallData, i: int, j: int) -> float:
    beta = state.beta1[i] if data.group[j] == 1 else state.beta0[i]
    return float(state.mu[j] + state.alpha[j] * beta)


def linear_predictors(state: ModelState, data: RollCallData) -> np.ndarray:
    """The full I x J matrix of ``mu_j + alpha_j * beta_{i, group_j}``."""
    beta = np.where(data.group[None, :] == 1, state.beta1[:, None], state.beta0[:, None])
    return state.mu[None, :] + state.alpha[None, :] * beta


def log_cdf(x, link: Link | str):
    """log G(x) for the link's CDF, stable far into the lower tail."""
    if Link(link) is Link.PROBIT:
        return log_ndtr(x)
    return log_expit(x)


def log_likelihood(state: ModelState, data: RollCallData, link: Link | str = Link.PROBIT) -> float:
    psi = linear_predictors(state, data)
    obs = data.observed
    yea = data.votes == Vote.YEA
    ll = np.where(yea, log_cdf(psi, link), log_cdf(-psi, link))
    return float(ll[obs].sum())


@functools.lru_cache(maxsize=128)
def _zeta_log_normalizer(a: float, b: float, I: int, K: int) -> float:
    s = np.arange(K + 1, I + 1)
    log_choose = gammaln(I + 1) - gammaln(s + 1) - gammaln(I - s + 1)
    return float(logsumexp(log_choose + gammaln(a + s) + gammaln(b + I - s)))


def zeta_log_prior(zeta, a: float, b: float, K: int = K_DIM, I: int | None = None) -> float:
    """Log prior mass of one bridge configuration under the truncated beta-binomial.

    Normalized directly over the admissible counts ``K+1..I``.
    """
    zeta = np.asarray(zeta, dtype=bool)
    if I is None:
        I = zeta.size
    if zeta.size != I:
        raise ValueError(f"zeta has {zeta.size} entries, expected {I}")
    s = int(zeta.sum())
    if s <= K:
        raise ValueError(f"{s} bridges is outside the prior support (need more than K={K})")
    return float(gammaln(a + s) + gammaln(b + I - s) - _zeta_log_normalizer(float(a), float(b), I, K))


def bridge_count_pmf(a: float, b: float, I: int, K: int = K_DIM) -> tuple[np.ndarray, np.ndarray]:
    """Support ``s = K+1..I`` and prior probabilities of having exactly ``s`` bridges."""
    s = np.arange(K + 1, I + 1)
    log_choose = gammaln(I + 1) - gammaln(s + 1) - gammaln(I - s + 1)
    logp = log_choose + gammaln(a + s) + gammaln(b + I - s) - _zeta_log_normalizer(float(a), float(b), I, K)
    return s, np.exp(logp)


def expected_changers(a: float, b: float, I: int, K: int = K_DIM) -> float:
    s, p = bridge_count_pmf(a, b, I, K)
    return float(np.sum(p * (I - s)))
