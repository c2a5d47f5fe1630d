"""Multi-chain orchestration and draw storage."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import RngStream
from .model import HYPER_NAMES, Link, PriorConfig, RollCallData
from .sampler import DegenerateAnchorError, SweepPlan, _run_chain, initialize

log = logging.getLogger(__name__)

_SELECTOR = re.compile(r"^(mu|alpha|beta0|beta1|zeta)\[(\d+)\]$")


@dataclass(frozen=True)
class RunSettings:
    n_chains: int = 4
    n_iter: int = 5000
    burn_in: int | None = None
    thin: int = 5
    seed: int = 0
    anchor_mode: str = "pinned"

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_iter // 2)
        if self.n_chains < 1:
            raise ValueError("need at least one chain")
        if self.thin < 1:
            raise ValueError("thin must be a positive integer")
        if not self.n_iter > self.burn_in >= 0:
            raise ValueError(f"need n_iter > burn_in >= 0, got n_iter={self.n_iter}, burn_in={self.burn_in}")

    @property
    def n_kept(self) -> int:
        return len(range(self.burn_in, self.n_iter, self.thin))

    def to_dict(self) -> dict:
        return {
            "n_chains": self.n_chains, "n_iter": self.n_iter, "burn_in": self.burn_in,
            "thin": self.thin, "seed": self.seed, "anchor_mode": self.anchor_mode,
        }


@dataclass
class ChainDraws:
    """Post-burn-in draws, arrays shaped ``(n_chains, n_kept, ...)``."""

    mu: np.ndarray
    alpha: np.ndarray
    beta0: np.ndarray
    beta1: np.ndarray
    zeta: np.ndarray
    hypers: np.ndarray
    settings: RunSettings
    config: PriorConfig
    data_fingerprint: str = ""
    legislator_ids: list[str] = field(default_factory=list)
    motion_ids: list[str] = field(default_factory=list)
    fix_zeta: bool = False

    @property
    def n_chains(self) -> int:
        return self.beta0.shape[0]

    @property
    def n_kept(self) -> int:
        return self.beta0.shape[1]

    @property
    def thin(self) -> int:
        return self.settings.thin

    @property
    def stream_ids(self) -> list[int]:
        return list(range(self.n_chains))

    def config_fingerprint(self) -> str:
        payload = {"prior": self.config.to_dict(), "run": self.settings.to_dict(), "fix_zeta": self.fix_zeta}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def trace(self, selector: str) -> np.ndarray:
        """``(n_chains, n_kept)`` trajectory for e.g. ``"beta0[3]"`` or ``"sigma2"``."""
        if selector in HYPER_NAMES:
            return self.hypers[:, :, HYPER_NAMES.index(selector)]
        m = _SELECTOR.match(selector)
        if m is None:
            raise KeyError(f"unknown parameter selector {selector!r}")
        block = getattr(self, m.group(1))
        idx = int(m.group(2))
        if idx >= block.shape[2]:
            raise KeyError(f"{selector!r} out of range")
        return block[:, :, idx].astype(np.float64)

    def selectors(self, blocks=("beta0", "beta1", "mu", "alpha", "zeta")) -> list[str]:
        out = []
        for name in blocks:
            n = getattr(self, name).shape[2]
            out.extend(f"{name}[{k}]" for k in range(n))
        return out + list(HYPER_NAMES)

    def pooled(self, name: str) -> np.ndarray:
        """Chains stacked into one ``(n_chains * n_kept, ...)`` array."""
        block = self.hypers if name == "hypers" else getattr(self, name)
        return block.reshape((-1,) + block.shape[2:])


def _one_chain(data: RollCallData, plan: SweepPlan, settings: RunSettings, chain: int) -> dict:
    rng = RngStream(settings.seed, chain)
    state = initialize(data, plan.config, rng)
    if plan.fix_zeta:
        state.zeta[:] = True
    n_leg, n_mot = data.votes.shape
    n_kept = settings.n_kept
    out = {
        "mu": np.empty((n_kept, n_mot)),
        "alpha": np.empty((n_kept, n_mot)),
        "beta0": np.empty((n_kept, n_leg)),
        "beta1": np.empty((n_kept, n_leg)),
        "zeta": np.empty((n_kept, n_leg), dtype=np.bool_),
        "hypers": np.empty((n_kept, len(HYPER_NAMES))),
    }
    anchors = np.array([data.anchor_neg, data.anchor_pos], dtype=np.int64)
    k = _run_chain(
        data.votes, state.imputed, data.group, state.latent, state.mu, state.alpha, state.is_zero,
        state.beta0, state.beta1, state.zeta, state.hypers, plan.config.as_array(), anchors,
        plan.pinned, plan.fix_zeta, plan.is_logit, rng.generator,
        settings.n_iter, settings.burn_in, settings.thin,
        out["mu"], out["alpha"], out["beta0"], out["beta1"], out["zeta"], out["hypers"],
    )
    if k < 0:
        raise DegenerateAnchorError(f"chain {chain}: anchors collapsed at iteration {-k}")
    return out


def run(
    data: RollCallData,
    config: PriorConfig,
    settings: RunSettings | None = None,
    *,
    fix_zeta: bool = False,
    max_workers: int | None = None,
    **kwargs,
) -> ChainDraws:
    """Run independent chains and keep thinned post-burn-in draws.

    Keyword overrides (``n_chains``, ``n_iter``, ``burn_in``, ``thin``,
    ``seed``, ``anchor_mode``) build the settings when none are given.
    Chain ``c`` uses stream ``(seed, c)``, so results do not depend on
    ``max_workers``.
    """
    if settings is None:
        settings = RunSettings(**kwargs)
    elif kwargs:
        raise TypeError("pass either settings or keyword overrides, not both")
    data.validate(require_both_groups=not fix_zeta)
    plan = SweepPlan(config, anchor_mode=settings.anchor_mode, fix_zeta=fix_zeta)

    workers = max_workers or min(settings.n_chains, os.cpu_count() or 1)
    log.info("running %d chains x %d iterations (%s link, %d workers)",
             settings.n_chains, settings.n_iter, config.link.value, workers)
    chains = range(settings.n_chains)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: _one_chain(data, plan, settings, c), chains))
    else:
        results = [_one_chain(data, plan, settings, c) for c in chains]

    stacked = {name: np.stack([r[name] for r in results]) for name in results[0]}
    return ChainDraws(
        **stacked,
        settings=settings,
        config=config,
        data_fingerprint=data.fingerprint(),
        legislator_ids=data.legislator_ids,
        motion_ids=list(data.motion_ids),
        fix_zeta=fix_zeta,
    )


def fit(data: RollCallData, link: Link | str = Link.PROBIT, **kwargs) -> ChainDraws:
    """Convenience wrapper: default prior with the chosen link."""
    return run(data, PriorConfig(link=Link(link)), **kwargs)
