"""Posterior summaries: change probabilities, conditional shifts, ranks, densities."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .model import RollCallData
from .runner import ChainDraws

# evidence tiers on the posterior change probability
EVIDENCE_TIERS = ((0.99, "very strong"), (0.8, "strong"), (0.65, "weak"))
MIN_CONDITIONAL_DRAWS = 200
_FALLBACK_BANDWIDTH = 0.1


def evidence_tier(p: float) -> str:
    for cutoff, label in EVIDENCE_TIERS:
        if p >= cutoff:
            return label
    return "none"


@dataclass
class LegislatorChange:
    id: str
    name: str
    party: str
    p_change: float
    n_conditional: int
    diff_mean: float | None
    diff_lower: float | None
    diff_upper: float | None
    interval_status: str
    mean_beta0: float
    mean_beta1: float
    mean_rank0: float
    mean_rank1: float
    tier: str


@dataclass
class ChangeReport:
    rows: list[LegislatorChange]
    n_draws: int
    min_conditional: int

    @property
    def p_change(self) -> np.ndarray:
        return np.array([r.p_change for r in self.rows])

    def ranked(self) -> list[LegislatorChange]:
        return sorted(self.rows, key=lambda r: -r.p_change)

    def to_dict(self) -> dict:
        return {
            "n_draws": self.n_draws,
            "min_conditional": self.min_conditional,
            "tiers": {label: cutoff for cutoff, label in EVIDENCE_TIERS},
            "legislators": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _ranks(x: np.ndarray) -> np.ndarray:
    """Row-wise ranks 1..I (ascending ideal point)."""
    order = np.argsort(x, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, x.shape[-1] + 1)[None, :], axis=-1)
    return ranks


def summarize(draws: ChainDraws, data: RollCallData, min_conditional: int = MIN_CONDITIONAL_DRAWS) -> ChangeReport:
    beta0 = draws.pooled("beta0")
    beta1 = draws.pooled("beta1")
    zeta = draws.pooled("zeta")
    n = beta0.shape[0]
    if n == 0:
        raise ValueError("no draws to summarize")
    rank0 = _ranks(beta0).mean(axis=0)
    rank1 = _ranks(beta1).mean(axis=0)
    rows = []
    for i, leg in enumerate(data.legislators):
        p = 1.0 - float(zeta[:, i].mean())
        changed = ~zeta[:, i]
        n_cond = int(changed.sum())
        if n_cond >= min_conditional:
            d = beta1[changed, i] - beta0[changed, i]
            lo, hi = np.quantile(d, [0.025, 0.975])
            diff = (float(d.mean()), float(lo), float(hi), "ok")
        else:
            diff = (None, None, None, "insufficient")
        rows.append(LegislatorChange(
            id=leg.id, name=leg.name, party=leg.party, p_change=p, n_conditional=n_cond,
            diff_mean=diff[0], diff_lower=diff[1], diff_upper=diff[2], interval_status=diff[3],
            mean_beta0=float(beta0[:, i].mean()), mean_beta1=float(beta1[:, i].mean()),
            mean_rank0=float(rank0[i]), mean_rank1=float(rank1[i]),
            tier=evidence_tier(p),
        ))
    return ChangeReport(rows=rows, n_draws=n, min_conditional=min_conditional)


def silverman_bandwidth(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return _FALLBACK_BANDWIDTH
    sd = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        return _FALLBACK_BANDWIDTH
    return 0.9 * spread * x.size ** (-0.2)


def gaussian_kde_table(points, bandwidth: float | None = None, n_grid: int = 512):
    """Gaussian KDE evaluated on a grid spanning the points +/- 5 bandwidths."""
    points = np.asarray(points, dtype=float)
    h = silverman_bandwidth(points) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.linspace(points.min() - 5 * h, points.max() + 5 * h, n_grid)
    u = (grid[:, None] - points[None, :]) / h
    dens = np.exp(-0.5 * u * u).sum(axis=1) / (points.size * h * np.sqrt(2 * np.pi))
    return grid, dens


def kde_ideal_points(draws: ChainDraws, group: int, bandwidth: float | None = None, n_grid: int = 512):
    """Density of posterior-mean ideal points for one motion group, as (x, density) arrays."""
    if group not in (0, 1):
        raise ValueError("group must be 0 or 1")
    means = draws.pooled(f"beta{group}").mean(axis=0)
    return gaussian_kde_table(means, bandwidth, n_grid)
