"""Convergence diagnostics over multiple chains."""
from __future__ import annotations

import numpy as np

from .runner import ChainDraws


class DegenerateChainError(ValueError):
    """Diagnostic undefined because the draws have no within-chain variation."""


def _chains(draws, selector) -> np.ndarray:
    if isinstance(draws, ChainDraws):
        if selector is None:
            raise ValueError("a parameter selector is required for ChainDraws input")
        return draws.trace(selector)
    arr = np.asarray(draws, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("expected an (n_chains, n_draws) array")
    return arr


def gelman_rubin(draws, selector: str | None = None) -> float:
    """Potential scale reduction factor sqrt((W (n-1)/n + B/n) / W)."""
    x = _chains(draws, selector)
    m, n = x.shape
    if m < 2 or n < 10:
        raise ValueError(f"need >= 2 chains with >= 10 draws each, got {m} x {n}")
    w = x.var(axis=1, ddof=1).mean()
    if w == 0.0:
        raise DegenerateChainError("within-chain variance is zero")
    b = n * x.mean(axis=1).var(ddof=1)
    return float(np.sqrt(((n - 1) / n * w + b / n) / w))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = x.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x - x.mean(), size)
    return np.fft.irfft(f * np.conj(f), size)[:n] / n


def effective_sample_size(draws, selector: str | None = None) -> float:
    """Geyer's initial-positive-sequence ESS, autocovariances averaged over chains.

    Returns ``nan`` for a constant series.
    """
    x = _chains(draws, selector)
    m, n = x.shape
    if n < 100:
        raise ValueError(f"need >= 100 draws per chain, got {n}")
    acov = np.mean([_autocovariance(c) for c in x], axis=0)
    if acov[0] <= 0.0:
        return float("nan")
    rho = acov / acov[0]
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    return float(m * n / tau)


def convergence_table(draws: ChainDraws, selectors: list[str] | None = None) -> list[dict]:
    """R-hat and ESS for each selected parameter; degenerate entries are flagged."""
    rows = []
    for sel in selectors or draws.selectors():
        x = draws.trace(sel)
        try:
            rhat = gelman_rubin(x) if x.shape[0] >= 2 else float("nan")
            status = "ok"
        except DegenerateChainError:
            rhat = float("nan")
            status = "constant"
        ess = effective_sample_size(x) if x.shape[1] >= 100 else float("nan")
        rows.append({"parameter": sel, "rhat": rhat, "ess": ess, "status": status})
    return rows
