"""Bayesian detection of legislators whose ideal point differs between two groups of motions."""
from .diagnostics import DegenerateChainError, convergence_table, effective_sample_size, gelman_rubin
from .distributions import (
    RngStream,
    sample_beta,
    sample_inverse_gamma,
    sample_normal,
    sample_polya_gamma_1,
    sample_truncated_normal,
)
from .io import IngestionReport, ParseError, ingest, read_draws, write_draws, write_votes
from .model import DataError, Legislator, Link, PriorConfig, RollCallData, Vote
from .report import ChangeReport, kde_ideal_points, summarize
from .runner import ChainDraws, RunSettings, fit, run
from .sampler import SweepPlan, apply_identification, initialize, sweep
from .simulation import ScenarioConfig, error_rates, generate, rank_baseline, roc, run_scenario

__version__ = "0.1.0"
