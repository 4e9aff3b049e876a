"""Monte Carlo trials, error metrics and campaign reports."""

from .campaign import CampaignResult, campaign, trial_seeds
from .metrics import SummaryStats, cdf, convergence_window_stats, duration, final_fraction, pooled_errors, rsos
from .report import REPORT_FILES, build_report, format_tables, read_errors, write_campaign
from .trial import ESTIMATORS, TrialResult, run_trial, stream_digest

__all__ = [
    "CampaignResult",
    "ESTIMATORS",
    "REPORT_FILES",
    "SummaryStats",
    "TrialResult",
    "build_report",
    "campaign",
    "cdf",
    "convergence_window_stats",
    "duration",
    "final_fraction",
    "format_tables",
    "pooled_errors",
    "read_errors",
    "rsos",
    "run_trial",
    "stream_digest",
    "trial_seeds",
    "write_campaign",
]
