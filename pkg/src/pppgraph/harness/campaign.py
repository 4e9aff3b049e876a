"""Monte Carlo campaigns over seeded trials."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..errors import InvalidArgumentError
from ..simulator import ScenarioConfig
from .trial import TrialResult, run_trial


def trial_seeds(seed: int, n_trials: int) -> list[int]:
    """Trial ``i`` uses ``seed + i``."""
    return [int(seed) + i for i in range(n_trials)]


@dataclass
class CampaignResult:
    config: ScenarioConfig
    seed: int
    results: list  # TrialResult in trial order

    @property
    def failed(self) -> list:
        return [r for r in self.results if not r.ok]


def _run(args) -> TrialResult:
    cfg, seed = args
    return run_trial(cfg, seed)


def campaign(cfg: ScenarioConfig, n_trials: int, seed: int = 0, workers: int = 1, progress=None) -> CampaignResult:
    """Run ``n_trials`` trials on up to ``workers`` processes.

    Results are collected in trial order, so the outcome depends only on
    the configuration and the seeds. ``progress(i, result)`` is called as
    each trial completes (in order).
    """
    if n_trials < 1:
        raise InvalidArgumentError("a campaign needs at least one trial")
    if workers < 1:
        raise InvalidArgumentError("workers must be at least 1")
    jobs = [(cfg, s) for s in trial_seeds(seed, n_trials)]
    results = []
    if workers == 1 or n_trials == 1:
        for i, job in enumerate(jobs):
            results.append(_run(job))
            if progress is not None:
                progress(i, results[-1])
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_trials)) as pool:
            for i, r in enumerate(pool.map(_run, jobs)):
                results.append(r)
                if progress is not None:
                    progress(i, r)
    return CampaignResult(cfg, int(seed), results)
