"""Command-line interface: simulate, run, campaign, report.

Exit codes: 0 success, 2 configuration error, 3 estimator failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgumentError, PppError
from .simulator import ScenarioConfig, load_config, read_observations, read_truth, simulate, write_observations, write_truth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ESTIMATOR = 3
EXIT_IO = 4


def _config(path) -> ScenarioConfig:
    return ScenarioConfig() if path is None else load_config(path)


def _cmd_simulate(args) -> int:
    cfg = _config(args.config)
    sim = simulate(cfg, args.seed)
    write_observations(args.out_obs, sim.observations)
    write_truth(args.out_truth, sim.truth)
    n_obs = sum(len(e) for e in sim.observations)
    print(f"simulated {len(sim.truth)} epochs, {n_obs} observations, {sim.n_arcs} phase arcs")
    return EXIT_OK


def _output_paths(out: str, estimators) -> dict:
    if len(estimators) == 1:
        return {estimators[0]: Path(out)}
    p = Path(out)
    return {e: p.with_name(f"{p.stem}_{e}{p.suffix or '.csv'}") for e in estimators}


def _cmd_run(args) -> int:
    from .bayes_tree import write_locality_csv
    from .ekf_baseline import run_filter, write_estimates
    from .harness import SummaryStats, rsos
    from .ppp import prepare_epochs, run_graph

    cfg = _config(args.config)
    observations = read_observations(args.obs)
    truth = read_truth(args.truth)
    prepared = prepare_epochs(observations)
    missing = [ep.epoch for ep in prepared if ep.epoch not in truth]
    if missing:
        raise OSError(f"truth file has no record for epoch {missing[0]}")
    true_pos = np.array([truth[ep.epoch].position for ep in prepared]).reshape(-1, 3)
    model = cfg.stochastic_model()
    estimators = ["graph", "ekf"] if args.estimator == "both" else [args.estimator]
    paths = _output_paths(args.out, estimators)
    for name in estimators:
        if name == "ekf":
            res = run_filter(prepared, model)
            epochs, est, sig = res.epochs, res.estimates, res.sigmas
        else:
            res = run_graph(prepared, model, cfg.relin_threshold_m, cfg.update_tolerance_m, relin_skip=cfg.relin_skip)
            epochs, est, sig = res.epochs, res.smoothed, res.online_sigma
            if args.locality:
                write_locality_csv(res.records, args.locality)
        write_estimates(paths[name], epochs, est, sig)
        st = SummaryStats.from_errors(rsos(est[:, :3], true_pos))
        print(f"{name}: {len(epochs)} epochs -> {paths[name]}; RSOS median {st.median:.2f} cm, mean {st.mean:.2f} cm, "
              f"std {st.std:.2f} cm, max {st.max:.2f} cm")
    return EXIT_OK


def _cmd_campaign(args) -> int:
    from .harness import campaign, format_tables, write_campaign

    if args.trials < 1 or args.workers < 1:
        raise ConfigError("--trials and --workers must be at least 1")
    cfg = _config(args.config)
    window = cfg.convergence_window_s if args.window_s is None else args.window_s
    if not 0 < window <= cfg.duration_s:
        raise ConfigError(f"--window-s must be positive and at most the trial duration ({cfg.duration_s} s)")

    def progress(i, r):
        status = "ok" if r.ok else "FAILED " + "; ".join(f"{k}: {v}" for k, v in r.failures.items())
        print(f"trial {i + 1}/{args.trials} seed {r.seed}: {status}", file=sys.stderr)

    result = campaign(cfg, args.trials, args.seed, args.workers, progress=None if args.quiet else progress)
    tables = write_campaign(result, args.out_dir, window)
    print(format_tables(tables, window))
    if result.failed:
        for r in result.failed:
            print(f"seed {r.seed} failed: {r.failures}", file=sys.stderr)
        return EXIT_ESTIMATOR
    return EXIT_OK


def _cmd_report(args) -> int:
    from .harness import build_report, format_tables

    tables = build_report(args.in_dir, args.window_s)
    print(format_tables(tables, args.window_s))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pppgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one scenario and write observation and truth CSVs")
    s.add_argument("--config", help="scenario file (key = value lines); defaults to the built-in scenario")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-obs", required=True)
    s.add_argument("--out-truth", required=True)
    s.set_defaults(func=_cmd_simulate)

    r = sub.add_parser("run", help="run an estimator on an observation CSV")
    r.add_argument("--estimator", choices=("graph", "ekf", "both"), default="both")
    r.add_argument("--obs", required=True)
    r.add_argument("--truth", required=True)
    r.add_argument("--out", required=True, help="estimate CSV; with 'both', _graph/_ekf is appended to the name")
    r.add_argument("--config", help="scenario file providing the stochastic model")
    r.add_argument("--locality", help="also write the per-update Bayes-tree diagnostics CSV")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("campaign", help="run a Monte Carlo campaign and write the report")
    c.add_argument("--config")
    c.add_argument("--trials", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--window-s", type=float, default=None, help="convergence window (default from the config)")
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=_cmd_campaign)

    q = sub.add_parser("report", help="recompute statistics and CDF tables of a campaign directory")
    q.add_argument("--in-dir", required=True)
    q.add_argument("--window-s", type=float, default=900.0)
    q.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PppError as exc:
        print(f"estimator failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except (OSError, ValueError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
