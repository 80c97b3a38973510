"""Command-line interface.

Subcommands: run, coverage, sweep, verify, plot. Exit codes: 0 all hard
invariants pass, 1 an inequality was violated, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import harness, svgplot
from .config import ConfigError, ExperimentConfig, load_config, with_overrides


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="path to a flat key=value config file")
    sub.add_argument("--seed", type=int, help="override the base seed")
    sub.add_argument("--reps", type=int, help="override the replication count")
    sub.add_argument("--workers", type=int, help="override the worker count")
    sub.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mixbandit",
        description="Linear bandit simulation lab for dependent observation noise")
    subs = ap.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("run", "simulate replications and emit CSV/JSON/SVG outputs"),
        ("coverage", "estimate the uniform coverage frequency"),
        ("sweep", "regret-vs-horizon study with a log-log slope fit"),
        ("verify", "run the deterministic inequality suite"),
        ("plot", "re-render SVG plots from a previous run's outputs"),
    ]:
        sub = subs.add_parser(name, help=desc)
        _add_common(sub)
    return ap


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = with_overrides(cfg, seed=args.seed, reps=args.reps,
                         workers=args.workers, out=args.out)
    return cfg.validate()


def _out_dir(cfg: ExperimentConfig) -> str:
    return cfg.out_dir or "out"


def _cmd_run(cfg: ExperimentConfig) -> int:
    results = harness.run_many(cfg)
    coverage = harness.summarize_coverage(results)
    paths = harness.emit_outputs(results, cfg, _out_dir(cfg), coverage=coverage)
    print(f"ran {len(results)} replications; "
          f"mean Reg(T)={np.mean([r.final_regret for r in results]):.3f}; "
          f"coverage={coverage.frequency:.3f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_coverage(cfg: ExperimentConfig) -> int:
    if cfg.replications < 100:
        raise ValueError("coverage estimation needs at least 100 replications")
    results = harness.run_many(cfg)
    report = harness.summarize_coverage(results)
    print(f"uniform coverage frequency: {report.frequency:.4f} "
          f"[{report.ci_low:.4f}, {report.ci_high:.4f}] over {report.n} replications")
    print(f"worst-case bound pass fraction: {report.worst_bound_pass_fraction:.4f}")
    if cfg.out_dir is not None:
        harness.emit_outputs(results, cfg, _out_dir(cfg), coverage=report)
    return 0


def _cmd_sweep(cfg: ExperimentConfig) -> int:
    report = harness.run_sweep(cfg)
    for i, T in enumerate(report.horizons):
        print(f"T={int(T):>7d}  mean={report.mean[i]:.2f}  "
              f"median={report.median[i]:.2f}  "
              f"q10={report.q10[i]:.2f}  q90={report.q90[i]:.2f}")
    print(f"log-log slope of mean Reg(T): {report.slope:.4f}")
    if cfg.out_dir is not None:
        harness.emit_sweep(report, _out_dir(cfg))
    return 0


def _cmd_verify(cfg: ExperimentConfig) -> int:
    report = harness.run_verify(cfg)
    for tr in report.traces:
        if not (tr.potential_ok and tr.loewner_ok and tr.inst_regret_ok):
            print(f"replication {tr.rep}: potential_ok={tr.potential_ok} "
                  f"(sum={tr.potential_sum:.4f} bound={tr.potential_bound:.4f}) "
                  f"loewner_ok={tr.loewner_ok} (worst={tr.loewner_worst:.3e}) "
                  f"inst_regret_ok={tr.inst_regret_ok} "
                  f"(worst={tr.inst_regret_worst:.3e})", file=sys.stderr)
    print(f"checked {len(report.traces)} traces; "
          f"decomposition residual={report.decomposition_residual:.3e}; "
          f"ok={report.ok}")
    return 0 if report.ok else 1


def _cmd_plot(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    rounds_path = os.path.join(out, "rounds.csv")
    if not os.path.exists(rounds_path):
        print(f"no rounds.csv under {out}; run `mixbandit run` first", file=sys.stderr)
        return 2
    per_rep: dict[int, list[float]] = {}
    cov: dict[int, bool] = {}
    with open(rounds_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rep = int(row["rep"])
            per_rep.setdefault(rep, []).append(float(row["Reg"]))
            cov[rep] = cov.get(rep, True) and bool(int(row["coverage"]))
    curves = np.array([per_rep[k] for k in sorted(per_rep)])
    T = curves.shape[1]
    step = max(1, T // 400)
    ts = np.arange(1, T + 1)[::step]
    svgplot.line_plot(os.path.join(out, "regret_curves.svg"), ts,
                      [("mean regret", curves[:, ::step].mean(axis=0))],
                      bands=[(np.quantile(curves[:, ::step], 0.1, axis=0),
                              np.quantile(curves[:, ::step], 0.9, axis=0))],
                      title="Cumulative regret", xlabel="round t",
                      ylabel="Reg(t)")
    frac = float(np.mean([cov[k] for k in sorted(cov)]))
    svgplot.bar_plot(os.path.join(out, "coverage_bar.svg"),
                     ["all-rounds coverage", "target"],
                     [frac, 1.0 - cfg.delta],
                     title="Uniform coverage frequency", ylabel="fraction",
                     ylim=(0.0, 1.05))
    print(f"re-rendered plots under {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    handler = {
        "run": _cmd_run,
        "coverage": _cmd_coverage,
        "sweep": _cmd_sweep,
        "verify": _cmd_verify,
        "plot": _cmd_plot,
    }[args.command]
    try:
        return handler(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
