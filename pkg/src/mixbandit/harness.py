"""Experiment orchestration: seeded replications, coverage and bound
evaluation, the deterministic invariant suite, and CSV/JSON/SVG emission.

Every replication is a pure function of (base_seed, replication_index):
arm sets, noise, the parameter vector, and the random policy's choices come
from four disjoint counter-based streams, so arm sets never depend on the
policy or the noise realization, and results merge deterministically by
index regardless of worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels, spa, svgplot
from .config import ExperimentConfig
from .confidence import RadiusParams
from .numerics import ConvergenceError
from .policy import gap_bound, min_gap, worst_case_bound

STREAM_ARMS, STREAM_NOISE, STREAM_THETA, STREAM_POLICY = 0, 1, 2, 3

_POLICY_CODES = {"mixing_linucb": 0, "iid_oful": 1, "greedy": 2,
                 "uniform_random": 3, "oracle": 4}
_WARMUP_CODES = {"round_robin": 0, "first_arm": 1}


def stream_rng(base_seed: int, rep: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one (replication, stream) pair."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(rep, stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(eq=False)
class BanditEnv:
    theta_star: np.ndarray
    arms: np.ndarray          # (T, K, p), rows on the unit sphere
    eps: np.ndarray           # (T,)
    rand_choice: np.ndarray   # (T,) int64, for the uniform-random policy
    gap: float                # min gap for fixed arm sets, else nan


def _unit_rows(g: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


def _draw_theta(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    fixed = config.fixed_theta()
    if fixed is not None:
        return fixed
    direction = _unit_rows(rng.standard_normal(config.p))
    radius = config.B * rng.random() ** (1.0 / config.p)
    return direction * radius


def build_env(config: ExperimentConfig, rep: int) -> BanditEnv:
    """Environment arrays for one replication, independent of the policy."""
    T, K, p = config.T, config.K, config.p
    theta = _draw_theta(config, stream_rng(config.base_seed, rep, STREAM_THETA))
    arms_rng = stream_rng(config.base_seed, rep, STREAM_ARMS)
    gap = math.nan
    if config.fixed_arms:
        for _ in range(1000):
            arm_set = _unit_rows(arms_rng.standard_normal((K, p)))
            gap = min_gap(theta, arm_set)
            if gap >= config.min_gap:
                break
        else:
            raise RuntimeError(
                f"could not reach min_gap={config.min_gap} in 1000 arm-set draws")
        arms = np.broadcast_to(arm_set, (T, K, p)).copy()
    else:
        arms = _unit_rows(arms_rng.standard_normal((T, K, p)))
    noise = config.noise_process(stream_rng(config.base_seed, rep, STREAM_NOISE))
    eps = np.asarray(noise.sample_path(T), dtype=np.float64)
    rand_choice = stream_rng(config.base_seed, rep, STREAM_POLICY).integers(
        0, K, size=T, dtype=np.int64)
    return BanditEnv(theta_star=np.ascontiguousarray(theta, dtype=np.float64),
                     arms=np.ascontiguousarray(arms, dtype=np.float64),
                     eps=eps, rand_choice=rand_choice, gap=gap)


@dataclass(eq=False)
class ReplicationResult:
    index: int
    theta_star: np.ndarray
    chosen: np.ndarray
    X: np.ndarray             # chosen arm vectors, (T, p)
    y: np.ndarray
    mean_reward: np.ndarray   # realized <theta*, X_t>, same op order as y
    eps: np.ndarray
    opt_value: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    ucb_chosen: np.ndarray
    radius_sq_used: np.ndarray
    potential: np.ndarray
    coverage: np.ndarray
    radius_sq_at: np.ndarray
    center_norm: np.ndarray
    gap: float
    worst_bound: float
    gap_bound_value: float

    @property
    def covered_all(self) -> bool:
        return bool(self.coverage.all())

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])


def run_replication(config: ExperimentConfig,
                    rep: int,
                    params: Optional[RadiusParams] = None) -> ReplicationResult:
    """Simulate one seeded replication end to end."""
    if params is None:
        params = config.radius_params()
    env = build_env(config, rep)
    pcode = _POLICY_CODES[config.policy_kind]
    wcode = _WARMUP_CODES[config.warmup_rule]
    out = kernels.simulate_bandit(
        env.arms, env.eps, env.rand_choice, env.theta_star, pcode, wcode,
        params.d, params.B, params.lam, params.delta, params.phi_d,
        params.mean_shift)
    (status, fail_round, chosen, opt_value, inst_regret, cum_regret, rewards,
     mean_reward, ucb_chosen, radius_sq_used, potential, coverage,
     radius_sq_at, center_norm) = out
    if status != 0:
        raise ConvergenceError(
            f"constrained solver failed at round {fail_round} "
            f"(replication {rep})")
    T = config.T
    X = env.arms[np.arange(T), chosen]
    wb = worst_case_bound(params, T) if T > params.d else math.nan
    gb = math.nan
    if config.fixed_arms and np.isfinite(env.gap) and env.gap > 0 and T > params.d:
        gb = gap_bound(params, T, env.gap)
    return ReplicationResult(
        index=rep, theta_star=env.theta_star, chosen=chosen, X=X, y=rewards,
        mean_reward=mean_reward, eps=env.eps, opt_value=opt_value,
        inst_regret=inst_regret,
        cum_regret=cum_regret, ucb_chosen=ucb_chosen,
        radius_sq_used=radius_sq_used, potential=potential, coverage=coverage,
        radius_sq_at=radius_sq_at, center_norm=center_norm, gap=env.gap,
        worst_bound=wb, gap_bound_value=gb)


def run_many(config: ExperimentConfig) -> list[ReplicationResult]:
    """All replications, merged by index; worker count never changes results."""
    params = config.radius_params()
    reps = range(config.replications)
    if config.workers <= 1:
        return [run_replication(config, r, params) for r in reps]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(lambda r: run_replication(config, r, params), reps))


@dataclass
class CoverageReport:
    n: int
    frequency: float
    ci_low: float
    ci_high: float
    covered_all: np.ndarray
    final_regret: np.ndarray
    worst_bound: np.ndarray
    gap_values: np.ndarray
    gap_bounds: np.ndarray

    @property
    def worst_bound_pass_fraction(self) -> float:
        return float(np.mean(self.final_regret <= self.worst_bound))

    @property
    def gap_bound_pass_fraction(self) -> float:
        ok = np.isfinite(self.gap_bounds)
        if not ok.any():
            return math.nan
        return float(np.mean(self.final_regret[ok] <= self.gap_bounds[ok]))


def summarize_coverage(results: list[ReplicationResult]) -> CoverageReport:
    flags = np.array([r.covered_all for r in results], dtype=bool)
    n = len(flags)
    freq = float(flags.mean())
    half = 1.96 * math.sqrt(max(freq * (1 - freq), 1e-12) / n)
    return CoverageReport(
        n=n, frequency=freq,
        ci_low=max(0.0, freq - half), ci_high=min(1.0, freq + half),
        covered_all=flags,
        final_regret=np.array([r.final_regret for r in results]),
        worst_bound=np.array([r.worst_bound for r in results]),
        gap_values=np.array([r.gap for r in results]),
        gap_bounds=np.array([r.gap_bound_value for r in results]))


def run_coverage(config: ExperimentConfig) -> CoverageReport:
    """Empirical frequency of uniform-in-t coverage with a binomial CI."""
    if config.replications < 100:
        raise ValueError("coverage estimation needs at least 100 replications")
    return summarize_coverage(run_many(config))


def potential_sum_bound(d: int, p: int, T: int, lam: float) -> float:
    """Deterministic ceiling on the summed delayed elliptical potentials."""
    return 2.0 * d * p * math.log(1.0 + T / (lam * d * p))


def potential_sum(result: ReplicationResult) -> float:
    """Sum over all rounds of min(1, |X_t|^2 in the inverse delayed Gram).

    Warm-up rounds measure against the pure ridge matrix, so the repeated-arm
    identity-start case reproduces the harmonic series exactly.
    """
    return float(result.potential.sum())


def blocked_gram(X: np.ndarray, t: int, d: int, lam: float) -> np.ndarray:
    """Gram of the rounds in t's block that precede t by multiples of d."""
    p = X.shape[1]
    i = ((t - 1) % d) + 1
    idx = np.arange(i, t - d + 1, d)
    V = lam * np.eye(p)
    for s in idx:
        V += np.outer(X[s - 1], X[s - 1])
    return V


def loewner_violation(X: np.ndarray, t: int, d: int, lam: float,
                      directions: np.ndarray) -> float:
    """Largest amount by which the delayed Gram's inverse quadratic form
    exceeds the blocked Gram's, over the given directions (<= 0 is correct)."""
    p = X.shape[1]
    prefix = X[: t - d]
    V_full = lam * np.eye(p) + prefix.T @ prefix
    V_block = blocked_gram(X, t, d, lam)
    worst = -np.inf
    for u in directions:
        qf_full = float(u @ np.linalg.solve(V_full, u))
        qf_block = float(u @ np.linalg.solve(V_block, u))
        worst = max(worst, qf_full - qf_block)
    return worst


@dataclass
class TraceChecks:
    rep: int
    potential_sum: float
    potential_bound: float
    potential_ok: bool
    loewner_worst: float
    loewner_ok: bool
    inst_regret_worst: float
    inst_regret_ok: bool


@dataclass
class VerifyReport:
    traces: list[TraceChecks]
    decomposition_residual: float
    decomposition_ok: bool

    @property
    def ok(self) -> bool:
        return self.decomposition_ok and all(
            t.potential_ok and t.loewner_ok and t.inst_regret_ok
            for t in self.traces)


def check_trace(result: ReplicationResult, params: RadiusParams,
                n_loewner_rounds: int = 64, n_directions: int = 8) -> TraceChecks:
    """Deterministic inequality suite on one simulated trace."""
    T = len(result.potential)
    d, p, lam, B = params.d, params.p, params.lam, params.B
    psum = potential_sum(result)
    pbound = potential_sum_bound(d, p, T, lam)

    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=result.index, spawn_key=(99,))))
    rounds = np.arange(d + 1, T + 1)
    if len(rounds) > n_loewner_rounds:
        pick = np.unique(np.geomspace(d + 1, T, n_loewner_rounds).astype(int))
        rounds = pick[pick > d]
    directions = _unit_rows(rng.standard_normal((n_directions, p)))
    worst_loewner = -np.inf
    for t in rounds:
        worst_loewner = max(worst_loewner,
                            loewner_violation(result.X, int(t), d, lam, directions))

    # optimistic instantaneous-regret ceiling on rounds whose acting set
    # covered the true parameter
    worst_inst = -np.inf
    used = result.radius_sq_used
    for t in range(d + 1, T + 1):
        if not np.isfinite(used[t - 1]):
            continue
        if not result.coverage[t - d - 1]:
            continue
        ceil = 2.0 * max(B, math.sqrt(used[t - 1])) * math.sqrt(result.potential[t - 1])
        worst_inst = max(worst_inst, result.inst_regret[t - 1] - ceil)
    inst_ok = worst_inst <= 1e-9 or not np.isfinite(worst_inst)

    return TraceChecks(
        rep=result.index,
        potential_sum=psum, potential_bound=pbound, potential_ok=psum <= pbound,
        loewner_worst=worst_loewner,
        loewner_ok=worst_loewner <= 1e-10 or not np.isfinite(worst_loewner),
        inst_regret_worst=worst_inst, inst_regret_ok=inst_ok)


def _decomposition_residual(seed: int) -> float:
    """Small-scale telescoping-identity residual (quadrature-backed)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    t = 30
    xs = rng.uniform(-1.0, 1.0, size=(t, 1))
    theta_star = np.array([0.5])
    eps = np.where(rng.random(t) < 0.5, 0.4, -0.4)
    ys = xs[:, 0] * theta_star[0] + eps
    ledger = spa.run_undelayed(xs, ys, B=1.0, theta_star=theta_star)
    theta_bar = np.array([rng.uniform(-1.0, 1.0)])
    return spa.decomposition_check(ledger, theta_star, theta_bar)


def run_verify(config: ExperimentConfig) -> VerifyReport:
    """Execute the deterministic invariant suite on simulated traces."""
    params = config.radius_params()
    results = run_many(config)
    traces = [check_trace(r, params) for r in results]
    residual = _decomposition_residual(config.base_seed)
    return VerifyReport(traces=traces, decomposition_residual=residual,
                        decomposition_ok=residual <= 1e-8)


@dataclass
class SweepReport:
    horizons: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    q10: np.ndarray
    q90: np.ndarray
    slope: float


def fit_loglog_slope(T_values, means) -> float:
    T_values = np.asarray(T_values, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    mask = means > 0
    if mask.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(T_values[mask]), np.log(means[mask]), 1)[0])


def run_sweep(config: ExperimentConfig) -> SweepReport:
    """Mean/median regret across a horizon grid plus a log-log slope fit."""
    if not config.sweep_T:
        raise ValueError("sweep requires config.sweep_T")
    horizons = np.array(sorted(config.sweep_T), dtype=np.int64)
    mean, median, q10, q90 = [], [], [], []
    for T in horizons:
        sub = replace(config, T=int(T))
        finals = np.array([r.final_regret for r in run_many(sub)])
        mean.append(float(finals.mean()))
        median.append(float(np.median(finals)))
        q10.append(float(np.quantile(finals, 0.1)))
        q90.append(float(np.quantile(finals, 0.9)))
    return SweepReport(horizons=horizons, mean=np.array(mean),
                       median=np.array(median), q10=np.array(q10),
                       q90=np.array(q90),
                       slope=fit_loglog_slope(horizons, mean))


def emit_sweep(sweep: SweepReport, out_dir) -> list[str]:
    """Write the sweep table and its log-log plot."""
    os.makedirs(out_dir, exist_ok=True)
    sweep_csv = os.path.join(out_dir, "sweep.csv")
    with open(sweep_csv, "w", encoding="utf-8") as fh:
        fh.write("T,mean,median,q10,q90\n")
        for i, T_ in enumerate(sweep.horizons):
            fh.write(f"{int(T_)},{float(sweep.mean[i])!r},"
                     f"{float(sweep.median[i])!r},{float(sweep.q10[i])!r},"
                     f"{float(sweep.q90[i])!r}\n")
    sweep_svg = os.path.join(out_dir, "sweep.svg")
    svgplot.line_plot(sweep_svg, sweep.horizons,
                      [("mean Reg(T)", sweep.mean)],
                      bands=[(sweep.q10, sweep.q90)],
                      title=f"Regret scaling (slope {sweep.slope:.3f})",
                      xlabel="T", ylabel="Reg(T)", loglog=True)
    return [sweep_csv, sweep_svg]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if not math.isfinite(f) else f
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def emit_outputs(results: list[ReplicationResult], config: ExperimentConfig,
                 out_dir, coverage: Optional[CoverageReport] = None,
                 verify: Optional[VerifyReport] = None,
                 sweep: Optional[SweepReport] = None) -> list[str]:
    """Write the per-round CSV, the JSON summary, and the SVG plots."""
    if not results:
        raise ValueError("no replication results to emit")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    rounds_path = os.path.join(out_dir, "rounds.csv")
    with open(rounds_path, "w", encoding="utf-8") as fh:
        fh.write("rep,t,R_t,Reg,beta_sq,coverage,potential_term\n")
        for r in results:
            T = len(r.inst_regret)
            for t in range(T):
                fh.write(f"{r.index},{t + 1},{float(r.inst_regret[t])!r},"
                         f"{float(r.cum_regret[t])!r},"
                         f"{float(r.radius_sq_at[t])!r},{int(r.coverage[t])},"
                         f"{float(r.potential[t])!r}\n")
    written.append(rounds_path)

    finals = np.array([r.final_regret for r in results])
    summary = {
        "config": config.echo(),
        "replications": len(results),
        "regret": {
            "mean": float(finals.mean()),
            "median": float(np.median(finals)),
            "q10": float(np.quantile(finals, 0.1)),
            "q90": float(np.quantile(finals, 0.9)),
        },
        "coverage": None if coverage is None else {
            "frequency": coverage.frequency,
            "ci_low": coverage.ci_low,
            "ci_high": coverage.ci_high,
            "n": coverage.n,
            "worst_bound_pass_fraction": coverage.worst_bound_pass_fraction,
            "gap_bound_pass_fraction": coverage.gap_bound_pass_fraction,
        },
        "verify": None if verify is None else {
            "ok": verify.ok,
            "decomposition_residual": verify.decomposition_residual,
            "n_traces": len(verify.traces),
            "potential_ok": all(t.potential_ok for t in verify.traces),
            "loewner_ok": all(t.loewner_ok for t in verify.traces),
            "inst_regret_ok": all(t.inst_regret_ok for t in verify.traces),
        },
        "sweep": None if sweep is None else {
            "T": sweep.horizons, "mean": sweep.mean, "median": sweep.median,
            "q10": sweep.q10, "q90": sweep.q90, "slope": sweep.slope,
        },
    }
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(summary_path)

    T = len(results[0].cum_regret)
    step = max(1, T // 400)
    ts = np.arange(1, T + 1)[::step]
    curves = np.stack([r.cum_regret[::step] for r in results])
    mean_curve = curves.mean(axis=0)
    q10c = np.quantile(curves, 0.1, axis=0)
    q90c = np.quantile(curves, 0.9, axis=0)
    regret_svg = os.path.join(out_dir, "regret_curves.svg")
    svgplot.line_plot(regret_svg, ts,
                      [("mean regret", mean_curve)],
                      bands=[(q10c, q90c)],
                      title=f"Cumulative regret ({config.policy_kind})",
                      xlabel="round t", ylabel="Reg(t)")
    written.append(regret_svg)

    cov_svg = os.path.join(out_dir, "coverage_bar.svg")
    frac = (coverage.frequency if coverage is not None
            else float(np.mean([r.covered_all for r in results])))
    svgplot.bar_plot(cov_svg, ["all-rounds coverage", "target"],
                     [frac, 1.0 - config.delta],
                     title="Uniform coverage frequency",
                     ylabel="fraction", ylim=(0.0, 1.05))
    written.append(cov_svg)

    if sweep is not None:
        written.extend(emit_sweep(sweep, out_dir))
    return written
