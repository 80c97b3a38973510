"""Acceptance suite: every product-level criterion at its stated tolerance.

Each test prints one PASS/FAIL line (echoed again in the pytest summary) and
asserts the criterion. Monte Carlo pieces run on fixed seeds, so outcomes
are reproducible; runtime ceilings are asserted with the budgets the
criteria state.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from mixbandit import kernels, spa
from mixbandit.config import ExperimentConfig
from mixbandit.harness import (potential_sum, potential_sum_bound, run_many,
                               run_coverage, run_sweep, emit_outputs,
                               stream_rng, summarize_coverage)
from mixbandit.noise import (MarkovTwoStateNoise, SuperposedChainsNoise,
                             certified_profile)
from mixbandit.numerics import DesignStats, constrained_least_squares, rank_one_update

WORKERS = 8


def test_01_delayed_elliptical_potential_inequality(acceptance):
    # 200 traces across d x p cells, T = 5000, lambda = 1/B^2, exact inequality
    t0 = time.time()
    T, B = 5000, 1.0
    reps_per_cell = 25
    worst_ratio = 0.0
    n_traces = 0
    ok = True
    for d in (1, 3, 7, 16):
        for p in (2, 5):
            cfg = ExperimentConfig(
                p=p, K=10, T=T, B=B, delta=0.05, replications=reps_per_cell,
                noise_kind="markov", noise_params={"a": 1.0, "q": 0.1},
                delay_mode=f"fixed:{d}", base_seed=1000 + d * 10 + p,
                workers=WORKERS)
            bound = potential_sum_bound(d, p, T, cfg.resolved_lambda)
            for res in run_many(cfg):
                s = potential_sum(res)
                worst_ratio = max(worst_ratio, s / bound)
                ok = ok and (s <= bound)
                n_traces += 1
    elapsed = time.time() - t0
    acceptance(1, ok and n_traces == 200 and elapsed < 120,
               f"potential sum <= 2dp*log(1+T/(lam*d*p)) on {n_traces}/200 "
               f"traces, worst ratio {worst_ratio:.3f}, {elapsed:.1f}s")
    assert ok and n_traces == 200
    assert elapsed < 120


def test_02_harmonic_repeated_arm_spot_check(acceptance):
    T = 10
    arms = np.zeros((T, 1, 2))
    arms[:, 0, 0] = 1.0
    out = kernels.simulate_bandit(arms, np.zeros(T), np.zeros(T, np.int64),
                                  np.array([0.5, 0.0]), 0, 0, 1, 1.0, 1.0,
                                  0.05, 0.0, 2.0)
    psum = float(out[10].sum())
    bound = potential_sum_bound(1, 2, T, 1.0)
    h10 = sum(1.0 / k for k in range(1, 11))
    ok = (round(psum, 4) == 2.9290 and round(bound, 3) == 7.167
          and abs(psum - h10) < 1e-12 and psum <= bound)
    acceptance(2, ok, f"harmonic case: sum={psum:.4f} (H_10), bound={bound:.4f}")
    assert ok


@pytest.fixture(scope="module")
def coverage_run():
    cfg = ExperimentConfig(
        p=2, K=10, T=2000, B=1.0, delta=0.05, replications=1000,
        noise_kind="markov", noise_params={"a": 1.0, "q": 0.1},
        delay_mode="auto", base_seed=7, workers=WORKERS)
    t0 = time.time()
    report = run_coverage(cfg)
    return cfg, report, time.time() - t0


def test_03_uniform_coverage(acceptance, coverage_run):
    cfg, report, elapsed = coverage_run
    proc = MarkovTwoStateNoise(1.0, 0.1, np.random.default_rng(0))
    prof = certified_profile(proc)
    tau = prof.envelope[2]
    d = cfg.delay()
    ok_tau = abs(tau - 4.4814) < 1e-4
    ok_d = d == math.ceil(tau * math.log(cfg.B * 1.0 * cfg.T / cfg.p))
    ok = (report.frequency >= 0.95 - 0.02 and ok_tau and ok_d
          and elapsed < 600)
    acceptance(3, ok,
               f"coverage frequency {report.frequency:.4f} >= 0.93 over "
               f"{report.n} replications (tau={tau:.4f}, d={d}), {elapsed:.1f}s")
    assert ok


def test_04_worst_case_bound_holds_pathwise(acceptance, coverage_run):
    _, report, _ = coverage_run
    frac = report.worst_bound_pass_fraction
    ok = frac >= 0.95
    acceptance(4, ok, f"Reg(T) <= worst-case bound on {frac:.4f} of 1000 "
                      f"replications (need >= 0.95)")
    assert ok


def test_05_sublinear_regret_scaling(acceptance):
    t0 = time.time()
    grid = (1000, 2000, 4000, 8000)
    cfg = ExperimentConfig(
        p=2, K=10, B=1.0, delta=0.05, replications=200,
        noise_kind="markov", noise_params={"a": 1.0, "q": 0.25},
        delay_mode="auto", base_seed=11, workers=WORKERS, sweep_T=grid)
    tuned = run_sweep(cfg)
    control = run_sweep(replace(cfg, policy_kind="uniform_random"))
    elapsed = time.time() - t0
    ok = tuned.slope <= 0.75 and control.slope >= 0.95 and elapsed < 1800
    acceptance(5, ok,
               f"tuned-delay slope {tuned.slope:.3f} <= 0.75, uniform control "
               f"slope {control.slope:.3f} >= 0.95, {elapsed:.1f}s")
    assert ok


def test_06_gap_dependent_bound(acceptance):
    base = ExperimentConfig(
        p=2, K=5, T=4000, B=1.0, delta=0.05, replications=500,
        noise_kind="markov", noise_params={"a": 1.0, "q": 0.25},
        delay_mode="auto", base_seed=13, workers=WORKERS,
        fixed_arms=True, min_gap=0.3, theta_mode="fixed:0.9,0.0")
    results_4000 = run_many(base)
    report = summarize_coverage(results_4000)
    gaps = report.gap_values
    frac = report.gap_bound_pass_fraction
    mean_4000 = float(report.final_regret.mean())
    results_2000 = run_many(replace(base, T=2000))
    mean_2000 = float(np.mean([r.final_regret for r in results_2000]))
    growth = mean_4000 / mean_2000
    ok = (gaps.min() > 0.1 and frac >= 0.95 and growth <= 1.5)
    acceptance(6, ok,
               f"gap bound holds on {frac:.3f} of 500 replications "
               f"(min gap {gaps.min():.3f} > 0.1), growth factor "
               f"{growth:.3f} <= 1.5")
    assert ok


def _spa_trajectory(rep, t, p, B, q=0.25):
    arng = stream_rng(600, rep, 0)
    nrng = stream_rng(600, rep, 1)
    trng = stream_rng(600, rep, 2)
    xs = arng.uniform(-1.0, 1.0, size=(t, p))
    xs /= np.maximum(np.linalg.norm(xs, axis=1, keepdims=True), 1.0)
    theta = trng.uniform(-1.0, 1.0, size=p)
    theta *= B * trng.random() / max(np.linalg.norm(theta), 1e-12)
    eps = MarkovTwoStateNoise(1.0, q, nrng).sample_path(t)
    ys = xs @ theta + eps
    return xs, ys, theta, trng


def test_07_forecaster_regret_bounds(acceptance):
    t0 = time.time()
    worst_margin = -np.inf
    worst_residual = 0.0
    ok = True
    cases = [(1, 100, 25), (2, 60, 25)]
    for p, t, n_traj in cases:
        for rep in range(n_traj):
            B = 1.0 if rep % 2 == 0 else 0.5
            xs, ys, theta, trng = _spa_trajectory(rep + 100 * p, t, p, B)
            stats = DesignStats.empty(p, ridge=1.0)
            for x, y in zip(xs, ys):
                stats = rank_one_update(stats, x, y)
            comparators = [constrained_least_squares(stats, B)]
            for _ in range(20):
                c = trng.uniform(-1, 1, size=p)
                c *= B * trng.random() / max(np.linalg.norm(c), 1e-12)
                comparators.append(c)
            undelayed = spa.run_undelayed(xs, ys, B, theta_star=theta)
            bound = spa.ewa_regret_bound(t, B, p)
            for comp in comparators:
                margin = spa.blocked_regret(undelayed, comp) - bound
                worst_margin = max(worst_margin, margin)
                ok = ok and margin <= 1e-3
            resid = spa.decomposition_check(undelayed, theta, comparators[0])
            worst_residual = max(worst_residual, resid)
            ok = ok and resid <= 1e-8
            for d in (2, 3, 5):
                blocked = spa.blocked_forecaster(xs, ys, d, B, theta_star=theta)
                bbound = spa.blocked_regret_bound(t, d, B, p)
                for comp in comparators[:2]:
                    margin = spa.blocked_regret(blocked, comp) - bbound
                    worst_margin = max(worst_margin, margin)
                    ok = ok and margin <= 1e-3
                resid = spa.decomposition_check(blocked, theta, comparators[0])
                worst_residual = max(worst_residual, resid)
                ok = ok and resid <= 1e-8
    elapsed = time.time() - t0
    ok = ok and elapsed < 600
    acceptance(7, ok,
               f"forecaster regret within bounds on 50 trajectories "
               f"(worst margin {worst_margin:.2e} <= 1e-3), decomposition "
               f"residual <= {worst_residual:.2e}, {elapsed:.1f}s")
    assert ok


def test_08_drift_exceedance_frequency(acceptance):
    t0 = time.time()
    n, t, d, B, delta, q = 1000, 50, 4, 1.0, 0.05, 0.25
    prof = certified_profile(MarkovTwoStateNoise(1.0, q, np.random.default_rng(0)))
    exceed = 0
    for rep in range(n):
        xs, ys, theta, _ = _spa_trajectory(rep + 5000, t, 1, B, q=q)
        ledger = spa.blocked_forecaster(xs, ys, d, B, theta_star=theta)
        if spa.drift_exceedance(ledger, prof, d, B, delta).any():
            exceed += 1
    freq = exceed / n
    limit = delta + 2.0 * math.sqrt(delta * (1 - delta) / n)
    elapsed = time.time() - t0
    ok = freq <= limit
    acceptance(8, ok, f"any-t drift exceedance frequency {freq:.4f} <= "
                      f"{limit:.4f} over {n} replications, {elapsed:.1f}s")
    assert ok


def test_09_noise_certification(acceptance):
    # empirical lag-d conditional means over one million steps
    a, q = 1.0, 0.25
    proc = MarkovTwoStateNoise(a, q, np.random.default_rng(99))
    n = 1_000_000
    path = proc.sample_path(n + 8)
    ok = True
    details = []
    for d in (1, 2, 4, 8):
        prods = path[:-d][: n] * path[d:][: n]
        batches = prods[: (n // 1000) * 1000].reshape(1000, -1).mean(axis=1)
        se = batches.std(ddof=1) / math.sqrt(len(batches))
        err = abs(prods.mean() - a * (1 - 2 * q) ** d)
        ok = ok and err <= 3 * se
        details.append(f"d={d}:{err / se:.2f}se")
    # exact envelope domination on 1e5 sampled hidden states
    w = np.array([0.5, 0.3, 0.2])
    qs = np.array([0.25, 0.125, 0.0625])
    sup = SuperposedChainsNoise(w, qs, np.random.default_rng(17))
    prof = certified_profile(sup)
    m = 100_000
    gen = np.random.default_rng(23)
    flips = gen.random((m, 3)) < qs
    states = sup.states * np.cumprod(np.where(flips, -1.0, 1.0), axis=0)
    exact_ok = True
    for d in (1, 2, 4, 8):
        decay = (1.0 - 2.0 * qs) ** d
        cm = states @ (w * decay)
        exact_ok = exact_ok and bool(np.all(np.abs(cm) <= prof.phi(d)))
    ok = ok and exact_ok
    acceptance(9, ok,
               f"lag-d conditional means within 3 MC standard errors "
               f"({', '.join(details)}); exact envelope holds on 100000 states")
    assert ok


def test_10_byte_identical_outputs_across_workers(acceptance, tmp_path):
    blobs = {}
    for workers in (1, 4):
        cfg = ExperimentConfig(
            p=2, K=6, T=300, B=1.0, delta=0.05, replications=20,
            noise_kind="markov", noise_params={"a": 1.0, "q": 0.1},
            delay_mode="auto", base_seed=21, workers=workers)
        results = run_many(cfg)
        out = tmp_path / f"w{workers}"
        emit_outputs(results, cfg, out, coverage=summarize_coverage(results))
        blobs[workers] = {name: (out / name).read_bytes()
                          for name in ("rounds.csv", "summary.json")}
    ok = blobs[1] == blobs[4]
    acceptance(10, ok, "rounds.csv and summary.json byte-identical for "
                       "worker counts 1 and 4")
    assert ok
