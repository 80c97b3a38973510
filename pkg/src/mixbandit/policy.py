"""Arm-selection policies and regret accounting.

The main policy selects optimistically against the confidence set built
from observations at least d rounds old; baselines (ridge UCB with the
independent-noise radius, greedy, uniform random, oracle) calibrate the
failure modes and the regret ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .confidence import (DelayedDesign, RadiusParams,
                         iid_baseline_radius_sq, radius_sq)
from .noise import MixingProfile
from .numerics import constrained_least_squares

POLICY_KINDS = ("mixing_linucb", "iid_oful", "greedy", "uniform_random", "oracle")
WARMUP_RULES = ("round_robin", "first_arm")

_ARM_NORM_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class PolicySpec:
    """Policy kind plus its confidence parameters and warm-up rule.

    ``params`` supplies B, lambda, delta (and the delay/profile for the
    delayed UCB). Baselines other than mixing_linucb act on a one-round lag.
    """

    kind: str
    params: Optional[RadiusParams] = None
    warmup_rule: str = "round_robin"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"policy kind must be one of {POLICY_KINDS}")
        if self.warmup_rule not in WARMUP_RULES:
            raise ValueError(f"warmup rule must be one of {WARMUP_RULES}")
        if self.kind in {"mixing_linucb", "iid_oful", "greedy"} and self.params is None:
            raise ValueError(f"{self.kind} requires RadiusParams")


def choose_delay(profile: MixingProfile, T: int, B: float, p: int) -> int:
    """Delay tuned to the mixing envelope, clamped to [1, T-1].

    Geometric envelope: ceil(tau * log(B C T / p)); algebraic:
    ceil(C * T^(1/(1+r))); no mixing: 1. Tabulated profiles must carry an
    analytic envelope.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    kind, C, rate = profile.kind, profile.C, None
    if kind == "geometric":
        rate = profile.tau
    elif kind == "algebraic":
        rate = profile.r
    elif kind == "tabulated":
        if profile.envelope is None:
            raise ValueError("tabulated profile has no analytic envelope for delay tuning")
        kind, C, rate = profile.envelope
    if kind == "none":
        d = 1
    elif kind == "geometric":
        d = math.ceil(rate * math.log(B * C * T / p))
    elif kind == "algebraic":
        d = math.ceil(C * T ** (1.0 / (1.0 + rate)))
    else:
        raise ValueError(f"unknown envelope kind {kind!r}")
    return max(1, min(d, max(1, T - 1)))


class PolicyState:
    """Sequential state of a policy over one replication.

    Mirrors the simulation kernel's semantics; used for library-level runs
    and as the reference the kernel is tested against.
    """

    def __init__(self, spec: PolicySpec,
                 rng: Optional[np.random.Generator] = None,
                 theta_star: Optional[np.ndarray] = None):
        self.spec = spec
        self.rng = rng
        self.theta_star = theta_star
        if spec.kind == "uniform_random" and rng is None:
            raise ValueError("uniform_random needs a Generator")
        if spec.kind == "oracle" and theta_star is None:
            raise ValueError("oracle needs theta_star")
        if spec.params is not None:
            params = spec.params
            if spec.kind in {"iid_oful", "greedy"} and params.d != 1:
                params = RadiusParams(
                    B=params.B, p=params.p, d=1, delta=params.delta,
                    lam=params.lam, profile=params.profile,
                    mean_shift_mode=params.mean_shift_mode)
            self.design = DelayedDesign(params)
        else:
            self.design = None

    @property
    def delay(self) -> int:
        return self.design.params.d if self.design is not None else 1

    def select(self, t: int, arms: np.ndarray) -> int:
        kind = self.spec.kind
        if kind == "oracle":
            return int(np.argmax(arms @ self.theta_star))
        if kind == "uniform_random":
            return int(self.rng.integers(0, len(arms)))
        if t <= self.delay:
            if self.spec.warmup_rule == "round_robin":
                return (t - 1) % len(arms)
            return 0
        params = self.design.params
        stats = self.design.stats
        if kind == "iid_oful":
            center = stats.gram.solve(stats.cross)
            rsq = iid_baseline_radius_sq(stats, params.B, params.lam, params.delta)
            beta = math.sqrt(rsq)
        elif kind == "greedy":
            center = constrained_least_squares(stats, params.B)
            beta = 0.0
        else:
            cset = self.design.view()
            center, beta = cset.center, math.sqrt(cset.radius_sq)
        best_u, choice = -np.inf, 0
        for k, x in enumerate(arms):
            u = float(center @ x)
            if beta > 0.0:
                u += beta * math.sqrt(stats.gram.quad_form_inv(x))
            if u > best_u:
                best_u, choice = u, k
        return choice

    def observe(self, x, y: float) -> None:
        if self.design is not None:
            self.design.observe(x, y)


def select_arm(state: PolicyState, t: int, arms) -> int:
    """Choose an arm index at round t; ties break to the lowest index."""
    arms = np.asarray(arms, dtype=np.float64)
    if arms.ndim != 2 or len(arms) == 0:
        raise ValueError("arms must be a non-empty (K, p) array")
    norms = np.linalg.norm(arms, axis=1)
    if np.any(norms > _ARM_NORM_SLACK):
        raise ValueError("arm norms must not exceed 1")
    return state.select(t, arms)


class RegretTrace:
    """Per-round instantaneous regret and its running sum."""

    def __init__(self):
        self.inst: list[float] = []
        self.cum: list[float] = []
        self.opt_values: list[float] = []

    def __len__(self) -> int:
        return len(self.inst)

    @property
    def total(self) -> float:
        return self.cum[-1] if self.cum else 0.0

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.asarray(self.inst), np.asarray(self.cum),
                np.asarray(self.opt_values))


def record_round(trace: RegretTrace, theta_star, arms, chosen: int) -> RegretTrace:
    """Append round t's regret: best achievable value minus the chosen one."""
    arms = np.asarray(arms, dtype=np.float64)
    values = arms @ np.asarray(theta_star, dtype=np.float64)
    best = float(values.max())
    r = best - float(values[chosen])
    trace.inst.append(r)
    trace.cum.append(trace.total + r)
    trace.opt_values.append(best)
    return trace


def min_gap(theta_star, arms) -> float:
    """Smallest value separation between the best arm and any other arm."""
    arms = np.asarray(arms, dtype=np.float64)
    values = arms @ np.asarray(theta_star, dtype=np.float64)
    best = int(np.argmax(values))
    others = np.delete(values, best)
    if len(others) == 0:
        return np.inf
    return float(values[best] - others.max())


def worst_case_bound(params: RadiusParams, T: int) -> float:
    """High-probability regret bound at horizon T (lambda = 1/B^2 regime)."""
    if T <= params.d:
        raise ValueError("T must exceed the delay d")
    B, d, p = params.B, params.d, params.p
    bsq = radius_sq(params, T)
    log_term = math.log(1.0 + B * B * T / (d * p))
    return 2.0 * d * B + math.sqrt(8.0 * d * p * T * max(B * B, bsq) * log_term)


def gap_bound(params: RadiusParams, T: int, gap: float) -> float:
    """Gap-dependent regret bound at horizon T."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    if T <= params.d:
        raise ValueError("T must exceed the delay d")
    B, d, p = params.B, params.d, params.p
    bsq = radius_sq(params, T)
    log_term = math.log(1.0 + B * B * T / (d * p))
    return 2.0 * d * B + (8.0 * d * p / gap) * max(B * B, bsq) * log_term


def write_policy_csv(path, chosen, ucb_chosen, inst_regret, cum_regret) -> None:
    """Per-round decisions: t, chosen_index, ucb_of_chosen, R_t, Reg(t)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,chosen_index,ucb_of_chosen,R_t,Reg\n")
        for t in range(len(chosen)):
            fh.write(f"{t + 1},{int(chosen[t])},{float(ucb_chosen[t])!r},"
                     f"{float(inst_regret[t])!r},{float(cum_regret[t])!r}\n")
