"""Experiment configuration and the flat key/value config-file format.

Schema (one ``key = value`` per line, ``#`` comments):

    p, K, T, B, delta            problem size and confidence level
    lambda                       ridge; "auto" means 1/B^2
    policy.kind                  mixing_linucb | iid_oful | greedy |
                                 uniform_random | oracle
    warmup.rule                  round_robin | first_arm
    noise.kind                   markov | superposed | dyadic | iid_gaussian | zero
    noise.params                 space-separated k=v pairs, comma lists allowed
                                 (e.g. "a=1 q=0.1" or "w=0.5,0.5 q=0.25,0.125")
    delay.mode                   auto | fixed:<n>
    radius.profile               certified | none   (none = assume phi == 0)
    mean_shift.mode              B | B_plus_1 | twoB_plus_1
    replications, seed, workers  Monte Carlo controls
    fixed_arms                   0 | 1  (one arm set per replication)
    min_gap                      resample fixed arm sets until the gap clears this
    theta.mode                   random | fixed:<v1,v2,...>
    sweep.T                      comma-separated horizons for the sweep command
    out                          output directory
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .confidence import RadiusParams
from .noise import MixingProfile, NoiseProcess, make_noise, no_mixing
from .policy import POLICY_KINDS, WARMUP_RULES, choose_delay


class ConfigError(ValueError):
    """Malformed configuration file or inconsistent settings."""


@dataclass
class ExperimentConfig:
    p: int = 2
    K: int = 10
    T: int = 1000
    B: float = 1.0
    delta: float = 0.05
    lam: Optional[float] = None
    policy_kind: str = "mixing_linucb"
    warmup_rule: str = "round_robin"
    noise_kind: str = "markov"
    noise_params: dict = field(default_factory=lambda: {"a": 1.0, "q": 0.25})
    delay_mode: str = "auto"
    radius_profile: str = "certified"
    mean_shift_mode: str = "B_plus_1"
    replications: int = 100
    base_seed: int = 0
    workers: int = 1
    fixed_arms: bool = False
    min_gap: float = 0.0
    theta_mode: str = "random"
    sweep_T: tuple = ()
    out_dir: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        if self.p < 1 or self.K < 1 or self.T < 1:
            raise ConfigError("p, K, T must be >= 1")
        if self.B <= 0 or not 0 < self.delta < 1:
            raise ConfigError("need B > 0 and delta in (0, 1)")
        if self.policy_kind not in POLICY_KINDS:
            raise ConfigError(f"policy.kind must be one of {POLICY_KINDS}")
        if self.warmup_rule not in WARMUP_RULES:
            raise ConfigError(f"warmup.rule must be one of {WARMUP_RULES}")
        if self.radius_profile not in {"certified", "none"}:
            raise ConfigError("radius.profile must be certified or none")
        if self.replications < 1 or self.workers < 1:
            raise ConfigError("replications and workers must be >= 1")
        return self

    @property
    def resolved_lambda(self) -> float:
        return 1.0 / self.B**2 if self.lam is None else self.lam

    def noise_process(self, rng: np.random.Generator) -> NoiseProcess:
        return make_noise(self.noise_kind, self.noise_params, rng)

    def certified_profile(self) -> MixingProfile:
        """Envelope of the configured noise (state-independent, fixed seed)."""
        proc = self.noise_process(np.random.default_rng(0))
        return proc.certified_profile()

    def assumed_profile(self) -> MixingProfile:
        if self.radius_profile == "none":
            return no_mixing()
        return self.certified_profile()

    def delay(self) -> int:
        if self.policy_kind in {"iid_oful", "greedy"}:
            return 1
        if self.delay_mode == "auto":
            return choose_delay(self.certified_profile(), self.T, self.B, self.p)
        if self.delay_mode.startswith("fixed:"):
            d = int(self.delay_mode.split(":", 1)[1])
            if d < 1:
                raise ConfigError("fixed delay must be >= 1")
            return d
        raise ConfigError("delay.mode must be auto or fixed:<n>")

    def radius_params(self) -> RadiusParams:
        return RadiusParams(B=self.B, p=self.p, d=self.delay(), delta=self.delta,
                            lam=self.resolved_lambda, profile=self.assumed_profile(),
                            mean_shift_mode=self.mean_shift_mode)

    def fixed_theta(self) -> Optional[np.ndarray]:
        if self.theta_mode == "random":
            return None
        if self.theta_mode.startswith("fixed:"):
            vals = np.array([float(v) for v in
                             self.theta_mode.split(":", 1)[1].split(",")])
            if vals.shape != (self.p,):
                raise ConfigError("theta.mode fixed vector must have length p")
            if np.linalg.norm(vals) > self.B * (1 + 1e-12):
                raise ConfigError("fixed theta must lie in the ball of radius B")
            return vals
        raise ConfigError("theta.mode must be random or fixed:<csv>")

    def echo(self) -> dict:
        """Stable, JSON-ready description of the configuration."""
        return {
            "p": self.p, "K": self.K, "T": self.T, "B": self.B,
            "delta": self.delta, "lambda": self.resolved_lambda,
            "policy.kind": self.policy_kind, "warmup.rule": self.warmup_rule,
            "noise.kind": self.noise_kind,
            "noise.params": {k: (list(v) if isinstance(v, (list, tuple, np.ndarray))
                                 else v) for k, v in sorted(self.noise_params.items())},
            "delay.mode": self.delay_mode, "delay": self.delay(),
            "radius.profile": self.radius_profile,
            "mean_shift.mode": self.mean_shift_mode,
            "replications": self.replications, "seed": self.base_seed,
            "fixed_arms": self.fixed_arms, "min_gap": self.min_gap,
            "theta.mode": self.theta_mode,
            "sweep.T": list(self.sweep_T),
        }


def _parse_value_token(tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _parse_noise_params(text: str) -> dict:
    params = {}
    for pair in text.split():
        if "=" not in pair:
            raise ConfigError(f"noise.params entries must be k=v, got {pair!r}")
        k, v = pair.split("=", 1)
        if "," in v:
            params[k] = [float(x) for x in v.split(",")]
        else:
            params[k] = _parse_value_token(v)
    return params


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "p":
                cfg.p = int(value)
            elif key == "K":
                cfg.K = int(value)
            elif key == "T":
                cfg.T = int(value)
            elif key == "B":
                cfg.B = float(value)
            elif key == "delta":
                cfg.delta = float(value)
            elif key == "lambda":
                cfg.lam = None if value == "auto" else float(value)
            elif key == "policy.kind":
                cfg.policy_kind = value
            elif key == "warmup.rule":
                cfg.warmup_rule = value
            elif key == "noise.kind":
                cfg.noise_kind = value
            elif key == "noise.params":
                cfg.noise_params = _parse_noise_params(value)
            elif key == "delay.mode":
                cfg.delay_mode = value
            elif key == "radius.profile":
                cfg.radius_profile = value
            elif key == "mean_shift.mode":
                cfg.mean_shift_mode = value
            elif key == "replications":
                cfg.replications = int(value)
            elif key == "seed":
                cfg.base_seed = int(value)
            elif key == "workers":
                cfg.workers = int(value)
            elif key == "fixed_arms":
                cfg.fixed_arms = bool(int(value))
            elif key == "min_gap":
                cfg.min_gap = float(value)
            elif key == "theta.mode":
                cfg.theta_mode = value
            elif key == "sweep.T":
                cfg.sweep_T = tuple(int(v) for v in value.split(","))
            elif key == "out":
                cfg.out_dir = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def with_overrides(cfg: ExperimentConfig, seed=None, reps=None, workers=None,
                   out=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["base_seed"] = int(seed)
    if reps is not None:
        updates["replications"] = int(reps)
    if workers is not None:
        updates["workers"] = int(workers)
    if out is not None:
        updates["out_dir"] = str(out)
    return replace(cfg, **updates).validate() if updates else cfg
