"""Dependent-noise generators with exactly computable mixing envelopes.

All chain-based generators emit values in [-1, 1] (hence 1-sub-Gaussian) and
start from their stationary law, so every marginal is centred and identical
across time. Their conditional means given the state d steps back have exact
closed forms, which makes the envelope checkable without Monte Carlo slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

_TABULATION_LENGTH = 10_000


@dataclass(frozen=True, eq=False)
class MixingProfile:
    """Envelope phi on the conditional mean of the noise at lag d.

    ``kind`` is one of none / geometric / algebraic / tabulated. Tabulated
    profiles extend their last stored value beyond the table, and may carry
    an analytic envelope (used only for delay tuning). The sub-Gaussian
    parameter is fixed to 1 throughout.
    """

    kind: str
    C: float = 0.0
    tau: float = 0.0
    r: float = 0.0
    values: Optional[np.ndarray] = None
    envelope: Optional[tuple] = None
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in {"none", "geometric", "algebraic", "tabulated"}:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "geometric" and (self.C <= 0 or self.tau <= 0):
            raise ValueError("geometric profile needs C > 0 and tau > 0")
        if self.kind == "algebraic" and (self.C <= 0 or self.r <= 0):
            raise ValueError("algebraic profile needs C > 0 and r > 0")
        if self.kind == "tabulated":
            v = self.values
            if v is None or len(v) == 0:
                raise ValueError("tabulated profile needs at least one value")
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise ValueError("profile values must be nonnegative and non-increasing")

    def phi(self, d: int) -> float:
        """Envelope value at lag d >= 1."""
        d = int(d)
        if d < 1:
            raise ValueError("lag d must be >= 1")
        if self.kind == "none":
            return 0.0
        if self.kind == "geometric":
            return float(self.C * np.exp(-d / self.tau))
        if self.kind == "algebraic":
            return float(self.C * d ** (-self.r))
        v = self.values
        return float(v[d - 1]) if d <= len(v) else float(v[-1])


def no_mixing() -> MixingProfile:
    return MixingProfile(kind="none")


def geometric_profile(C: float, tau: float) -> MixingProfile:
    return MixingProfile(kind="geometric", C=float(C), tau=float(tau))


def algebraic_profile(C: float, r: float) -> MixingProfile:
    return MixingProfile(kind="algebraic", C=float(C), r=float(r))


def tabulated_profile(values, envelope: Optional[tuple] = None) -> MixingProfile:
    values = np.asarray(values, dtype=np.float64)
    return MixingProfile(kind="tabulated", values=values, envelope=envelope)


def phi(profile: MixingProfile, d: int) -> float:
    return profile.phi(d)


class NoiseProcess:
    """Base class: a seeded stationary noise stream."""

    def step(self) -> float:
        raise NotImplementedError

    def sample_path(self, T: int) -> np.ndarray:
        """Draw T consecutive values; consumes the stream exactly like T steps."""
        return np.array([self.step() for _ in range(T)])

    def certified_profile(self) -> MixingProfile:
        raise NotImplementedError

    def conditional_mean(self, d: int) -> float:
        """Exact mean of the value d steps ahead, given the current state."""
        raise NotImplementedError


class ZeroNoise(NoiseProcess):
    def step(self) -> float:
        return 0.0

    def sample_path(self, T: int) -> np.ndarray:
        return np.zeros(T)

    def certified_profile(self) -> MixingProfile:
        return no_mixing()

    def conditional_mean(self, d: int) -> float:
        return 0.0


class IidGaussianNoise(NoiseProcess):
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def step(self) -> float:
        return float(self.rng.standard_normal())

    def sample_path(self, T: int) -> np.ndarray:
        return self.rng.standard_normal(T)

    def certified_profile(self) -> MixingProfile:
        return no_mixing()

    def conditional_mean(self, d: int) -> float:
        return 0.0


class SuperposedChainsNoise(NoiseProcess):
    """Weighted superposition of independent two-state sign chains.

    Chain k holds a sign in {-1, +1} that flips with probability q_k each
    round; the emitted value is sum_k w_k * sign_k, bounded by sum w_k <= 1.
    Initial signs are drawn uniformly (the stationary law).
    """

    def __init__(self, weights, flip_probs, rng: np.random.Generator,
                 envelope: Optional[tuple] = None):
        w = np.asarray(weights, dtype=np.float64)
        q = np.asarray(flip_probs, dtype=np.float64)
        if w.shape != q.shape or w.ndim != 1 or len(w) == 0:
            raise ValueError("weights and flip_probs must be equal-length vectors")
        if np.any(w < 0) or w.sum() > 1 + 1e-12:
            raise ValueError("weights must be nonnegative with sum <= 1")
        if np.any(q < 0) or np.any(q > 0.5):
            raise ValueError("flip probabilities must lie in [0, 1/2]")
        self.weights = w
        self.flip_probs = q
        self.rng = rng
        self.envelope = envelope
        self.states = np.where(rng.random(len(w)) < 0.5, 1.0, -1.0)

    def step(self) -> float:
        flips = self.rng.random(len(self.states)) < self.flip_probs
        self.states = self.states * np.where(flips, -1.0, 1.0)
        return float(self.states @ self.weights)

    def sample_path(self, T: int) -> np.ndarray:
        flips = self.rng.random((T, len(self.states))) < self.flip_probs
        signs = np.where(flips, -1.0, 1.0)
        path = self.states * np.cumprod(signs, axis=0)
        self.states = path[-1].copy()
        return path @ self.weights

    def certified_profile(self) -> MixingProfile:
        if np.any(self.flip_probs == 0.0):
            raise ValueError("a frozen chain (q = 0) has no decaying envelope")
        lags = np.arange(1, _TABULATION_LENGTH + 1)
        decay = (1.0 - 2.0 * self.flip_probs)[None, :] ** lags[:, None]
        values = decay @ self.weights
        if not np.any(values > 0):
            return no_mixing()
        return tabulated_profile(values, envelope=self.envelope)

    def conditional_mean(self, d: int) -> float:
        if d < 1:
            raise ValueError("lag d must be >= 1")
        decay = (1.0 - 2.0 * self.flip_probs) ** d
        return float((self.weights * decay) @ self.states)


class MarkovTwoStateNoise(SuperposedChainsNoise):
    """Single two-state chain emitting +/-a, flipping with probability q."""

    def __init__(self, a: float, q: float, rng: np.random.Generator):
        if not 0 < a <= 1:
            raise ValueError("amplitude a must lie in (0, 1]")
        super().__init__([a], [q], rng)
        self.a = float(a)
        self.q = float(q)

    def certified_profile(self) -> MixingProfile:
        if self.q == 0.0:
            raise ValueError("q = 0 gives a frozen chain with no decaying envelope")
        if self.q == 0.5:
            return no_mixing()
        tau = -1.0 / np.log1p(-2.0 * self.q)
        lags = np.arange(1, _TABULATION_LENGTH + 1)
        values = self.a * (1.0 - 2.0 * self.q) ** lags
        return tabulated_profile(values, envelope=("geometric", self.a, float(tau)))


def next_noise(proc: NoiseProcess) -> float:
    return proc.step()


def certified_profile(proc: NoiseProcess) -> MixingProfile:
    return proc.certified_profile()


def conditional_mean_oracle(proc: NoiseProcess, d: int) -> float:
    return proc.conditional_mean(d)


def dyadic_weights(r: float, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights w_k prop 2^(-r k) (normalized) and flip probs q_k = 2^(-k-1)."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    k = np.arange(1, levels + 1)
    w = 2.0 ** (-r * k)
    return w / w.sum(), 2.0 ** (-(k + 1).astype(np.float64))


def algebraic_envelope_constant(weights, flip_probs, r: float) -> float:
    """Explicit C with sum_k w_k (1-2q_k)^d <= C d^-r for all real d >= 1.

    Uses sup_d d^r x^d = (r / (e ln(1/x)))^r per chain.
    """
    w = np.asarray(weights, dtype=np.float64)
    q = np.asarray(flip_probs, dtype=np.float64)
    m = -np.log1p(-2.0 * q)
    return float(np.sum(w * (r / (np.e * m)) ** r))


def dyadic_superposed_process(r: float, levels: int,
                              rng: np.random.Generator) -> SuperposedChainsNoise:
    """Superposition on dyadic timescales whose envelope is algebraic of rate r."""
    w, q = dyadic_weights(r, levels)
    C = algebraic_envelope_constant(w, q, r)
    return SuperposedChainsNoise(w, q, rng, envelope=("algebraic", C, float(r)))


def make_noise(kind: str, params: dict, rng: np.random.Generator) -> NoiseProcess:
    """Build a noise process from a config-style description."""
    if kind in {"zero", "none"}:
        return ZeroNoise()
    if kind == "iid_gaussian":
        return IidGaussianNoise(rng)
    if kind in {"markov", "markov_two_state"}:
        return MarkovTwoStateNoise(float(params.get("a", 1.0)),
                                   float(params.get("q", 0.25)), rng)
    if kind in {"superposed", "superposed_chains"}:
        return SuperposedChainsNoise(params["w"], params["q"], rng)
    if kind in {"dyadic", "dyadic_superposed"}:
        return dyadic_superposed_process(float(params.get("r", 2.0)),
                                         int(params.get("K", 8)), rng)
    raise ValueError(f"unknown noise kind {kind!r}")


def write_noise_csv(path, eps) -> None:
    """Export a noise trace as CSV with columns t, epsilon."""
    eps = np.asarray(eps, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,epsilon\n")
        for t, e in enumerate(eps, start=1):
            fh.write(f"{t},{float(e)!r}\n")
