"""Anytime-valid ellipsoidal confidence sequence for the delayed setting.

The set after t rounds is centred at the ball-constrained least-squares
estimate, shaped by the ridged Gram matrix V_t, with a closed-form squared
radius that grows with the horizon, the delay, and the mixing envelope at
the chosen delay. A d-round ingestion lag makes the live statistics at round
t equal the (t-d)-prefix, which is what the arm-selection rule consumes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .noise import MixingProfile, no_mixing
from .numerics import DesignStats, constrained_least_squares, rank_one_update, SpdMatrix

_MEAN_SHIFT_MODES = ("B", "B_plus_1", "twoB_plus_1")


@dataclass(frozen=True, eq=False)
class RadiusParams:
    """Parameters of the squared-radius formula.

    ``lam`` defaults to 1/B^2. ``mean_shift_mode`` selects the constant
    multiplying the t*phi_d drift term: B, B+1 (default), or 2B+1.
    """

    B: float
    p: int
    d: int = 1
    delta: float = 0.05
    lam: Optional[float] = None
    profile: MixingProfile = field(default_factory=no_mixing)
    mean_shift_mode: str = "B_plus_1"

    def __post_init__(self):
        if self.B <= 0:
            raise ValueError("B must be positive")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.d < 1:
            raise ValueError("delay d must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.lam is None:
            object.__setattr__(self, "lam", 1.0 / self.B**2)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.mean_shift_mode not in _MEAN_SHIFT_MODES:
            raise ValueError(f"mean_shift_mode must be one of {_MEAN_SHIFT_MODES}")

    @property
    def mean_shift(self) -> float:
        if self.mean_shift_mode == "B":
            return self.B
        if self.mean_shift_mode == "B_plus_1":
            return self.B + 1.0
        return 2.0 * self.B + 1.0

    @property
    def phi_d(self) -> float:
        return self.profile.phi(self.d)


def radius_sq(params: RadiusParams, t: int) -> float:
    """Squared radius of the confidence ellipsoid after t absorbed rounds."""
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    return float(kernels.radius_sq_formula(
        t, params.d, params.p, params.B, params.lam, params.delta,
        params.phi_d, params.mean_shift))


@dataclass(frozen=True, eq=False)
class EllipsoidSet:
    """Confidence set {norm(theta) <= B} inter {|theta - center|_V^2 <= radius_sq}."""

    center: np.ndarray
    shape: SpdMatrix
    radius_sq: float
    t: int


def build_set(stats: DesignStats, params: RadiusParams) -> EllipsoidSet:
    """Confidence set from the absorbed statistics; needs count >= 1."""
    if stats.count < 1:
        raise ValueError("build_set needs at least one absorbed observation")
    center = constrained_least_squares(stats, params.B)
    return EllipsoidSet(
        center=center,
        shape=stats.gram,
        radius_sq=radius_sq(params, stats.count),
        t=stats.count,
    )


def membership(cset: EllipsoidSet, theta, B: float) -> bool:
    """Whether theta lies in the ball of radius B and inside the ellipsoid."""
    theta = np.asarray(theta, dtype=np.float64)
    if float(np.linalg.norm(theta)) > B:
        return False
    return cset.shape.quad_form(theta - cset.center) <= cset.radius_sq


def ucb_value(cset: EllipsoidSet, x) -> float:
    """Exact maximum of <theta, x> over the pure ellipsoid.

    The ball constraint is deliberately dropped: the closed form
    <center, x> + sqrt(radius_sq) * |x|_{V^-1} is the relaxation the regret
    analysis works with, and it upper-bounds the intersection maximum.
    """
    x = np.asarray(x, dtype=np.float64)
    bonus = np.sqrt(cset.radius_sq) * np.sqrt(cset.shape.quad_form_inv(x))
    return float(cset.center @ x + bonus)


class DelayedDesign:
    """Design statistics fed with a lag of d rounds.

    After rounds 1..t-1 have been observed, the live statistics cover
    exactly rounds 1..t-d (what the selection rule at round t may read);
    the most recent d-1 pairs wait in a queue. With d = 1 every pair is
    ingested immediately.
    """

    def __init__(self, params: RadiusParams):
        self.params = params
        self.stats = DesignStats.empty(params.p, params.lam)
        self.pending: deque = deque()

    def observe(self, x, y: float) -> None:
        self.pending.append((np.asarray(x, dtype=np.float64), float(y)))
        while len(self.pending) >= self.params.d:
            xs, ys = self.pending.popleft()
            self.stats = rank_one_update(self.stats, xs, ys)

    @property
    def ready(self) -> bool:
        return self.stats.count >= 1

    def view(self) -> EllipsoidSet:
        return build_set(self.stats, self.params)


def delayed_view(buffer: Sequence, params: RadiusParams, t: int) -> EllipsoidSet:
    """Set available at round t: built from exactly the first t-d pairs."""
    if t <= params.d:
        raise ValueError("t must exceed the delay d")
    need = t - params.d
    if len(buffer) < need:
        raise ValueError("buffer holds fewer than t-d observations")
    design = DelayedDesign(params)
    for s in range(min(t - 1, len(buffer))):
        design.observe(*buffer[s])
    while design.stats.count < need:
        xs, ys = design.pending.popleft()
        design.stats = rank_one_update(design.stats, xs, ys)
    return design.view()


def iid_baseline_radius_sq(stats: DesignStats, B: float, lam: float,
                           delta: float) -> float:
    """Comparison radius for the independent-noise ridge baseline."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    p = stats.dim
    return float(stats.gram.logdet() - p * np.log(lam)
                 + lam * B**2 + 2.0 * np.log(1.0 / delta))


def write_confidence_csv(path, beta_sq, coverage, center_norm) -> None:
    """Per-round confidence diagnostics: t, beta_sq, coverage_indicator, center_norm."""
    beta_sq = np.asarray(beta_sq, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,beta_sq,coverage_indicator,center_norm\n")
        for t in range(len(beta_sq)):
            fh.write(f"{t + 1},{float(beta_sq[t])!r},{int(coverage[t])},"
                     f"{float(center_norm[t])!r}\n")
