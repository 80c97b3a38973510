"""Log-loss forecasting game used to verify the confidence-sequence machinery.

An exponential-weights forecaster over the uniform prior on a centred ball
plays distributions against squared losses; its mixture log loss telescopes
through normalizing integrals, which we evaluate by adaptive quadrature with
tracked error bounds (dimension at most 3 -- this module is test-scale only,
the bandit algorithm itself never needs these integrals). The blocked
variant interleaves d independent forecasters so that each one sees only
feedback at least d rounds old.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernels
from .noise import MixingProfile

_REL_ERR_LIMIT = 1e-4


class QuadratureError(RuntimeError):
    """Raised when a normalizing integral's error estimate is too large."""


@dataclass(frozen=True, eq=False)
class QuadraticLossSum:
    """Accumulated squared losses as 0.5 t'At - b't + c with A = sum x x'."""

    A: np.ndarray
    b: np.ndarray
    c: float
    n: int

    @classmethod
    def zero(cls, p: int) -> "QuadraticLossSum":
        return cls(A=np.zeros((p, p)), b=np.zeros(p), c=0.0, n=0)

    def plus(self, x, y: float) -> "QuadraticLossSum":
        x = np.asarray(x, dtype=np.float64)
        return QuadraticLossSum(
            A=self.A + np.outer(x, x),
            b=self.b + y * x,
            c=self.c + 0.5 * y * y,
            n=self.n + 1,
        )

    def value(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        return float(0.5 * theta @ self.A @ theta - self.b @ theta + self.c)


def squared_loss(theta, x, y: float) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * float(theta @ x - y) ** 2


def _ball_log_volume(p: int, R: float) -> float:
    if p == 1:
        return math.log(2.0 * R)
    if p == 2:
        return math.log(math.pi) + 2.0 * math.log(R)
    if p == 3:
        return math.log(4.0 * math.pi / 3.0) + 3.0 * math.log(R)
    raise ValueError("quadrature engine supports p <= 3")


def _ball_minimum(acc: QuadraticLossSum, R: float) -> float:
    """Minimum of the accumulated quadratic over the ball of radius R."""
    p = len(acc.b)
    out = np.empty(p)
    status = kernels.constrained_ls(acc.A, acc.b, R, out,
                                    np.empty((p, p)), np.empty((p, p)), np.empty(p))
    if status != 0:
        raise QuadratureError("could not locate the quadratic's ball minimum")
    return acc.value(out)


def log_ball_integral(acc: QuadraticLossSum, R: float) -> tuple[float, float]:
    """log of int_ball exp(-q(theta)) dtheta and an error bound on the log.

    The quadratic is shifted by its ball minimum so the integrand lies in
    (0, 1]; p = 2 and 3 integrate in polar/spherical coordinates to keep the
    integrand smooth on a rectangle.
    """
    p = len(acc.b)
    if acc.n == 0:
        return _ball_log_volume(p, R), 0.0
    qmin = _ball_minimum(acc, R)
    A, b, c = acc.A, acc.b, acc.c - qmin
    if p == 1:
        a00, b0 = A[0, 0], b[0]

        def f(th):
            return math.exp(-(0.5 * a00 * th * th - b0 * th + c))

        val, err = integrate.quad(f, -R, R, epsabs=1e-300, epsrel=1e-10, limit=400)
    elif p == 2:
        a00, a01, a11 = A[0, 0], A[0, 1], A[1, 1]
        b0, b1 = b[0], b[1]

        def f(phi, rr):
            u = rr * math.cos(phi)
            v = rr * math.sin(phi)
            q = 0.5 * (a00 * u * u + 2.0 * a01 * u * v + a11 * v * v) \
                - b0 * u - b1 * v + c
            return rr * math.exp(-q)

        val, err = integrate.dblquad(f, 0.0, R, 0.0, 2.0 * math.pi,
                                     epsabs=1e-300, epsrel=1e-9)
    else:
        Af = A
        bf = b

        def f(phi, psi, rr):
            sp = math.sin(psi)
            u = rr * sp * math.cos(phi)
            v = rr * sp * math.sin(phi)
            w = rr * math.cos(psi)
            q = 0.5 * (Af[0, 0] * u * u + Af[1, 1] * v * v + Af[2, 2] * w * w
                       + 2.0 * (Af[0, 1] * u * v + Af[0, 2] * u * w + Af[1, 2] * v * w)) \
                - bf[0] * u - bf[1] * v - bf[2] * w + c
            return rr * rr * sp * math.exp(-q)

        val, err = integrate.tplquad(f, 0.0, R, 0.0, math.pi, 0.0, 2.0 * math.pi,
                                     epsabs=1e-300, epsrel=1e-8)
    if not val > 0 or err / val > _REL_ERR_LIMIT:
        raise QuadratureError(
            f"normalizing integral error estimate {err!r} too large for value {val!r}")
    return math.log(val) - qmin, err / val


@dataclass(frozen=True, eq=False)
class ForecasterState:
    """Exponential-weights posterior over the ball of radius B+1.

    The density is proportional to exp(-accumulated(theta)) on the prior
    support; log_z caches the current normalizing integral.
    """

    prior_radius: float
    accumulated: QuadraticLossSum
    log_z: float
    log_z_err: float
    block_index: int = 1

    @classmethod
    def fresh(cls, p: int, B: float, block_index: int = 1) -> "ForecasterState":
        R = B + 1.0
        return cls(prior_radius=R,
                   accumulated=QuadraticLossSum.zero(p),
                   log_z=_ball_log_volume(p, R),
                   log_z_err=0.0,
                   block_index=block_index)


def mixture_log_loss(state: ForecasterState, x, y: float
                     ) -> tuple[float, float, ForecasterState]:
    """Log loss of the current mixture on one squared loss, with error bound.

    Telescopes as the log ratio of consecutive normalizing integrals; the
    returned state has the loss absorbed.
    """
    new_acc = state.accumulated.plus(x, y)
    log_z_new, err_new = log_ball_integral(new_acc, state.prior_radius)
    loss = state.log_z - log_z_new
    err = state.log_z_err + err_new
    new_state = replace(state, accumulated=new_acc,
                        log_z=log_z_new, log_z_err=err_new)
    return loss, err, new_state


@dataclass(eq=False)
class LogLossLedger:
    """Per-round record of a forecasting run over one trajectory."""

    xs: np.ndarray
    ys: np.ndarray
    d: int
    B: float
    block_index: np.ndarray
    log_losses: np.ndarray
    quad_errors: np.ndarray
    loss_at_star: np.ndarray
    theta_star: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.ys)

    @property
    def total_log_loss(self) -> float:
        return float(self.log_losses.sum())

    @property
    def total_quad_error(self) -> float:
        return float(self.quad_errors.sum())

    def drift(self) -> np.ndarray:
        """Cumulative sum of per-round loss_at_star - log_loss."""
        return np.cumsum(self.loss_at_star - self.log_losses)

    def blocked_sums(self) -> dict[int, np.ndarray]:
        """Partial sums of the per-round differences within each block."""
        out = {}
        diff = self.loss_at_star - self.log_losses
        for i in range(1, self.d + 1):
            out[i] = np.cumsum(diff[self.block_index == i])
        return out


def _run_forecasters(xs, ys, d: int, B: float, theta_star) -> LogLossLedger:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 2 or len(xs) != len(ys):
        raise ValueError("xs must be (t, p) with matching ys")
    t, p = xs.shape
    states = [ForecasterState.fresh(p, B, block_index=i + 1) for i in range(d)]
    log_losses = np.empty(t)
    quad_errors = np.empty(t)
    block_index = np.empty(t, dtype=np.int64)
    loss_at_star = np.full(t, np.nan)
    for s in range(t):
        i = s % d
        loss, err, states[i] = mixture_log_loss(states[i], xs[s], ys[s])
        log_losses[s] = loss
        quad_errors[s] = err
        block_index[s] = i + 1
        if theta_star is not None:
            loss_at_star[s] = squared_loss(theta_star, xs[s], ys[s])
    return LogLossLedger(xs=xs, ys=ys, d=d, B=float(B),
                         block_index=block_index, log_losses=log_losses,
                         quad_errors=quad_errors, loss_at_star=loss_at_star,
                         theta_star=None if theta_star is None
                         else np.asarray(theta_star, dtype=np.float64))


def run_undelayed(xs, ys, B: float, theta_star=None) -> LogLossLedger:
    """Single forecaster with immediate feedback (the d = 1 game)."""
    return _run_forecasters(xs, ys, 1, B, theta_star)


def blocked_forecaster(xs, ys, d: int, B: float, theta_star=None) -> LogLossLedger:
    """d interleaved forecasters; the one acting at round s has absorbed
    exactly its own losses from rounds <= s - d."""
    if d < 1:
        raise ValueError("delay d must be >= 1")
    return _run_forecasters(xs, ys, d, B, theta_star)


def ewa_regret(xs, ys, comparator, B: float) -> float:
    """Total log loss of the undelayed forecaster minus the comparator's loss."""
    comparator = np.asarray(comparator, dtype=np.float64)
    if float(np.linalg.norm(comparator)) > B * (1 + 1e-12):
        raise ValueError("comparator must lie in the ball of radius B")
    ledger = run_undelayed(xs, ys, B)
    comp = sum(squared_loss(comparator, x, y) for x, y in zip(ledger.xs, ledger.ys))
    return ledger.total_log_loss - comp


def blocked_regret(ledger: LogLossLedger, comparator) -> float:
    comp = sum(squared_loss(comparator, x, y) for x, y in zip(ledger.xs, ledger.ys))
    return ledger.total_log_loss - comp


def ewa_regret_bound(t: int, B: float, p: int) -> float:
    """Regret ceiling of the uniform-prior forecaster after t rounds."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return 0.5 * p * math.log((B + 1.0) ** 2 * math.e * max(p, t) / p)


def blocked_regret_bound(t: int, d: int, B: float, p: int) -> float:
    """Regret ceiling of the d-block forecaster after t rounds."""
    if t < 1 or d < 1:
        raise ValueError("t and d must be >= 1")
    dp = d * p
    return 0.5 * dp * math.log((B + 1.0) ** 2 * math.e * max(dp, t + d) / dp)


def block_action_counts(t: int, d: int) -> list[int]:
    """How many rounds each of the d forecasters acts within t rounds."""
    return [math.ceil((t - i + 1) / d) for i in range(1, d + 1)]


def decomposition_check(ledger: LogLossLedger, theta_star, theta_bar) -> float:
    """Residual of the excess-loss decomposition; zero in exact arithmetic."""
    ls = np.array([squared_loss(theta_star, x, y)
                   for x, y in zip(ledger.xs, ledger.ys)])
    lb = np.array([squared_loss(theta_bar, x, y)
                   for x, y in zip(ledger.xs, ledger.ys)])
    lhs = ls.sum() - lb.sum()
    regret_term = ledger.total_log_loss - lb.sum()
    drift_term = (ls - ledger.log_losses).sum()
    return float(abs(lhs - (regret_term + drift_term)))


def drift_bound(t: int, d: int, phi_d: float, B: float, delta: float,
                mean_shift_mode: str = "B_plus_1") -> float:
    """Anytime ceiling on the cumulative loss drift at the true parameter."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    shift = {"B": B, "B_plus_1": B + 1.0, "twoB_plus_1": 2.0 * B + 1.0}[mean_shift_mode]
    return t * phi_d * shift + d * math.log(d / delta)


def drift_exceedance(ledger: LogLossLedger, profile: MixingProfile, d: int,
                     B: float, delta: float,
                     mean_shift_mode: str = "B_plus_1") -> np.ndarray:
    """Per-t flags marking rounds where the drift statistic exceeds its bound."""
    stat = ledger.drift()
    ts = np.arange(1, len(ledger) + 1)
    phi_d = profile.phi(d)
    bounds = np.array([drift_bound(t, d, phi_d, B, delta, mean_shift_mode)
                       for t in ts])
    return stat > bounds


def write_ledger_csv(ledger: LogLossLedger, path) -> None:
    """Export: s, logloss, loss_at_star, D_s, block_index, quadrature_error."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("s,logloss,loss_at_star,D_s,block_index,quadrature_error\n")
        for s in range(len(ledger)):
            d_s = ledger.loss_at_star[s] - ledger.log_losses[s]
            fh.write(f"{s + 1},{float(ledger.log_losses[s])!r},"
                     f"{float(ledger.loss_at_star[s])!r},{float(d_s)!r},"
                     f"{int(ledger.block_index[s])},"
                     f"{float(ledger.quad_errors[s])!r}\n")
