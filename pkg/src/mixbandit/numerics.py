"""Dense SPD linear algebra and the norm-constrained least-squares solver.

State is value-semantic: updates return new objects and never mutate their
inputs, so one instance per replication is safe under parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


class ConvergenceError(RuntimeError):
    """Raised when the constrained solver's bisection fails to converge."""


def _as_vector(x, p: int) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.shape != (p,):
        raise ValueError(f"expected a vector of length {p}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries in input vector")
    return v


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """Symmetric positive-definite matrix held as a lower Cholesky factor."""

    factor: np.ndarray

    def __post_init__(self):
        L = self.factor
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError("factor must be square")
        if not np.all(np.diag(L) > 0):
            raise ValueError("factor diagonal must be strictly positive")

    @property
    def dim(self) -> int:
        return self.factor.shape[0]

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "SpdMatrix":
        if scale <= 0:
            raise ValueError("scale must be positive")
        return cls(np.eye(dim) * np.sqrt(scale))

    @classmethod
    def from_dense(cls, A) -> "SpdMatrix":
        A = np.ascontiguousarray(A, dtype=np.float64)
        L = np.empty_like(A)
        if kernels.chol_factor(A, L) != 0:
            raise ValueError("matrix is not positive definite")
        return cls(L)

    def dense(self) -> np.ndarray:
        return self.factor @ self.factor.T

    def updated(self, x) -> "SpdMatrix":
        """Return the factor of V + x xt."""
        x = _as_vector(x, self.dim)
        L = self.factor.copy()
        kernels.chol_update(L, x.copy())
        return SpdMatrix(L)

    def quad_form_inv(self, x) -> float:
        x = _as_vector(x, self.dim)
        return float(kernels.quad_form_inv(self.factor, x, np.empty(self.dim)))

    def quad_form(self, v) -> float:
        v = _as_vector(v, self.dim)
        return float(kernels.quad_form(self.factor, v))

    def solve(self, b) -> np.ndarray:
        b = _as_vector(b, self.dim)
        out = np.empty(self.dim)
        kernels.spd_solve(self.factor, b, np.empty(self.dim), out)
        return out

    def logdet(self) -> float:
        return float(kernels.logdet(self.factor))


@dataclass(frozen=True, eq=False)
class DesignStats:
    """Running regression statistics: ridged Gram matrix and cross moments.

    ``gram`` holds V = sum x xt + ridge*I in factored form; ``gram_raw`` is
    the unridged sum kept dense for the constrained solver's ridge path.
    """

    gram: SpdMatrix
    gram_raw: np.ndarray
    cross: np.ndarray
    count: int
    ridge: float

    @classmethod
    def empty(cls, dim: int, ridge: float) -> "DesignStats":
        if ridge <= 0:
            raise ValueError("ridge must be positive")
        return cls(
            gram=SpdMatrix.identity(dim, ridge),
            gram_raw=np.zeros((dim, dim)),
            cross=np.zeros(dim),
            count=0,
            ridge=float(ridge),
        )

    @property
    def dim(self) -> int:
        return self.gram.dim


def rank_one_update(stats: DesignStats, x, y: float) -> DesignStats:
    """Absorb one observation pair into the statistics."""
    x = _as_vector(x, stats.dim)
    y = float(y)
    if not np.isfinite(y):
        raise ValueError("non-finite reward")
    return DesignStats(
        gram=stats.gram.updated(x),
        gram_raw=stats.gram_raw + np.outer(x, x),
        cross=stats.cross + y * x,
        count=stats.count + 1,
        ridge=stats.ridge,
    )


def quad_form_inv(m: SpdMatrix, x) -> float:
    """xt V^-1 x for a factored SPD matrix."""
    return m.quad_form_inv(x)


def constrained_least_squares(stats: DesignStats, radius_B: float) -> np.ndarray:
    """Least-squares estimate constrained to the centred ball of radius B.

    Minimizes the unridged squared error over the ball; interior solutions
    are returned directly, boundary solutions via multiplier bisection.
    """
    if radius_B <= 0:
        raise ValueError("radius_B must be positive")
    p = stats.dim
    out = np.empty(p)
    status = kernels.constrained_ls(
        stats.gram_raw, stats.cross, float(radius_B), out,
        np.empty((p, p)), np.empty((p, p)), np.empty(p))
    if status != 0:
        raise ConvergenceError(
            "constrained least-squares bisection did not converge in 200 "
            "iterations (ill-conditioned statistics)")
    return out
