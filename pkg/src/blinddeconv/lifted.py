"""Lifted measurement map Z -> {b_l^* Z a_l} restricted to rank-one arguments.

With b_l^* the l-th row of B and a_l^* the l-th row of A,

    A(h x^*)      = (Bh) * conj(Ax)
    A^*(z) x      = B^H (z * Ax)
    A^*(z)^H h    = A^H (conj(z) * Bh)

so nothing of size K x N is ever formed outside the dense test oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import SubspaceOperators
from .errors import DimensionError
from .numeric import RngStream, sample_complex_gaussian

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class Truth:
    h0: np.ndarray
    x0: np.ndarray

    @property
    def d0(self) -> float:
        return float(np.linalg.norm(self.h0) * np.linalg.norm(self.x0))


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    sigma: float = 0.0
    truth: Truth | None = None
    mu_h2: float | None = None

    def __post_init__(self):
        if self.truth is not None and not self.truth.d0 > 0:
            raise DimensionError("ground truth must have d0 > 0")


def _vec(v, n, name):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{name}: expected a vector of length {n}, got shape {v.shape}")
    return v


class LiftedOperator:
    def __init__(self, ops: SubspaceOperators):
        self.ops = ops

    @property
    def shape(self):
        return self.ops.L, self.ops.K, self.ops.N

    def forward_rank1(self, h, x) -> np.ndarray:
        L, K, N = self.shape
        h = _vec(h, K, "h")
        x = _vec(x, N, "x")
        return self.ops.B.apply(h) * np.conj(self.ops.A.apply(x))

    def adjoint_apply_right(self, z, x) -> np.ndarray:
        """A^*(z) x."""
        L, K, N = self.shape
        z = _vec(z, L, "z")
        x = _vec(x, N, "x")
        return self.ops.B.adjoint(z * self.ops.A.apply(x))

    def adjoint_apply_left(self, z, h) -> np.ndarray:
        """A^*(z)^H h."""
        L, K, N = self.shape
        z = _vec(z, L, "z")
        h = _vec(h, K, "h")
        return self.ops.A.adjoint(np.conj(z) * self.ops.B.apply(h))

    def adjoint_power_step(self, y, v, u):
        """Both matvecs of one power sweep on A^*(y): (A^*(y) v, A^*(y)^H u)."""
        return self.adjoint_apply_right(y, v), self.adjoint_apply_left(y, u)

    def dense_lifted_matrix(self) -> np.ndarray:
        """L x KN matrix M with M @ Z.ravel() == A(Z) (row-major vec)."""
        L, K, N = self.shape
        if K * N > DENSE_LIMIT:
            raise DimensionError(f"K*N = {K * N} exceeds dense oracle limit {DENSE_LIMIT}")
        Bm = self.ops.B.matrix()
        Am = self.ops.A.matrix()
        return (Bm[:, :, None] * np.conj(Am)[:, None, :]).reshape(L, K * N)

    def dense_adjoint(self, z) -> np.ndarray:
        """A^*(z) as an explicit K x N matrix (small cases only)."""
        L, K, N = self.shape
        z = _vec(z, L, "z")
        return (self.dense_lifted_matrix().conj().T @ z).reshape(K, N)


def add_noise(y0, sigma: float, rng: RngStream, mode: str = "relative", d0: float | None = None):
    """Return (y0 + e, e).

    ``relative``: e = sigma * ||y0|| * w / ||w|| with w standard complex Gaussian.
    ``absolute``: e ~ CN(0, sigma^2 d0^2 / L I); requires d0.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    y0 = np.asarray(y0, dtype=complex)
    L = y0.shape[0]
    if sigma == 0:
        return y0.copy(), np.zeros_like(y0)
    w = sample_complex_gaussian(rng, L)
    if mode == "relative":
        e = sigma * np.linalg.norm(y0) * w / np.linalg.norm(w)
    elif mode == "absolute":
        if d0 is None:
            raise ValueError("absolute noise needs d0")
        e = w * (sigma * d0 / np.sqrt(L))
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    return y0 + e, e
