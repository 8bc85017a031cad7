"""Spectral initialization: power method on A^*(y) and incoherence projection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import LinearMap
from .errors import DegenerateInputError
from .lifted import LiftedOperator
from .numeric import RngStream, sample_complex_gaussian


@dataclass
class PowerResult:
    d: float
    h_hat: np.ndarray
    x_hat: np.ndarray
    history: list[float] = field(default_factory=list)


def power_method(y, lifted: LiftedOperator, iters: int, rng: RngStream) -> PowerResult:
    """Leading singular triple of M = A^*(y) using only matvecs with M and M^H.

    Each sweep does v <- M^H u / ||.||, u <- M v / ||.||; the recorded value
    ||M v|| is the Rayleigh estimate of the top singular value and is
    non-decreasing over sweeps.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    y = np.asarray(y, dtype=complex)
    if not np.any(y):
        raise DegenerateInputError("power method on A^*(0)")
    L, K, N = lifted.shape
    u = sample_complex_gaussian(rng, K)
    u /= np.linalg.norm(u)
    history = []
    for _ in range(iters):
        v = lifted.adjoint_apply_left(y, u)
        nv = np.linalg.norm(v)
        if nv == 0:
            raise DegenerateInputError("A^*(y) annihilated the power iterate")
        v /= nv
        u = lifted.adjoint_apply_right(y, v)
        d = float(np.linalg.norm(u))
        if d == 0:
            raise DegenerateInputError("A^*(y) annihilated the power iterate")
        u /= d
        history.append(d)
    return PowerResult(history[-1], u, v, history)


@dataclass
class ProjectionResult:
    z: np.ndarray
    sweeps: int
    converged: bool


def _clip(w, cap):
    mag = np.abs(w)
    over = mag > cap
    if not np.any(over):
        return w
    out = w.copy()
    out[over] *= cap / mag[over]
    return out


def project_incoherence(z0, bound: float, B: LinearMap, tol: float = 1e-9,
                        max_iters: int = 500) -> ProjectionResult:
    """Euclidean projection of z0 onto {z : sqrt(L) ||Bz||_inf <= bound}.

    B is an isometry, so the problem is solved in C^L as the projection of
    Bz0 onto (range B) intersected with the entrywise magnitude box, by
    Dykstra's alternating projections. If the last iterate still violates the
    box by roundoff it is shrunk radially, which keeps it feasible.
    """
    if not bound > 0:
        raise ValueError("bound must be positive")
    z0 = np.asarray(z0, dtype=complex)
    L = B.shape[0]
    cap = bound / math.sqrt(L)
    w0 = B.apply(z0)
    if np.max(np.abs(w0)) <= cap:
        return ProjectionResult(z0.copy(), 0, True)

    scale = max(np.linalg.norm(z0), np.finfo(float).tiny)
    w = w0
    p = np.zeros_like(w0)
    q = np.zeros_like(w0)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        a = _clip(w + p, cap)
        p = w + p - a
        z = B.adjoint(a + q)
        b = B.apply(z)
        q = a + q - b
        step = np.linalg.norm(b - w)
        w = b
        if step < tol * scale:
            converged = True
            break
    z = B.adjoint(w)
    peak = math.sqrt(L) * np.max(np.abs(B.apply(z)))
    if peak > bound:
        z = z * (bound / peak)
    return ProjectionResult(z, sweeps, converged)


@dataclass
class InitResult:
    u0: np.ndarray
    v0: np.ndarray
    d: float
    power_iters: int
    projection_applied: bool
    projection_converged: bool = True


def initialize(y, lifted: LiftedOperator, mu2: float, rng: RngStream, power_iters: int = 50,
               skip_projection: bool = False, tol: float = 1e-9, max_iters: int = 500) -> InitResult:
    """Spectral start (u0, v0) = (P(sqrt(d) h_hat), sqrt(d) x_hat) and scale estimate d.

    P projects onto sqrt(L) ||Bz||_inf <= 2 sqrt(d) mu; ``skip_projection``
    returns sqrt(d) h_hat unchanged.
    """
    pm = power_method(y, lifted, power_iters, rng)
    d = pm.d
    v0 = math.sqrt(d) * pm.x_hat
    u0 = math.sqrt(d) * pm.h_hat
    if skip_projection:
        return InitResult(u0, v0, d, power_iters, False)
    res = project_incoherence(u0, 2 * math.sqrt(d * mu2), lifted.ops.B, tol, max_iters)
    return InitResult(res.z, v0, d, power_iters, True, res.converged)
