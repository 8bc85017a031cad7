"""Loss, penalty, Wirtinger gradients and diagnostics.

All gradients are derivatives with respect to the conjugate variable, so a
descent step is ``h - eta * gh`` and the directional derivative of a real
function along a complex direction D is ``2 Re(D^T conj(g))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import LinearMap, SubspaceOperators
from .errors import DegenerateInputError, NumericalError, SamplingError
from .lifted import LiftedOperator, Truth
from .numeric import RngStream, sample_complex_gaussian


@dataclass(frozen=True)
class RegParams:
    """Penalty weight rho, scale estimate d, incoherence budget mu^2, radius eps."""

    rho: float
    d: float
    mu2: float
    eps: float = 1.0 / 15.0

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError("rho must be >= 0")
        if not self.d > 0:
            raise ValueError("d must be > 0")
        if not self.mu2 > 0:
            raise ValueError("mu2 must be > 0")
        if not 0 < self.eps <= 1.0 / 15.0:
            raise ValueError("eps must lie in (0, 1/15]")

    @property
    def mu(self) -> float:
        return math.sqrt(self.mu2)


def default_mu2(L: int, K: int, N: int) -> float:
    """Squared incoherence budget mu = 6 sqrt(L/(K+N)) / log L."""
    return 36.0 * L / ((K + N) * math.log(L) ** 2)


def default_reg_params(d: float, L: int, K: int, N: int, eps: float = 1.0 / 15.0) -> RegParams:
    return RegParams(rho=d * d / 100.0, d=d, mu2=default_mu2(L, K, N), eps=eps)


class Iterate:
    """Candidate (h, x) with cached Bh and Ax."""

    __slots__ = ("h", "x", "Bh", "Ax")

    def __init__(self, h, x, Bh, Ax):
        self.h, self.x, self.Bh, self.Ax = h, x, Bh, Ax

    @classmethod
    def from_pair(cls, h, x, ops: SubspaceOperators) -> "Iterate":
        h = np.asarray(h, dtype=complex)
        x = np.asarray(x, dtype=complex)
        return cls(h, x, ops.B.apply(h), ops.A.apply(x))

    def refreshed(self, ops: SubspaceOperators) -> "Iterate":
        return Iterate.from_pair(self.h, self.x, ops)


def G0(z):
    return np.maximum(z - 1.0, 0.0) ** 2


def dG0(z):
    return 2.0 * np.maximum(z - 1.0, 0.0)


def residual(it: Iterate, y) -> np.ndarray:
    return it.Bh * np.conj(it.Ax) - y


def loss_F(it: Iterate, y) -> float:
    r = residual(it, y)
    return float(np.vdot(r, r).real)


def _penalty_args(it: Iterate, p: RegParams):
    L = it.Bh.shape[0]
    zh = float(np.vdot(it.h, it.h).real) / (2 * p.d)
    zx = float(np.vdot(it.x, it.x).real) / (2 * p.d)
    zl = L * np.abs(it.Bh) ** 2 / (8 * p.d * p.mu2)
    return zh, zx, zl


def penalty_G(it: Iterate, p: RegParams) -> float:
    if p.rho == 0:
        return 0.0
    zh, zx, zl = _penalty_args(it, p)
    return float(p.rho * (G0(zh) + G0(zx) + np.sum(G0(zl))))


def ftilde(it: Iterate, y, p: RegParams | None) -> float:
    f = loss_F(it, y)
    return f if p is None else f + penalty_G(it, p)


def grad_F(it: Iterate, y, ops: SubspaceOperators):
    r = residual(it, y)
    gh = ops.B.adjoint(r * it.Ax)
    gx = ops.A.adjoint(np.conj(r) * it.Bh)
    return gh, gx


def grad_G(it: Iterate, p: RegParams, B: LinearMap):
    if p.rho == 0:
        return np.zeros_like(it.h), np.zeros_like(it.x)
    zh, zx, zl = _penalty_args(it, p)
    L = it.Bh.shape[0]
    c = p.rho / (2 * p.d)
    gh = c * dG0(zh) * it.h
    s = dG0(zl)
    if np.any(s):
        gh = gh + c * (L / (4 * p.mu2)) * B.adjoint(s * it.Bh)
    gx = c * dG0(zx) * it.x
    return gh, gx


def grad_ftilde(it: Iterate, y, ops: SubspaceOperators, p: RegParams | None):
    gh, gx = grad_F(it, y, ops)
    if p is not None:
        ghg, gxg = grad_G(it, p, ops.B)
        gh, gx = gh + ghg, gx + gxg
    return gh, gx


def delta_metric(h, x, truth: Truth) -> float:
    """||h x^* - h0 x0^*||_F / d0 through inner products only."""
    d0 = truth.d0
    nh = float(np.vdot(h, h).real)
    nx = float(np.vdot(x, x).real)
    cross = (np.vdot(h, truth.h0) * np.vdot(truth.x0, x)).real
    rad = nh * nx + d0 * d0 - 2.0 * cross
    if rad < 0:
        if rad < -1e-12 * d0 * d0:
            raise NumericalError(f"negative radicand {rad:.3e} in relative error")
        rad = 0.0
    return math.sqrt(rad) / d0


def incoherence_mu2(h, B: LinearMap) -> float:
    h = np.asarray(h, dtype=complex)
    nh = float(np.vdot(h, h).real)
    if nh == 0:
        raise DegenerateInputError("incoherence of the zero vector is undefined")
    Bh = B.apply(h)
    return float(B.shape[0] * np.max(np.abs(Bh)) ** 2 / nh)


def membership(it: Iterate, p: RegParams, truth: Truth):
    """(in N_d0, in N_mu, in N_eps); boundaries are closed."""
    d0 = truth.d0
    L = it.Bh.shape[0]
    r = 2 * math.sqrt(d0)
    in_d0 = bool(np.linalg.norm(it.h) <= r and np.linalg.norm(it.x) <= r)
    in_mu = bool(math.sqrt(L) * np.max(np.abs(it.Bh)) <= 4 * math.sqrt(d0) * p.mu)
    in_eps = bool(delta_metric(it.h, it.x, truth) <= p.eps)
    return in_d0, in_mu, in_eps


@dataclass(frozen=True)
class Metrics:
    delta: float
    f_val: float
    g_val: float
    ftilde_val: float
    grad_norm: float
    in_Nd0: bool | None = None
    in_Nmu: bool | None = None
    in_Neps: bool | None = None


def metrics(it: Iterate, y, ops: SubspaceOperators, p: RegParams, truth: Truth | None = None,
            regularized: bool = True) -> Metrics:
    f = loss_F(it, y)
    g = penalty_G(it, p) if regularized else 0.0
    gh, gx = grad_ftilde(it, y, ops, p if regularized else None)
    gn = math.sqrt(float(np.vdot(gh, gh).real + np.vdot(gx, gx).real))
    if truth is None:
        return Metrics(float("nan"), f, g, f + g, gn)
    memb = membership(it, p, truth)
    return Metrics(delta_metric(it.h, it.x, truth), f, g, f + g, gn, *memb)


def local_isometry_ratio(h, x, truth: Truth, lifted: LiftedOperator) -> float:
    """||A(h x^* - h0 x0^*)||^2 / ||h x^* - h0 x0^*||_F^2."""
    diff = lifted.forward_rank1(h, x) - lifted.forward_rank1(truth.h0, truth.x0)
    den = (delta_metric(h, x, truth) * truth.d0) ** 2
    if den == 0:
        raise DegenerateInputError("ratio undefined at the ground truth")
    return float(np.vdot(diff, diff).real) / den


def empirical_rip_ratio(truth: Truth, ops: SubspaceOperators, p: RegParams, samples: int,
                        rng: RngStream, max_rejects: int = 1000) -> list[float]:
    """Ratios ||A(h x^* - h0 x0^*)||^2 / ||h x^* - h0 x0^*||_F^2 over the basin.

    Points are h0 + s g_h, x0 + s g_x with s drawn uniformly below a radius
    that puts a typical draw at relative error eps/2; draws outside
    N_d0, N_mu or N_eps (or exactly at the truth) are rejected.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lifted = LiftedOperator(ops)
    K, N = ops.K, ops.N
    d0 = truth.d0
    s_max = p.eps * math.sqrt(d0 / (K + N))
    out: list[float] = []
    rejects = 0
    while len(out) < samples:
        s = s_max * rng.generator.uniform(0.05, 1.0)
        h = truth.h0 + s * sample_complex_gaussian(rng, K)
        x = truth.x0 + s * sample_complex_gaussian(rng, N)
        it = Iterate.from_pair(h, x, ops)
        delta = delta_metric(h, x, truth)
        if delta > 0 and all(membership(it, p, truth)):
            out.append(local_isometry_ratio(h, x, truth, lifted))
            rejects = 0
        else:
            rejects += 1
            if rejects >= max_rejects:
                raise SamplingError(f"{max_rejects} consecutive rejected draws")
    return out
