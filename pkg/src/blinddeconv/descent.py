"""Wirtinger gradient descent on F + G (regGrad) or on F alone (Grad)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import SubspaceOperators
from .lifted import LiftedOperator, Truth
from .objective import (
    Iterate,
    RegParams,
    delta_metric,
    grad_ftilde,
    loss_F,
    penalty_G,
)
from .spectral import InitResult

SUCCESS_THRESHOLD = 1e-2


@dataclass(frozen=True)
class Backtracking:
    """Armijo backtracking: largest eta0 * shrink^k with
    F(z - eta g) <= F(z) - c1 * eta * ||g||^2.

    ``eta0=None`` means 1/d, the inverse of the curvature of F along h at a
    balanced point near the truth.
    """

    eta0: float | None = None
    shrink: float = 0.5
    c1: float = 0.5
    max_halvings: int = 50

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")
        if self.eta0 is not None and not self.eta0 > 0:
            raise ValueError("eta0 must be positive")


@dataclass(frozen=True)
class SolveOptions:
    stepsize: float | Backtracking = field(default_factory=Backtracking)
    max_iters: int = 5000
    tol_grad: float | None = None  # None -> 1e-10 * d^2
    tol_obj: float = 1e-12
    window: int = 10
    regularized: bool = True

    def __post_init__(self):
        if isinstance(self.stepsize, (int, float)) and not self.stepsize > 0:
            raise ValueError("constant stepsize must be positive")
        if self.tol_grad is not None and not self.tol_grad > 0:
            raise ValueError("tol_grad must be positive")
        if not self.tol_obj > 0:
            raise ValueError("tol_obj must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


TRACE_FIELDS = ("t", "ftilde", "f", "g", "grad_norm", "delta", "eta")


@dataclass
class SolveTrace:
    records: list[tuple] = field(default_factory=list)
    final: Iterate | None = None
    reason: str = ""
    d: float = float("nan")

    @property
    def iterations(self) -> int:
        return self.records[-1][0] if self.records else 0

    @property
    def aborted(self) -> bool:
        return self.reason == "numerical-abort"

    def column(self, name: str) -> np.ndarray:
        i = TRACE_FIELDS.index(name)
        return np.array([r[i] for r in self.records], dtype=float)

    @property
    def final_delta(self) -> float:
        return self.records[-1][5] if self.records else float("nan")

    def contraction_factors(self) -> np.ndarray:
        """Per-iteration ratios delta_{t+1} / delta_t (empty without truth)."""
        dl = self.column("delta")
        if dl.size < 2 or np.isnan(dl).all():
            return np.empty(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return dl[1:] / dl[:-1]


@dataclass
class StepResult:
    iterate: Iterate
    eta: float
    ftilde: float
    stalled: bool = False


def _objective_parts(it: Iterate, y, p: RegParams | None):
    f = loss_F(it, y)
    g = penalty_G(it, p) if p is not None else 0.0
    return f, g


def step(it: Iterate, y, ops: SubspaceOperators, p: RegParams, opts: SolveOptions,
         grad=None, f_cur: float | None = None) -> StepResult:
    """One descent step from ``it``; ``grad``/``f_cur`` may be passed to avoid recomputation."""
    pr = p if opts.regularized else None
    gh, gx = grad if grad is not None else grad_ftilde(it, y, ops, pr)
    if f_cur is None:
        f_cur = sum(_objective_parts(it, y, pr))
    gsq = float(np.vdot(gh, gh).real + np.vdot(gx, gx).real)
    if gsq == 0.0:
        return StepResult(it, 0.0, f_cur)
    # B, A are linear, so trial caches come from one transform of the gradient
    Bg = ops.B.apply(gh)
    Ag = ops.A.apply(gx)

    def trial(eta):
        cand = Iterate(it.h - eta * gh, it.x - eta * gx, it.Bh - eta * Bg, it.Ax - eta * Ag)
        return cand, sum(_objective_parts(cand, y, pr))

    if not isinstance(opts.stepsize, Backtracking):
        eta = float(opts.stepsize)
        cand, _ = trial(eta)
        cand = cand.refreshed(ops)
        return StepResult(cand, eta, sum(_objective_parts(cand, y, pr)))

    bt = opts.stepsize
    eta = bt.eta0 if bt.eta0 is not None else 1.0 / p.d
    for _ in range(bt.max_halvings + 1):
        cand, f_new = trial(eta)
        target = f_cur - bt.c1 * eta * gsq
        if f_new <= target:
            # re-check on fresh caches so recorded values are exactly monotone
            cand = cand.refreshed(ops)
            f_new = sum(_objective_parts(cand, y, pr))
            if f_new <= target:
                return StepResult(cand, eta, f_new)
        eta *= bt.shrink
    return StepResult(it, 0.0, f_cur, stalled=True)


def solve(y, lifted: LiftedOperator, p: RegParams, opts: SolveOptions, init: InitResult,
          truth: Truth | None = None) -> SolveTrace:
    """Run descent from ``init`` until a stopping rule fires.

    Stops on gradient norm < tol_grad, relative F-tilde change < tol_obj over
    ``window`` iterations, ``max_iters``, a stalled line search, or a
    non-finite iterate (reason ``numerical-abort``).
    """
    ops = lifted.ops
    y = np.asarray(y, dtype=complex)
    pr = p if opts.regularized else None
    tol_grad = opts.tol_grad if opts.tol_grad is not None else 1e-10 * p.d ** 2
    it = Iterate.from_pair(init.u0, init.v0, ops)
    trace = SolveTrace(d=init.d)
    history: list[float] = []
    eta_used = float("nan")
    t = 0
    while True:
        f, g = _objective_parts(it, y, pr)
        ft = f + g
        gh, gx = grad_ftilde(it, y, ops, pr)
        gnorm = math.sqrt(float(np.vdot(gh, gh).real + np.vdot(gx, gx).real))
        finite = math.isfinite(ft) and math.isfinite(gnorm)
        delta = float("nan")
        if truth is not None and finite:
            delta = delta_metric(it.h, it.x, truth)
        trace.records.append((t, ft, f, g, gnorm, delta, eta_used))
        history.append(ft)
        if not finite or not (np.all(np.isfinite(it.h)) and np.all(np.isfinite(it.x))):
            trace.reason = "numerical-abort"
            break
        if gnorm < tol_grad:
            trace.reason = "grad-norm"
            break
        if t >= opts.window:
            old = history[t - opts.window]
            if abs(old - ft) <= opts.tol_obj * abs(old):
                trace.reason = "plateau"
                break
        if t >= opts.max_iters:
            trace.reason = "max-iters"
            break
        res = step(it, y, ops, p, opts, grad=(gh, gx), f_cur=ft)
        if res.stalled:
            trace.reason = "line-search-stall"
            break
        it = res.iterate
        eta_used = res.eta
        t += 1
    trace.final = it
    return trace


def success(trace: SolveTrace, truth: Truth, threshold: float = SUCCESS_THRESHOLD) -> bool:
    """Relative error of the rank-one product strictly below ``threshold``."""
    if trace.final is None:
        return False
    return delta_metric(trace.final.h, trace.final.x, truth) < threshold
