"""Monte Carlo drivers for recovery experiments.

Every trial is rebuilt from (master seed, grid cell, trial index) alone, so a
single cell can be re-run in isolation and parallel runs match serial ones.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .descent import Backtracking, SolveOptions, SolveTrace, solve
from .ensembles import make_operators
from .errors import ConfigError
from .lifted import LiftedOperator, Truth, add_noise
from .numeric import RngStream, is_power_of_two, sample_complex_gaussian
from .objective import (
    RegParams,
    default_mu2,
    default_reg_params,
    delta_metric,
    empirical_rip_ratio,
    incoherence_mu2,
)
from .spectral import InitResult, initialize

KINDS = ("phase-transition", "incoherence-scan", "large-incoherence", "noise-sweep",
         "comms-demo", "single-solve")
ALGOS = ("reggrad", "grad")
QPSK = np.array([1, -1, 1j, -1j])
CHANNEL_DECAY = 32.0


@dataclass
class ExperimentConfig:
    kind: str = "single-solve"
    K: int = 50
    N: int = 50
    L_grid: list[int] = field(default_factory=lambda: [400])
    trials: int = 1
    sigma_grid: list[float] = field(default_factory=lambda: [0.0])
    mu_h2_grid: list[int] = field(default_factory=list)
    a_kind: str = "gaussian"
    algo: str = "reggrad"
    h0_kind: str = "gaussian"  # gaussian | spiky | channel
    x0_kind: str = "gaussian"  # gaussian | qpsk
    noise_mode: str = "relative"
    skip_projection: bool = False
    eta: float | None = None
    power_iters: int = 50
    max_iters: int = 5000
    threshold: float = 1e-2
    seed: int = 0
    out: str = "results"
    timing: bool = True
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.K < 1 or self.N < 1:
            raise ConfigError("K and N must be positive")
        if not self.L_grid or not self.sigma_grid:
            raise ConfigError("grids must be non-empty")
        if self.a_kind not in ("gaussian", "hadamard"):
            raise ConfigError(f"unknown A ensemble {self.a_kind!r}")
        if self.algo not in ("reggrad", "grad", "both"):
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.h0_kind not in ("gaussian", "spiky", "channel"):
            raise ConfigError(f"unknown h0 model {self.h0_kind!r}")
        if self.x0_kind not in ("gaussian", "qpsk"):
            raise ConfigError(f"unknown x0 model {self.x0_kind!r}")
        if self.noise_mode not in ("relative", "absolute"):
            raise ConfigError(f"unknown noise mode {self.noise_mode!r}")
        for L in self.L_grid:
            if L < max(self.K, self.N):
                raise ConfigError(f"L = {L} is smaller than max(K, N)")
            if self.a_kind == "hadamard" and not is_power_of_two(L):
                raise ConfigError(f"Hadamard A needs power-of-two L, got {L}")
        if any(s < 0 for s in self.sigma_grid):
            raise ConfigError("noise levels must be non-negative")
        for m in self.mu_h2_grid:
            if int(m) != m or not 1 <= m <= self.K:
                raise ConfigError(f"mu_h^2 = {m} must be an integer in [1, K]")
        if self.eta is not None and not self.eta > 0:
            raise ConfigError("eta must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    @property
    def algos(self) -> tuple[str, ...]:
        return ALGOS if self.algo == "both" else (self.algo,)

    def solve_options(self, regularized: bool) -> SolveOptions:
        stepsize = self.eta if self.eta is not None else Backtracking()
        return SolveOptions(stepsize=stepsize, max_iters=self.max_iters, regularized=regularized)


@dataclass(frozen=True)
class TrialRecord:
    kind: str
    seed: int
    trial: int
    K: int
    N: int
    L: int
    mu_h2: float
    sigma: float
    algo: str
    rel_err: float
    success: bool
    iters: int
    wall_s: float
    ser: float | None = None

    def key(self):
        return (self.L, self.mu_h2, self.sigma, self.trial, self.algo)


@dataclass
class Instance:
    lifted: LiftedOperator
    truth: Truth
    y: np.ndarray
    rng: RngStream
    mu_h2: float


def spiky_h0(K: int, m: int) -> np.ndarray:
    """First m entries one, the rest zero (incoherence exactly m under the DFT B)."""
    h = np.zeros(K, dtype=complex)
    h[:m] = 1.0
    return h


def synthetic_channel(K: int, rng: RngStream, decay: float = CHANNEL_DECAY) -> np.ndarray:
    """Multipath taps CN(0, exp(-k/decay)), normalized to unit energy."""
    prof = np.exp(-np.arange(K) / decay)
    h = sample_complex_gaussian(rng, K) * np.sqrt(prof)
    return h / np.linalg.norm(h)


def qpsk_symbols(N: int, rng: RngStream) -> np.ndarray:
    return QPSK[rng.generator.integers(0, 4, size=N)]


def symbol_error_rate(x_hat, x0) -> float:
    """SER after the best complex scaling of x_hat onto x0, nearest-symbol decisions."""
    x_hat = np.asarray(x_hat)
    nx = np.vdot(x_hat, x_hat)
    if nx == 0:
        return 1.0
    z = (np.vdot(x_hat, x0) / nx) * x_hat
    dec = QPSK[np.argmax((np.conj(QPSK)[None, :] * z[:, None]).real, axis=1)]
    return float(np.mean(dec != x0))


def make_instance(cfg: ExperimentConfig, L: int, trial: int, mu_h2: int = 0,
                  sigma: float = 0.0, sigma_idx: int = 0) -> Instance:
    rng = RngStream(cfg.seed, trial, (L, int(mu_h2)))
    ops = make_operators(L, cfg.K, cfg.N, cfg.a_kind, rng)
    if cfg.h0_kind == "spiky" or mu_h2:
        h0 = spiky_h0(cfg.K, int(mu_h2))
    elif cfg.h0_kind == "channel":
        h0 = synthetic_channel(cfg.K, rng)
    else:
        h0 = sample_complex_gaussian(rng, cfg.K)
    x0 = qpsk_symbols(cfg.N, rng) if cfg.x0_kind == "qpsk" else sample_complex_gaussian(rng, cfg.N)
    lifted = LiftedOperator(ops)
    truth = Truth(h0, x0)
    y0 = lifted.forward_rank1(h0, x0)
    y, _ = add_noise(y0, sigma, rng.child(sigma_idx), cfg.noise_mode, d0=truth.d0)
    return Instance(lifted, truth, y, rng, incoherence_mu2(h0, ops.B))


@dataclass
class TrialOutcome:
    records: list[TrialRecord]
    traces: dict[str, SolveTrace]
    instance: Instance
    init: InitResult


def run_trial(cfg: ExperimentConfig, L: int, trial: int, mu_h2: int = 0, sigma: float = 0.0,
              sigma_idx: int = 0) -> TrialOutcome:
    """One instance, one shared spectral start, one solve per configured algorithm."""
    inst = make_instance(cfg, L, trial, mu_h2, sigma, sigma_idx)
    K, N = cfg.K, cfg.N
    t0 = time.perf_counter()
    mu2 = default_mu2(L, K, N)
    init = initialize(inst.y, inst.lifted, mu2, inst.rng, power_iters=cfg.power_iters,
                      skip_projection=cfg.skip_projection)
    t_init = time.perf_counter() - t0
    p = default_reg_params(init.d, L, K, N)
    records, traces = [], {}
    for algo in cfg.algos:
        t1 = time.perf_counter()
        tr = solve(inst.y, inst.lifted, p, cfg.solve_options(algo == "reggrad"), init, inst.truth)
        wall = (time.perf_counter() - t1 + t_init) if cfg.timing else float("nan")
        err = delta_metric(tr.final.h, tr.final.x, inst.truth) if not tr.aborted else float("nan")
        ser = symbol_error_rate(tr.final.x, inst.truth.x0) if cfg.x0_kind == "qpsk" else None
        records.append(TrialRecord(cfg.kind, cfg.seed, trial, K, N, L, inst.mu_h2, sigma, algo,
                                   err, bool(err < cfg.threshold), tr.iterations, wall, ser))
        traces[algo] = tr
    return TrialOutcome(records, traces, inst, init)


def _cell_task(args):
    cfg, L, trial, mu_h2, sigma, sigma_idx = args
    return run_trial(cfg, L, trial, mu_h2, sigma, sigma_idx).records


def run_cells(cfg: ExperimentConfig, cells) -> list[TrialRecord]:
    """Run every (L, mu_h2, sigma_idx) cell for all trials; result order is canonical."""
    tasks = [(cfg, L, t, m, cfg.sigma_grid[si], si)
             for (L, m, si) in cells for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            chunks = list(ex.map(_cell_task, tasks))
    else:
        chunks = [_cell_task(t) for t in tasks]
    recs = [r for chunk in chunks for r in chunk]
    return sorted(recs, key=TrialRecord.key)


def default_L_grid(kind: str, K: int, N: int, a_kind: str) -> list[int]:
    n = K + N
    if kind in ("phase-transition", "comms-demo"):
        if a_kind == "hadamard":
            return [2 ** s for s in range(6, 11)] if kind == "phase-transition" else \
                [2 ** s for s in range(8, 12)]
        if kind == "phase-transition":
            return [int(round(v)) for v in np.linspace(n, 4 * n, 16)]
        return [int(round(r * n)) for r in (1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)]
    if kind == "noise-sweep":
        return [512, 1024] if a_kind == "hadamard" else [5 * K, 10 * K]
    if kind == "large-incoherence":
        return [r * n for r in range(3, 9)]
    if kind == "incoherence-scan":
        return list(range(n, 8 * n + 1, n // 2))
    return [4 * n]


def run_phase_transition(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg.validate()
    return run_cells(cfg, [(L, 0, 0) for L in cfg.L_grid])


def run_incoherence_scan(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg.validate()
    if not cfg.mu_h2_grid:
        raise ConfigError("incoherence scan needs a mu_h2 grid")
    return run_cells(cfg, [(L, int(m), 0) for m in cfg.mu_h2_grid for L in cfg.L_grid])


def run_large_incoherence(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg.validate()
    m = cfg.mu_h2_grid[0] if cfg.mu_h2_grid else cfg.K // 2
    return run_cells(replace(cfg, mu_h2_grid=[m]), [(L, int(m), 0) for L in cfg.L_grid])


def run_noise_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg.validate()
    if any(s <= 0 for s in cfg.sigma_grid):
        raise ConfigError("noise sweep needs positive noise levels")
    return run_cells(cfg, [(L, 0, si) for L in cfg.L_grid for si in range(len(cfg.sigma_grid))])


def run_comms_demo(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg = replace(cfg, h0_kind="channel", x0_kind="qpsk").validate()
    return run_cells(cfg, [(L, 0, si) for L in cfg.L_grid for si in range(len(cfg.sigma_grid))])


def run_single(cfg: ExperimentConfig, trial: int = 0) -> TrialOutcome:
    cfg.validate()
    return run_trial(cfg, cfg.L_grid[0], trial, cfg.mu_h2_grid[0] if cfg.mu_h2_grid else 0,
                     cfg.sigma_grid[0], 0)


def run_rip_check(K: int, N: int, L: int, samples: int, seed: int, a_kind: str = "gaussian",
                  eps: float = 1.0 / 15.0) -> list[float]:
    """Local isometry ratios around a random Gaussian truth."""
    rng = RngStream(seed, 0, (L,))
    ops = make_operators(L, K, N, a_kind, rng)
    truth = Truth(sample_complex_gaussian(rng, K), sample_complex_gaussian(rng, N))
    mu2 = max(default_mu2(L, K, N), incoherence_mu2(truth.h0, ops.B))
    p = RegParams(rho=truth.d0 ** 2 / 100, d=truth.d0, mu2=mu2, eps=eps)
    return empirical_rip_ratio(truth, ops, p, samples, rng.child(0))


# ---- aggregation -----------------------------------------------------------

def success_table(records) -> list[dict]:
    """Success fraction and mean error per (L, mu_h2, sigma, algo) cell."""
    cells: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        m = round(r.mu_h2) if r.kind in ("incoherence-scan", "large-incoherence") else 0
        cells.setdefault((r.algo, m, r.sigma, r.L), []).append(r)
    out = []
    for (algo, m, s, L), rs in sorted(cells.items()):
        errs = np.array([r.rel_err for r in rs])
        out.append(dict(algo=algo, mu_h2=m, sigma=s, L=L, ratio=L / (rs[0].K + rs[0].N),
                        trials=len(rs), successes=sum(r.success for r in rs),
                        success_frac=sum(r.success for r in rs) / len(rs),
                        mean_rel_err=float(np.mean(errs)),
                        err_db=float(20 * np.log10(np.mean(errs))) if np.mean(errs) > 0 else -math.inf))
    return out


def min_L_reaching(table, algo: str, mu_h2: int, level: float = 0.5) -> int | None:
    Ls = sorted(r["L"] for r in table
                if r["algo"] == algo and r["mu_h2"] == mu_h2 and r["success_frac"] >= level)
    return Ls[0] if Ls else None


def loglog_slope(sigmas, errs) -> float:
    return float(np.polyfit(np.log(sigmas), np.log(errs), 1)[0])


def write_metadata(path, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    meta = {"config": asdict(cfg)}
    if cfg.kind == "comms-demo":
        meta["channel"] = (f"synthetic multipath: K complex Gaussian taps with variance "
                           f"proportional to exp(-k/{CHANNEL_DECAY:g}), unit energy")
    if extra:
        meta.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2, default=str))
    return path
