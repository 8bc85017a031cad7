"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

The long Monte Carlo runs (criteria 4-7, 9) take several minutes in total.
"""
import time

import numpy as np
import pytest

import blinddeconv.experiments as ex
from blinddeconv.ensembles import make_operators
from blinddeconv.io import format_result_row
from blinddeconv.lifted import LiftedOperator, Truth
from blinddeconv.numeric import RngStream, sample_complex_gaussian
from blinddeconv.objective import (
    Iterate,
    RegParams,
    default_mu2,
    ftilde,
    grad_F,
    grad_ftilde,
    grad_G,
    loss_F,
    penalty_G,
)
from blinddeconv.spectral import initialize, power_method

from conftest import ACCEPTANCE_LINES, cgauss, dense_B, small_problem

pytestmark = pytest.mark.slow


def report(n, title, ok, detail, seconds):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail} ({seconds:.1f} s)")
    return ok


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def collect(cfg, cells):
    """Run every (L, mu_h2, sigma_idx) cell; also count non-monotone F-tilde traces."""
    records, bad, n = [], 0, 0
    for L, m, si in cells:
        for t in range(cfg.trials):
            out = ex.run_trial(cfg, L, t, m, cfg.sigma_grid[si], si)
            records += out.records
            for tr in out.traces.values():
                n += 1
                bad += bool(np.any(np.diff(tr.column("ftilde")) > 0))
    return records, (n, bad)


# ---- 1 ---------------------------------------------------------------------

def test_criterion_01_dense_oracle():
    t0 = time.perf_counter()
    rs = np.random.default_rng(101)
    worst = 0.0
    for K, N, L in [(3, 2, 8), (4, 4, 16)]:
        lifted, _ = small_problem(K, N, L, seed=K)
        M = lifted.dense_lifted_matrix()
        Bd = dense_B(L, K)
        for _ in range(10):
            h, x, z, y = cgauss(rs, K), cgauss(rs, N), cgauss(rs, L), cgauss(rs, L)
            Z = np.outer(h, x.conj())
            Az = (M.conj().T @ z).reshape(K, N)
            it = Iterate.from_pair(h, x, lifted.ops)
            r = M @ Z.ravel() - y
            Ar = (M.conj().T @ r).reshape(K, N)
            gh, gx = grad_F(it, y, lifted.ops)
            # penalty parameters chosen so that part of G is active
            d = np.linalg.norm(h) ** 2 / 3
            mu2 = L * np.median(np.abs(Bd @ h) ** 2) / (8 * d)
            p = RegParams(rho=2.0, d=d, mu2=mu2)
            zl = L * np.abs(Bd @ h) ** 2 / (8 * d * mu2)
            dG = lambda s: 2 * np.maximum(s - 1, 0)
            gGh = p.rho / (2 * d) * (dG(np.linalg.norm(h) ** 2 / (2 * d)) * h
                                     + L / (4 * mu2) * (Bd.conj().T @ (dG(zl) * (Bd @ h))))
            gGx = p.rho / (2 * d) * dG(np.linalg.norm(x) ** 2 / (2 * d)) * x
            Gd = p.rho * (np.maximum(np.linalg.norm(h) ** 2 / (2 * d) - 1, 0) ** 2
                          + np.maximum(np.linalg.norm(x) ** 2 / (2 * d) - 1, 0) ** 2
                          + np.sum(np.maximum(zl - 1, 0) ** 2))
            gGh_got, gGx_got = grad_G(it, p, lifted.ops.B)
            worst = max(worst,
                        rel(lifted.forward_rank1(h, x), M @ Z.ravel()),
                        rel(lifted.adjoint_apply_right(z, x), Az @ x),
                        rel(lifted.adjoint_apply_left(z, h), Az.conj().T @ h),
                        abs(loss_F(it, y) - np.linalg.norm(r) ** 2) / np.linalg.norm(r) ** 2,
                        rel(gh, Ar @ x), rel(gx, Ar.conj().T @ h),
                        abs(penalty_G(it, p) - Gd) / Gd, rel(gGh_got, gGh), rel(gGx_got, gGx))
    gap = 0.0
    for K, N, L in [(3, 2, 8), (4, 4, 16)]:
        lifted, _ = small_problem(K, N, L, seed=K + 1)
        for _ in range(50):
            h, x, z = cgauss(rs, K), cgauss(rs, N), cgauss(rs, L)
            fwd = lifted.forward_rank1(h, x)
            lhs = np.vdot(fwd, z)
            scale = np.linalg.norm(fwd) * np.linalg.norm(z)
            gap = max(gap, abs(lhs - np.vdot(h, lifted.adjoint_apply_right(z, x))) / scale,
                      abs(lhs - np.vdot(lifted.adjoint_apply_left(z, h), x)) / scale)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and gap <= 1e-10 and dt < 1
    assert report(1, "oracle equivalence", ok,
                  f"max rel dev {worst:.1e}, adjoint gap {gap:.1e} over 100 triples", dt)


# ---- 2 ---------------------------------------------------------------------

def test_criterion_02_gradient_fd():
    t0 = time.perf_counter()
    rs = np.random.default_rng(202)
    K, N, L = 8, 6, 64
    lifted, truth = small_problem(K, N, L, seed=2)
    y = lifted.forward_rank1(truth.h0, truth.x0) + 0.1 * cgauss(rs, L)
    worst, step = 0.0, 1e-5
    for _ in range(20):
        h, x = 1.3 * cgauss(rs, K), 1.3 * cgauss(rs, N)
        it = Iterate.from_pair(h, x, lifted.ops)
        d = np.linalg.norm(h) ** 2 / 3
        mu2 = L * np.quantile(np.abs(it.Bh) ** 2, 0.6) / (8 * d)
        p = RegParams(rho=1.0, d=d, mu2=mu2)
        gh, gx = grad_ftilde(it, y, lifted.ops, p)
        f = lambda a, b: ftilde(Iterate.from_pair(a, b, lifted.ops), y, p)
        for _ in range(5):
            dh, dx = cgauss(rs, K), cgauss(rs, N)
            fd = (f(h + step * dh, x + step * dx) - f(h - step * dh, x - step * dx)) / (2 * step)
            exact = 2 * (np.vdot(gh, dh) + np.vdot(gx, dx)).real
            worst = max(worst, abs(fd - exact) / abs(exact))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt < 5
    assert report(2, "gradient finite differences", ok, f"max rel error {worst:.1e} over 100 checks", dt)


# ---- 3 ---------------------------------------------------------------------

def test_criterion_03_spectral_init():
    t0 = time.perf_counter()
    K = N = 20
    L = 10 * (K + N)
    ratios = []
    for t in range(20):
        rng = RngStream(0, t, (L,))
        ops = make_operators(L, K, N, "gaussian", rng)
        truth = Truth(sample_complex_gaussian(rng, K), sample_complex_gaussian(rng, N))
        lifted = LiftedOperator(ops)
        init = initialize(lifted.forward_rank1(truth.h0, truth.x0), lifted, default_mu2(L, K, N), rng)
        ratios.append(init.d / truth.d0)
    ratios = np.array(ratios)
    frac = float(np.mean((ratios >= 0.9) & (ratios <= 1.1)))

    lifted, truth = small_problem(4, 3, 64)
    y = lifted.forward_rank1(truth.h0, truth.x0)
    M = np.column_stack([lifted.adjoint_apply_right(y, e) for e in np.eye(3)])
    s_top = np.linalg.svd(M, compute_uv=False)[0]
    sv_err = abs(power_method(y, lifted, 200, RngStream(0)).d - s_top) / s_top
    dt = time.perf_counter() - t0
    ok = frac >= 0.95 and sv_err <= 1e-8 and dt < 30
    assert report(3, "spectral initialization", ok,
                  f"d/d0 in [0.9, 1.1] for {frac:.0%} of 20 trials (need 95%; range "
                  f"{ratios.min():.3f}..{ratios.max():.3f}); power-method sigma_1 rel err {sv_err:.1e}", dt)


# ---- 4, 5 --------------------------------------------------------------------

@pytest.fixture(scope="module")
def phase_run():
    t0 = time.perf_counter()
    cfg = ex.ExperimentConfig(kind="phase-transition", K=50, N=50, trials=50, algo="reggrad",
                              L_grid=ex.default_L_grid("phase-transition", 50, 50, "gaussian"),
                              timing=False, seed=0).validate()
    records, mono = collect(cfg, [(L, 0, 0) for L in cfg.L_grid])
    return cfg, records, mono, time.perf_counter() - t0


def test_criterion_04_noiseless_recovery(phase_run):
    cfg, records, _, dt = phase_run
    table = {r["L"]: r["success_frac"] for r in ex.success_table(records)}
    ok = table[400] >= 0.9 and table[100] <= 0.2
    assert report(4, "noiseless recovery", ok,
                  f"success {table[400]:.2f} at L=400 (need >= 0.9), {table[100]:.2f} at L=100 "
                  f"(need <= 0.2)", dt)


def test_criterion_05_phase_monotone(phase_run):
    cfg, records, _, dt = phase_run
    table = ex.success_table(records)
    fr = [r["success_frac"] for r in table]
    drops = [(table[i]["L"], table[i + 1]["L"]) for i in range(len(fr) - 1) if fr[i + 1] < fr[i] - 0.1]
    curve = " ".join(f"{f:.2f}" for f in fr)
    assert report(5, "phase-transition monotonicity", not drops,
                  f"success over L grid: {curve}" + (f"; drops at {drops}" if drops else ""), 0.0)


# ---- 6 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def noise_run():
    t0 = time.perf_counter()
    cfg = ex.ExperimentConfig(kind="noise-sweep", K=50, N=50, L_grid=[512, 1024], trials=20,
                              sigma_grid=[float(s) for s in np.logspace(-4, 0, 9)],
                              timing=False, seed=0).validate()
    cells = [(L, 0, si) for L in cfg.L_grid for si in range(len(cfg.sigma_grid))]
    records, mono = collect(cfg, cells)
    return cfg, records, mono, time.perf_counter() - t0


def test_criterion_06_noise_robustness(noise_run):
    cfg, records, _, dt = noise_run
    table = ex.success_table(records)
    err = {L: [t["mean_rel_err"] for t in table if t["L"] == L] for L in cfg.L_grid}
    slopes = {L: ex.loglog_slope(cfg.sigma_grid, err[L]) for L in cfg.L_grid}
    ordered = all(a < b for a, b in zip(err[1024], err[512]))
    ok = all(abs(s - 1) <= 0.15 for s in slopes.values()) and ordered
    assert report(6, "noise robustness", ok,
                  f"slopes {slopes[512]:.3f} (L=512), {slopes[1024]:.3f} (L=1024); "
                  f"L=1024 below L=512 at every sigma: {ordered}", dt)


# ---- 8 ---------------------------------------------------------------------

def test_criterion_08_local_rip():
    t0 = time.perf_counter()
    r = np.array(ex.run_rip_check(20, 20, 2048, 100, seed=0))
    dt = time.perf_counter() - t0
    ok = r.size == 100 and r.min() >= 0.7 and r.max() <= 1.3 and dt < 60
    assert report(8, "empirical local RIP", ok, f"100 ratios in [{r.min():.3f}, {r.max():.3f}]", dt)


# ---- 9 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def incoherence_run():
    t0 = time.perf_counter()
    cfg = ex.ExperimentConfig(kind="incoherence-scan", K=50, N=50, trials=20, mu_h2_grid=[3, 9, 15],
                              L_grid=list(range(100, 501, 50)), h0_kind="spiky",
                              timing=False, seed=0).validate()
    cells = [(L, m, 0) for m in cfg.mu_h2_grid for L in cfg.L_grid]
    records, mono = collect(cfg, cells)
    return cfg, records, mono, time.perf_counter() - t0


def test_criterion_09_incoherence(incoherence_run):
    cfg, records, _, dt = incoherence_run
    table = ex.success_table(records)
    mins = [ex.min_L_reaching(table, "reggrad", m) for m in cfg.mu_h2_grid]
    ok = None not in mins and all(a <= b for a, b in zip(mins, mins[1:]))
    assert report(9, "incoherence scan", ok,
                  "min L with >= 50% success: "
                  + ", ".join(f"mu_h2={m}: {v}" for m, v in zip(cfg.mu_h2_grid, mins)), dt)


# ---- 7 ---------------------------------------------------------------------

def test_criterion_07_monotone_descent(phase_run, noise_run, incoherence_run):
    n = sum(r[2][0] for r in (phase_run, noise_run, incoherence_run))
    bad = sum(r[2][1] for r in (phase_run, noise_run, incoherence_run))
    assert report(7, "monotone descent", bad == 0,
                  f"{n - bad}/{n} backtracking traces with non-increasing F-tilde", 0.0)


# ---- 10 --------------------------------------------------------------------

def test_criterion_10_determinism(phase_run, noise_run, incoherence_run):
    t0 = time.perf_counter()
    picks = []
    cfg, recs, _, _ = phase_run
    picks += [(cfg, r, 0, 0) for r in recs if (r.L, r.trial) in ((400, 7), (220, 31))]
    cfg, recs, _, _ = noise_run
    picks += [(cfg, r, 0, cfg.sigma_grid.index(r.sigma)) for r in recs
              if (r.L, r.trial) == (512, 13) and r.sigma in cfg.sigma_grid[3:5]]
    cfg, recs, _, _ = incoherence_run
    picks += [(cfg, r, round(r.mu_h2), 0) for r in recs if (r.L, r.trial) == (250, 4)]
    same = 0
    for cfg, r, m, si in picks:
        again = ex.run_trial(cfg, r.L, r.trial, m, cfg.sigma_grid[si], si).records
        same += format_result_row(r).encode() == format_result_row(again[0]).encode()
    dt = time.perf_counter() - t0
    ok = len(picks) >= 6 and same == len(picks)
    assert report(10, "determinism", ok, f"{same}/{len(picks)} re-run rows byte-identical", dt)
