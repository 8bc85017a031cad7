"""Command line entry point: ``blinddeconv <subcommand> [flags]``.

Exit codes: 0 success, 1 configuration error, 2 numerical abort, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError
from .io import ResultFileError, fmt_float, load_config, write_results, write_trace
from .plots import emit_plots

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

KIND_OF = {
    "solve": "single-solve",
    "phase-transition": "phase-transition",
    "incoherence-scan": "incoherence-scan",
    "large-incoherence": "large-incoherence",
    "noise-sweep": "noise-sweep",
    "comms-demo": "comms-demo",
}

# config-file key -> (config field, parser)
def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _ints(s):
    return [int(v) for v in str(s).split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none", "backtracking") else float(s)


FIELDS = {
    "seed": ("seed", int),
    "trials": ("trials", int),
    "out": ("out", str),
    "a_kind": ("a_kind", str),
    "algo": ("algo", str),
    "skip_projection": ("skip_projection", _bool),
    "eta": ("eta", _opt_float),
    "k": ("K", int),
    "n": ("N", int),
    "l": ("L_grid", _ints),
    "sigma": ("sigma_grid", _floats),
    "mu_h2": ("mu_h2_grid", _ints),
    "max_iters": ("max_iters", int),
    "power_iters": ("power_iters", int),
    "workers": ("workers", int),
    "timing": ("timing", _bool),
    "noise_mode": ("noise_mode", str),
    "samples": ("samples", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="flat 'key = value' file; CLI flags override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--a-kind", choices=("gaussian", "hadamard"))
    g.add_argument("--algo", choices=("reggrad", "grad", "both"))
    g.add_argument("--skip-projection", action="store_const", const=True, default=None)
    g.add_argument("--eta", type=float, help="constant stepsize (default: backtracking)")
    g.add_argument("--K", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--L", help="comma-separated list of L values")
    g.add_argument("--sigma", help="comma-separated noise levels")
    g.add_argument("--mu-h2", help="comma-separated incoherence values")
    g.add_argument("--max-iters", type=int)
    g.add_argument("--power-iters", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--noise-mode", choices=("relative", "absolute"))
    g.add_argument("--no-timing", dest="timing", action="store_const", const=False, default=None,
                   help="write wall_s as nan so result rows are byte-reproducible")
    g.add_argument("--samples", type=int, help="rip-check sample count")

    p = _Parser(prog="blinddeconv", description="Blind deconvolution by regularized gradient descent")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(KIND_OF) + ["rip-check"]:
        sub.add_parser(name, parents=[common])
    pl = sub.add_parser("plots", help="write plot scripts for result CSVs")
    pl.add_argument("path")
    return p


def _defaults(command: str) -> dict:
    kind = KIND_OF.get(command, "single-solve")
    d: dict = dict(kind=kind, seed=0, out="results", samples=100)
    if command == "phase-transition":
        d.update(K=50, N=50, trials=50, algo="both")
    elif command == "incoherence-scan":
        d.update(K=50, N=50, trials=50, mu_h2_grid=list(range(3, 31, 3)), h0_kind="spiky")
    elif command == "large-incoherence":
        d.update(K=200, N=200, trials=100, mu_h2_grid=[100], algo="both", h0_kind="spiky")
    elif command == "noise-sweep":
        d.update(K=100, N=100, trials=50, sigma_grid=[float(s) for s in np.logspace(-4, 0, 9)])
    elif command == "comms-demo":
        d.update(K=123, N=123, trials=50, h0_kind="channel", x0_kind="qpsk")
    elif command == "rip-check":
        d.update(K=20, N=20, L_grid=[2048])
    else:
        d.update(K=50, N=50, L_grid=[400], trials=1)
    return d


def resolve_settings(args) -> dict:
    settings = _defaults(args.command)
    if args.config:
        for key, raw in load_config(args.config).items():
            if key not in FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            name, conv = FIELDS[key]
            try:
                settings[name] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    cli = {
        "seed": args.seed, "trials": args.trials, "out": args.out, "a_kind": args.a_kind,
        "algo": args.algo, "skip_projection": args.skip_projection, "K": args.K, "N": args.N,
        "max_iters": args.max_iters, "power_iters": args.power_iters, "workers": args.workers,
        "noise_mode": args.noise_mode, "timing": args.timing, "samples": args.samples,
    }
    try:
        if args.eta is not None:
            cli["eta"] = args.eta
        if args.L is not None:
            cli["L_grid"] = _ints(args.L)
        if args.sigma is not None:
            cli["sigma_grid"] = _floats(args.sigma)
        if args.mu_h2 is not None:
            cli["mu_h2_grid"] = _ints(args.mu_h2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    settings.update({k: v for k, v in cli.items() if v is not None})
    if "L_grid" not in settings:
        settings["L_grid"] = ex.default_L_grid(settings["kind"], settings["K"], settings["N"],
                                               settings.get("a_kind", "gaussian"))
    return settings


def make_config(settings: dict) -> ex.ExperimentConfig:
    fields = {k: v for k, v in settings.items() if k != "samples"}
    return ex.ExperimentConfig(**fields).validate()


def _write_dicts(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rows[0].keys())
        for r in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in r.values()])


def _report(records, out: Path, cfg: ex.ExperimentConfig) -> int:
    name = cfg.kind
    write_results(out / f"{name}.csv", records)
    table = ex.success_table(records)
    _write_dicts(out / f"{name}_summary.csv", table)
    extra = {}
    if cfg.kind == "comms-demo":
        ser = [dict(trial=r.trial, L=r.L, algo=r.algo, rel_err=r.rel_err, ser=r.ser) for r in records]
        _write_dicts(out / "comms_ser.csv", ser)
    if cfg.kind == "noise-sweep":
        for L in cfg.L_grid:
            for algo in cfg.algos:
                rows = [t for t in table if t["L"] == L and t["algo"] == algo]
                extra[f"slope_L{L}_{algo}"] = ex.loglog_slope([t["sigma"] for t in rows],
                                                              [t["mean_rel_err"] for t in rows])
    ex.write_metadata(out / f"{name}_meta.json", cfg, extra)
    for t in table:
        line = f"{t['algo']:8s} L={t['L']:6d} L/(K+N)={t['ratio']:.2f}"
        if cfg.kind in ("incoherence-scan", "large-incoherence"):
            line += f" mu_h2={t['mu_h2']}"
        if cfg.kind in ("noise-sweep",) or t["sigma"]:
            line += f" sigma={t['sigma']:.3g} err_dB={t['err_db']:.2f}"
        line += f" success={t['successes']}/{t['trials']}"
        print(line)
    for k, v in extra.items():
        print(f"{k} = {v:.4f}")
    return EXIT_NUMERIC if any(np.isnan(r.rel_err) for r in records) else EXIT_OK


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "plots":
        for p in emit_plots(args.path):
            print(p)
        return EXIT_OK
    settings = resolve_settings(args)
    out = Path(settings["out"])
    if args.command == "rip-check":
        L = settings["L_grid"][0]
        ratios = ex.run_rip_check(settings["K"], settings["N"], L, settings["samples"],
                                  settings["seed"], settings.get("a_kind", "gaussian"))
        _write_dicts(out / "rip-check.csv", [dict(sample=i, ratio=r) for i, r in enumerate(ratios)])
        print(f"{len(ratios)} ratios: min {min(ratios):.4f} max {max(ratios):.4f}")
        return EXIT_OK
    cfg = make_config(settings)
    if args.command == "solve":
        outcome = ex.run_single(cfg)
        write_results(out / "solve.csv", outcome.records)
        for algo, tr in outcome.traces.items():
            write_trace(out / (f"trace_{algo}.csv" if len(cfg.algos) > 1 else "trace.csv"), tr)
            np.savez(out / (f"solution_{algo}.npz" if len(cfg.algos) > 1 else "solution.npz"),
                     h=tr.final.h, x=tr.final.x, h0=outcome.instance.truth.h0,
                     x0=outcome.instance.truth.x0)
        for r in outcome.records:
            print(f"{r.algo}: rel_err={r.rel_err:.3e} iters={r.iters} success={r.success}")
        aborted = any(tr.aborted for tr in outcome.traces.values())
        return EXIT_NUMERIC if aborted else EXIT_OK
    runner = {
        "phase-transition": ex.run_phase_transition,
        "incoherence-scan": ex.run_incoherence_scan,
        "large-incoherence": ex.run_large_incoherence,
        "noise-sweep": ex.run_noise_sweep,
        "comms-demo": ex.run_comms_demo,
    }[args.command]
    return _report(runner(cfg), out, cfg)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResultFileError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
