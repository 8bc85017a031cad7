"""CSV result/trace files and the flat key = value config format."""
from __future__ import annotations

import csv
import math
from pathlib import Path

from .errors import ConfigError

RESULT_HEADER = ("kind", "seed", "trial", "K", "N", "L", "mu_h2", "sigma", "algo",
                 "rel_err", "success", "iters", "wall_s")
TRACE_HEADER = ("t", "ftilde", "f", "g", "grad_norm", "delta", "eta")


class ResultFileError(OSError):
    """Missing or malformed result file."""


def fmt_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def result_row(rec) -> list[str]:
    return [rec.kind, str(rec.seed), str(rec.trial), str(rec.K), str(rec.N), str(rec.L),
            fmt_float(rec.mu_h2), fmt_float(rec.sigma), rec.algo, fmt_float(rec.rel_err),
            "1" if rec.success else "0", str(rec.iters), fmt_float(rec.wall_s)]


def format_result_row(rec) -> str:
    return ",".join(result_row(rec))


def write_results(path, records) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for rec in records:
            w.writerow(result_row(rec))
    return path


def read_csv(path, header) -> list[dict]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ResultFileError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != tuple(header):
        raise ResultFileError(f"{path}: header does not match {','.join(header)}")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ResultFileError(f"{path}:{n}: expected {len(header)} fields, got {len(row)}")
        out.append(dict(zip(header, row)))
    return out


def read_results(path) -> list[dict]:
    rows = read_csv(path, RESULT_HEADER)
    try:
        for r in rows:
            for k in ("seed", "trial", "K", "N", "L", "iters"):
                r[k] = int(r[k])
            for k in ("mu_h2", "sigma", "rel_err", "wall_s"):
                r[k] = float(r[k])
            r["success"] = r["success"] == "1"
    except ValueError as exc:
        raise ResultFileError(f"{path}: {exc}") from exc
    return rows


def write_trace(path, trace) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for rec in trace.records:
            w.writerow([str(rec[0])] + [fmt_float(v) for v in rec[1:]])
    return path


def read_trace(path) -> list[tuple]:
    rows = read_csv(path, TRACE_HEADER)
    try:
        return [(int(r["t"]),) + tuple(float(r[k]) for k in TRACE_HEADER[1:]) for r in rows]
    except ValueError as exc:
        raise ResultFileError(f"{path}: {exc}") from exc


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use underscores."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {n}: empty key")
        out[key.replace("-", "_").lower()] = value
    return out


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ResultFileError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
