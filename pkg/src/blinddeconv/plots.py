"""Emit standalone matplotlib scripts for result CSVs (nothing is plotted here)."""
from __future__ import annotations

from pathlib import Path

from .io import RESULT_HEADER, ResultFileError, read_results

_HEAD = '''"""Plot {name} ({kind}). Generated; edit freely."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV = {csv!r}
HEADER = {header!r}

rows = list(csv.DictReader(open(CSV)))
assert tuple(rows[0].keys() if rows else HEADER) == HEADER
'''

_SUCCESS = '''
# series: {series}
cells = defaultdict(list)
for r in rows:
    cells[(r["algo"], round(float(r["mu_h2"])) if {by_mu} else 0, int(r["L"]))].append(r["success"] == "1")
fig, ax = plt.subplots()
for algo, mu in sorted({{(a, m) for a, m, _ in cells}}):
    Ls = sorted(L for a, m, L in cells if (a, m) == (algo, mu))
    n = int(rows[0]["K"]) + int(rows[0]["N"])
    frac = [sum(cells[(algo, mu, L)]) / len(cells[(algo, mu, L)]) for L in Ls]
    label = algo if not {by_mu} else f"{{algo}}, mu_h^2={{mu}}"
    ax.plot([L / n for L in Ls], frac, "o-", label=label)
ax.set_xlabel("L/(K+N)")
ax.set_ylabel("probability of successful recovery")
ax.set_ylim(-0.05, 1.05)
ax.legend()
fig.savefig({png!r}, dpi=150)
'''

_NOISE = '''
# series: {series}
import math
cells = defaultdict(list)
for r in rows:
    cells[(r["algo"], int(r["L"]), float(r["sigma"]))].append(float(r["rel_err"]))
fig, ax = plt.subplots()
for algo, L in sorted({{(a, L) for a, L, _ in cells}}):
    sig = sorted(s for a, l, s in cells if (a, l) == (algo, L))
    snr = [-20 * math.log10(s) for s in sig]
    err = [20 * math.log10(sum(cells[(algo, L, s)]) / len(cells[(algo, L, s)])) for s in sig]
    ax.plot(snr, err, "o-", label=f"{{algo}}, L={{L}}")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("average relative reconstruction error (dB)")
ax.legend()
fig.savefig({png!r}, dpi=150)
'''

_EMPTY = '''
# WARNING: {csv} holds no trial rows; the figure is intentionally empty.
fig, ax = plt.subplots()
ax.set_title("no data")
fig.savefig({png!r}, dpi=150)
'''


def emit_plots(result_path) -> list[Path]:
    """Write one ``plot_<name>.py`` per results CSV found at ``result_path``.

    ``result_path`` may be a CSV file or a directory searched for files with
    the result header. Raises ResultFileError on a missing or malformed file.
    """
    result_path = Path(result_path)
    if result_path.is_dir():
        csvs = []
        for p in sorted(result_path.glob("*.csv")):
            with open(p) as fh:
                if fh.readline().strip() == ",".join(RESULT_HEADER):
                    csvs.append(p)
        if not csvs:
            raise ResultFileError(f"no result CSVs in {result_path}")
    elif result_path.exists():
        csvs = [result_path]
    else:
        raise ResultFileError(f"{result_path} does not exist")

    written = []
    for csv_path in csvs:
        rows = read_results(csv_path)
        name = csv_path.stem
        kind = rows[0]["kind"] if rows else "unknown"
        png = str(csv_path.with_suffix(".png").resolve())
        src = _HEAD.format(name=name, kind=kind, csv=str(csv_path.resolve()), header=RESULT_HEADER)
        if not rows:
            src += _EMPTY.format(csv=csv_path.name, png=png)
        elif kind == "noise-sweep":
            series = sorted({f"{r['algo']}@L={r['L']}" for r in rows})
            src += _NOISE.format(series=", ".join(series), png=png)
        else:
            by_mu = kind in ("incoherence-scan", "large-incoherence")
            series = sorted({f"{r['algo']}" + (f"@mu_h2={round(r['mu_h2'])}" if by_mu else "")
                             for r in rows})
            src += _SUCCESS.format(series=", ".join(series), by_mu=by_mu, png=png)
        out = csv_path.with_name(f"plot_{name}.py")
        out.write_text(src)
        written.append(out)
    return written
