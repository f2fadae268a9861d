"""Optional figures for CLI runs.  The only module that touches matplotlib."""

from __future__ import annotations

import csv
from pathlib import Path


def plot_rows(csv_path: Path, png_path: Path) -> str:
    """Scatter the first numeric result column against the first grid column.

    Returns the figure file name, or a note when matplotlib is missing.
    """
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return "skipped: matplotlib not installed (pip install tenfold[plot])"
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return "skipped: no rows"
    cols = list(rows[0])

    def numeric(c):
        try:
            [float(r[c]) for r in rows if r[c] != ""]
            return any(r[c] != "" for r in rows)
        except ValueError:
            return False

    num = [c for c in cols if numeric(c) and c not in ("seed", "strength")]
    if len(num) < 2:
        return "skipped: fewer than two numeric columns"
    x, y = num[0], next((c for c in ("value", "bulk", "E", "residual") if c in num), num[1])
    pts = [(float(r[x]), float(r[y])) for r in rows if r[x] != "" and r[y] != ""]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot([p[0] for p in pts], [p[1] for p in pts], "o", ms=3)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return Path(png_path).name
