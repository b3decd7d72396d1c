"""SVG heatmaps of transition matrices and accuracy-vs-gap curves, each with an exact CSV."""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .fingerprint import N_STATES, STATE_LABELS


class PlotError(Exception):
    pass


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".svg", ".csv") else p


# --------------------------------------------------------------------------
# matrices


def write_matrix_csv(matrix, row_labels, col_labels, path) -> None:
    m = np.asarray(matrix, dtype=np.float64)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from\\to"] + list(col_labels))
        for lab, row in zip(row_labels, m):
            w.writerow([lab] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PlotError(f"{path}: empty matrix CSV")
    cols = rows[0][1:]
    return [r[0] for r in rows[1:]], cols, np.array([[float(v) for v in r[1:]] for r in rows[1:]])


def _shade(v: float, vmax: float) -> str:
    t = 0.0 if vmax <= 0 else min(1.0, max(0.0, v / vmax))
    # white -> dark blue
    r = round(255 - t * (255 - 8))
    g = round(255 - t * (255 - 48))
    b = round(255 - t * (255 - 107))
    return f"#{r:02x}{g:02x}{b:02x}"


def emit_heatmap(matrix, path, title: str = "", row_labels=None, col_labels=None,
                 vmax: float | None = None, diverging: bool = False) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (exact values) and ``<stem>.svg`` for a 17x17 or 17x16 matrix.

    Rows are the current state, columns the next state. With ``diverging``
    negative cells are drawn red and positive ones blue (for difference matrices).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != N_STATES or m.shape[1] not in (N_STATES, N_STATES - 1):
        raise PlotError(f"heatmap needs a 17x17 or 17x16 matrix, got {m.shape}")
    rows = list(row_labels or STATE_LABELS)
    cols = list(col_labels or STATE_LABELS[: m.shape[1]])
    if len(rows) != m.shape[0] or len(cols) != m.shape[1]:
        raise PlotError("label count does not match matrix shape")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(m, rows, cols, stem.with_suffix(".csv"))

    cell, left, top = 28, 60, 60 if title else 40
    width = left + cell * len(cols) + 20
    height = top + cell * len(rows) + 20
    scale = vmax if vmax is not None else float(np.abs(m).max())
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="9">']
    if title:
        out.append(f'<text x="{left}" y="18" font-size="13">{escape(title)}</text>')
    for k, lab in enumerate(cols):
        x = left + k * cell + cell / 2
        out.append(f'<text x="{x:.1f}" y="{top - 6}" text-anchor="middle">{escape(lab)}</text>')
    for j, lab in enumerate(rows):
        y = top + j * cell
        out.append(f'<text x="{left - 4}" y="{y + cell / 2 + 3:.1f}" text-anchor="end">{escape(lab)}</text>')
        for k in range(len(cols)):
            v = float(m[j, k])
            if diverging and v < 0:
                t = 0.0 if scale <= 0 else min(1.0, -v / scale)
                fill = f"#ff{round(255 - t * 200):02x}{round(255 - t * 200):02x}"
            else:
                fill = _shade(abs(v), scale)
            out.append(f'<rect x="{left + k * cell}" y="{y}" width="{cell}" height="{cell}" '
                       f'fill="{fill}" stroke="#cccccc" data-row="{j}" data-col="{k}" '
                       f'data-value="{v!r}"/>')
    out.append("</svg>")
    svg = stem.with_suffix(".svg")
    svg.write_text("\n".join(out) + "\n", encoding="utf-8")
    return stem.with_suffix(".csv"), svg


# --------------------------------------------------------------------------
# gap curves

GAP_FIELDS = ("series", "gap", "mean_acc", "stderr", "n_experiments")
_COLOURS = ("#1f4e8c", "#c0392b", "#27ae60", "#8e44ad", "#d68910")


def write_gap_csv(series: dict[str, list[dict]], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAP_FIELDS)
        for name, table in series.items():
            for r in table:
                w.writerow([name, int(r["gap"]), repr(float(r["mean_acc"])),
                            repr(float(r["stderr"])), int(r["n_experiments"])])


def read_gap_csv(path) -> dict[str, list[dict]]:
    out: dict[str, list[dict]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["series"], []).append({
                "gap": int(row["gap"]), "mean_acc": float(row["mean_acc"]),
                "stderr": float(row["stderr"]), "n_experiments": int(row["n_experiments"])})
    return out


def emit_gap_curve(series, path, title: str = "") -> tuple[Path, Path]:
    """Accuracy vs year gap, one line with error bars (mean +- stderr) per series.

    ``series`` is either one table (list of rows with gap, mean_acc, stderr,
    n_experiments) or a mapping of series name to such tables.
    """
    if isinstance(series, list):
        series = {"accuracy": series}
    series = {k: sorted(v, key=lambda r: r["gap"]) for k, v in series.items() if v}
    if not series:
        raise PlotError("gap curve needs at least one non-empty table")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_gap_csv(series, stem.with_suffix(".csv"))

    gaps = sorted({r["gap"] for t in series.values() for r in t})
    lo = min(r["mean_acc"] - r["stderr"] for t in series.values() for r in t)
    hi = max(r["mean_acc"] + r["stderr"] for t in series.values() for r in t)
    lo, hi = max(0.0, min(lo, 0.5) - 0.02), min(1.0, hi + 0.02)
    W, H, L, R, T, B = 480, 300, 50, 110, 30, 40
    g0, g1 = gaps[0], max(gaps[-1], gaps[0] + 1)

    def px(g):
        return L + (g - g0) / (g1 - g0) * (W - L - R)

    def py(a):
        return T + (hi - a) / (hi - lo) * (H - T - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="10">']
    if title:
        out.append(f'<text x="{L}" y="16" font-size="12">{escape(title)}</text>')
    out.append(f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>')
    out.append(f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>')
    for g in gaps:
        out.append(f'<text x="{px(g):.1f}" y="{H - B + 14}" text-anchor="middle">{g}</text>')
    for a in np.linspace(lo, hi, 5):
        out.append(f'<text x="{L - 4}" y="{py(a) + 3:.1f}" text-anchor="end">{a:.2f}</text>')
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 6}" text-anchor="middle">year gap</text>')
    for i, (name, table) in enumerate(series.items()):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{px(r['gap']):.2f},{py(r['mean_acc']):.2f}" for r in table)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" data-series="{escape(name)}"/>')
        for r in table:
            x, m, s = px(r["gap"]), r["mean_acc"], r["stderr"]
            out.append(f'<line x1="{x:.2f}" y1="{py(m - s):.2f}" x2="{x:.2f}" y2="{py(m + s):.2f}" '
                       f'stroke="{colour}" class="errorbar"/>')
            out.append(f'<circle cx="{x:.2f}" cy="{py(m):.2f}" r="3" fill="{colour}" '
                       f'data-gap="{r["gap"]}" data-mean="{m!r}" data-stderr="{s!r}"/>')
        out.append(f'<text x="{W - R + 8}" y="{T + 14 * i + 8}" fill="{colour}">{escape(name)}</text>')
    out.append("</svg>")
    svg = stem.with_suffix(".svg")
    svg.write_text("\n".join(out) + "\n", encoding="utf-8")
    return stem.with_suffix(".csv"), svg
