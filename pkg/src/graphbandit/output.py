"""CSV traces and SVG regret plots.

Both writers are byte-deterministic: floats go through ``repr`` in the CSV
and a fixed ``%.2f`` format in the SVG, and nothing depends on the clock.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .harness import RegretTrace, compute_regret

__all__ = ["CSV_HEADER", "Curve", "CsvRuns", "emit_csv", "emit_svg_plot", "read_csv", "render_svg"]

CSV_HEADER = ("round", "rep", "cum_loss", "cum_regret", "q_t", "epoch")
MAX_PLOT_POINTS = 1000
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(traces: Sequence[RegretTrace], path) -> None:
    """One row per (rep, round), reps in ascending order, rounds 1-based."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for tr in sorted(traces, key=lambda t: t.rep):
        curves = compute_regret(tr)
        rep = str(tr.rep)
        w.writerows(
            (str(t + 1), rep, repr(float(cl)), repr(float(cr)), repr(float(q)), str(int(e)))
            for t, (cl, cr, q, e) in enumerate(zip(curves.cum_loss, curves.regret, tr.q, tr.epoch))
        )
    _write_text(path, buf.getvalue())


@dataclass
class CsvRuns:
    """Regret curves read back from a trace CSV, one row per rep."""

    reps: list[int]
    cum_regret: np.ndarray  # (reps, rounds)


def read_csv(path) -> CsvRuns:
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    by_rep: dict[int, list[tuple[int, float]]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            try:
                rnd, rep, reg = int(row[0]), int(row[1]), float(row[3])
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{line_no}: malformed row") from None
            by_rep.setdefault(rep, []).append((rnd, reg))
    reps = sorted(by_rep)
    if not reps:
        return CsvRuns([], np.empty((0, 0)))
    lengths = {len(by_rep[r]) for r in reps}
    if len(lengths) != 1:
        raise ValueError(f"{path}: reps have different lengths {sorted(lengths)}")
    mat = np.array([[v for _, v in sorted(by_rep[r])] for r in reps])
    return CsvRuns(reps, mat)


@dataclass
class Curve:
    label: str
    rounds: np.ndarray
    values: np.ndarray


def _downsample(n: int) -> np.ndarray:
    if n <= MAX_PLOT_POINTS:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, MAX_PLOT_POINTS).round().astype(np.int64))


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:g}"


def render_svg(curves: Sequence[Curve], loglog: bool = False, title: str = "") -> str:
    """Self-contained SVG line chart; one ``<polyline>`` per curve."""
    width, height = 640, 420
    left, right, top, bottom = 70, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom

    series = []
    for c in curves:
        x = np.asarray(c.rounds, dtype=float)
        y = np.asarray(c.values, dtype=float)
        if loglog:
            keep = (x > 0) & (y > 0)
            x, y = np.log10(x[keep]), np.log10(y[keep])
        idx = _downsample(x.size)
        series.append((c.label, x[idx], y[idx]))

    xs = [s[1] for s in series if s[1].size]
    ys = [s[2] for s in series if s[2].size]
    x_lo, x_hi = (min(a.min() for a in xs), max(a.max() for a in xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(a.min() for a in ys), max(a.max() for a in ys)) if ys else (0.0, 1.0)
    if not loglog:
        y_lo = min(y_lo, 0.0)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.2f}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for v in _nice_ticks(x_lo, x_hi):
        px = sx(v)
        out.append(f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{top + ph + 18}" text-anchor="middle">{_fmt_tick(v, loglog)}</text>')
    for v in _nice_ticks(y_lo, y_hi):
        py = sy(v)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{_fmt_tick(v, loglog)}</text>')
    xlabel = "round (log scale)" if loglog else "round"
    ylabel = "cumulative regret (log scale)" if loglog else "cumulative regret"
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{ylabel}</text>')

    for i, (label, x, y) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + 12}" y1="{ly}" x2="{left + 36}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 42}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_plot(curves: Sequence[Curve], path, loglog: bool = False, title: str = "") -> None:
    _write_text(path, render_svg(curves, loglog=loglog, title=title))
