"""Hypervolume strip plots as plain CSV and hand-written SVG."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import METHOD_ORDER, RunResult

_COLORS = {"EQ": "#4c72b0", "DW": "#dd8452", "EW": "#55a868"}
_LABELS = {"EQ": "EQ", "DW": "DT", "EW": "EW"}


def hypervolume_rows(results: list[RunResult]) -> list[tuple[str, int, float]]:
    rows = []
    for res in sorted(results, key=lambda r: METHOD_ORDER.index(r.config.method)):
        method = res.config.method.name
        rows.extend((method, rep.replicate, rep.hypervolume) for rep in res.replicates)
    return rows


def strip_plot_svg(rows: list[tuple[str, int, float]], title: str, width: int = 360,
                   height: int = 300) -> str:
    """One column of jittered points per method with a median bar."""
    left, right, top, bottom = 56, 16, 32, 40
    methods = [m.name for m in METHOD_ORDER if any(r[0] == m.name for r in rows)]
    values = np.array([r[2] for r in rows]) if rows else np.array([0.0, 1.0])
    lo, hi = float(values.min()), float(values.max())
    pad = 0.05 * (hi - lo) if hi > lo else 0.05
    lo, hi = lo - pad, hi + pad
    plot_w = width - left - right
    plot_h = height - top - bottom

    def y_of(v):
        return top + plot_h * (hi - v) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for tick in np.linspace(lo, hi, 5):
        y = y_of(tick)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:.3f}</text>')
    out.append(f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">hypervolume</text>')

    slot = plot_w / max(len(methods), 1)
    rng = np.random.default_rng(0)
    for i, method in enumerate(methods):
        cx = left + slot * (i + 0.5)
        vals = [v for m, _, v in rows if m == method]
        color = _COLORS.get(method, "#333333")
        jitter = rng.uniform(-0.18, 0.18, size=len(vals)) * slot
        for v, dx in zip(vals, jitter):
            out.append(f'<circle cx="{cx + dx:.2f}" cy="{y_of(v):.2f}" r="3" fill="{color}" '
                       f'fill-opacity="0.7"/>')
        med = y_of(float(np.median(vals)))
        out.append(f'<line x1="{cx - 0.3 * slot:.2f}" y1="{med:.2f}" x2="{cx + 0.3 * slot:.2f}" '
                   f'y2="{med:.2f}" stroke="black" stroke-width="2"/>')
        out.append(f'<text x="{cx:.2f}" y="{top + plot_h + 16}" text-anchor="middle">'
                   f'{_LABELS.get(method, method)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(results: list[RunResult], out_dir: str | Path) -> list[Path]:
    """Write ``hypervolume_<dataset>_<pair>.csv`` and a matching ``.svg`` per dataset and metric pair."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grouped: dict[tuple[str, str], list[RunResult]] = defaultdict(list)
    for res in results:
        grouped[(res.config.name, res.config.metric_pair.slug)].append(res)
    written = []
    for (dataset, slug), group in sorted(grouped.items()):
        rows = hypervolume_rows(group)
        stem = out_dir / f"hypervolume_{dataset}_{slug}"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("method", "replicate", "hypervolume"))
        writer.writerows((m, r, repr(v)) for m, r, v in rows)
        stem.with_suffix(".csv").write_text(buf.getvalue())
        title = f"{dataset} {group[0].config.metric_pair.label}"
        stem.with_suffix(".svg").write_text(strip_plot_svg(rows, title))
        written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
    return written
