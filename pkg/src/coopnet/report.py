"""CSV and SVG export of scenario results."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Sequence

from .scenario import RocSummary, RunRecord


def fmt(x) -> str:
    """Six significant digits; booleans as 0/1; undefined values as an empty field."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.6g}"


def results_header(horizon: int) -> list[str]:
    cols = ["scenario", "seed", "mu"]
    for t in range(1, horizon + 1):
        cols += [f"beta1_y{t}", f"beta2_y{t}"]
    cols += ["years_cooperated", "converged"]
    for t in range(1, horizon + 1):
        cols += [f"accepted_y{t}", f"F1_y{t}", f"F2_y{t}", f"F1s1_y{t}", f"F1s2_y{t}", f"F2s_y{t}",
                 f"q1_y{t}", f"q2_y{t}", f"v1_y{t}", f"v2_y{t}"]
    cols += ["delta_f_co", "cir", "roc", "d_emissions", "d_travel_cost", "d_profit"]
    return cols


def results_row(r: RunRecord) -> list[str]:
    row = [r.name, str(r.seed), fmt(r.mu)]
    for b1, b2 in r.betas:
        row += [fmt(b1), fmt(b2)]
    row += [str(r.years_cooperated), fmt(r.converged)]
    for y in r.years:
        row += [fmt(y.accepted), fmt(y.no_mech[0]), fmt(y.no_mech[1]), fmt(y.stage1[0]),
                fmt(y.stage1[1]), fmt(y.surplus), fmt(y.shares[0]), fmt(y.shares[1]),
                fmt(y.payoffs[0]), fmt(y.payoffs[1])]
    row += [fmt(r.delta_f_co), fmt(r.cir), fmt(r.roc), fmt(r.d_emissions),
            fmt(r.d_travel_cost), fmt(r.d_profit)]
    return row


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def results_csv(records: Sequence[RunRecord]) -> str:
    horizon = len(records[0].betas) if records else 0
    return _csv_text(results_header(horizon), [results_row(r) for r in records])


def schedule_csv(records: Sequence[RunRecord]) -> str:
    rows = []
    for k, r in enumerate(records):
        for year, stage, edge, built, up in r.schedule_rows():
            rows.append([r.name, str(k), str(year), stage, str(edge), str(built), str(up)])
    return _csv_text(["scenario", "point", "year", "stage", "edge", "build", "upgrade"], rows)


def roc_csv(rows: Sequence[RocSummary]) -> str:
    out = []
    for s in rows:
        out.append([s.name, ":".join(fmt(v) for v in s.budget_ratio),
                    ":".join(fmt(v) for v in s.demand_ratio or ()), str(s.n),
                    fmt(s.minimum), fmt(s.q1), fmt(s.median), fmt(s.q3), fmt(s.maximum)])
    return _csv_text(["scenario", "fund_ratio_r1_r2", "demand_ratio_r1_r2", "points",
                      "roc_min", "roc_q1", "roc_median", "roc_q3", "roc_max"], out)


def scatter_svg(records: Sequence[RunRecord], width: int = 480, height: int = 360) -> str:
    """Scatter of (CIR, delta F co) with accepted points filled."""
    pad = 50
    xs = [r.cir for r in records]
    ys = [r.delta_f_co for r in records]
    x_hi = max(xs + [1e-9])
    y_lo, y_hi = min(ys + [0.0]), max(ys + [0.0])
    if y_hi - y_lo < 1e-9:
        y_hi = y_lo + 1.0

    def px(x):
        return pad + (width - 2 * pad) * x / x_hi

    def py(y):
        return height - pad - (height - 2 * pad) * (y - y_lo) / (y_hi - y_lo)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">CIR</text>',
             f'<text x="14" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 14 {height / 2:.1f})" '
             'text-anchor="middle">delta F co (CHF/day)</text>',
             f'<text x="{pad}" y="{height - pad + 16}" font-size="10" text-anchor="middle">0</text>',
             f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="middle">{fmt(x_hi)}</text>',
             f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{fmt(y_hi)}</text>',
             f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{fmt(y_lo)}</text>']
    for r, x, y in zip(records, xs, ys):
        fill = "crimson" if r.accepted_any else "none"
        parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" stroke="crimson" fill="{fill}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(out_dir, records: Sequence[RunRecord], svg: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"results.csv": results_csv(records), "schedule.csv": schedule_csv(records)}
    if svg:
        files["scatter.svg"] = scatter_svg(records)
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths
