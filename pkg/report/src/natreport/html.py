"""HTML summary page: the regression report table plus the recomputed-slope
cross-check column."""

from __future__ import annotations

import html
from pathlib import Path

__all__ = ["render_html", "CROSS_CHECK_TOL"]

CROSS_CHECK_TOL = 1e-9

_STYLE = """
body { font-family: sans-serif; margin: 2em; }
table { border-collapse: collapse; }
td, th { border: 1px solid #999; padding: 4px 8px; font-size: 13px; }
tr.fail { background: #fdd; }
tr.flag { background: #ffd; }
img { margin: 8px; border: 1px solid #ccc; }
"""


def render_html(summary_rows: list[dict], recomputed: list[dict],
                figure_files: list[Path], out_dir: Path) -> Path:
    recomputed_by_name = {r["summary_name"]: r for r in recomputed}
    parts = ["<html><head><meta charset='utf-8'><style>", _STYLE, "</style></head><body>",
             "<h1>natmeas acceptance report</h1>",
             "<table><tr><th>check</th><th>group</th><th>value</th><th>target</th>"
             "<th>tol</th><th>passed</th><th>recomputed fit</th><th>|diff|</th></tr>"]
    flagged = 0
    for row in summary_rows:
        name = row["name"]
        rec = recomputed_by_name.get(name)
        if rec is None:
            rec_txt, diff_txt, flag = "", "", False
        else:
            diff = abs(float(rec["slope"]) - float(row["value"]))
            rec_txt = f"{rec['slope']:.12g}"
            diff_txt = f"{diff:.3g}"
            flag = diff > CROSS_CHECK_TOL
            flagged += int(flag)
        passed = str(row.get("passed", "")).lower() in ("true", "1")
        cls = "fail" if not passed else ("flag" if flag else "")
        parts.append(
            f"<tr class='{cls}'><td>{html.escape(str(name))}</td>"
            f"<td>{html.escape(str(row.get('group', '')))}</td>"
            f"<td>{float(row['value']):.6g}</td><td>{float(row['target']):.6g}</td>"
            f"<td>{float(row['tol']):.3g}</td><td>{passed}</td>"
            f"<td>{rec_txt}</td><td>{diff_txt}</td></tr>")
    parts.append("</table>")
    if flagged:
        parts.append(f"<p><b>{flagged} fit(s) disagree with the CLI summary "
                     f"beyond {CROSS_CHECK_TOL:g}.</b></p>")
    for f in figure_files:
        parts.append(f"<h3>{html.escape(f.stem)}</h3><img src='{f.name}' width='560'>")
    parts.append("</body></html>")
    out = out_dir / "report.html"
    out.write_text("\n".join(parts))
    return out
