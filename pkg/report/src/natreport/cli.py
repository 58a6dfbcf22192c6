"""report --in DIR --out DIR --figs LIST

Reads a natmeas suite output directory, renders the selected figures, and
writes report.html.  Fails fast on a schema-version mismatch, reports missing
columns by name, and exits nonzero on malformed input.  An empty figure list
produces the HTML summary only.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import SCHEMA_VERSION
from .figures import render_figure
from .fitting import FIGURES, MissingColumnError, recompute_fits
from .html import render_html

__all__ = ["main", "run_report"]


def _load_summary(in_dir: Path) -> list[dict]:
    path = in_dir / "suite_summary.csv"
    if not path.exists():
        raise FileNotFoundError(f"no suite_summary.csv in {in_dir}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for col in ("name", "value", "target", "tol", "passed"):
        if rows and col not in rows[0]:
            raise MissingColumnError("suite_summary.csv", col)
    return rows


def _check_manifest(in_dir: Path) -> None:
    path = in_dir / "natmeas_manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no natmeas_manifest.json in {in_dir}")
    doc = json.loads(path.read_text())
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"schema version mismatch: input {doc.get('schema')!r}, "
                         f"reader {SCHEMA_VERSION}")


def run_report(in_dir: Path, out_dir: Path, figs: list[str]) -> Path:
    _check_manifest(in_dir)
    summary = _load_summary(in_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    byname = {f.name: f for f in FIGURES}
    if figs == ["all"]:
        selected = [f for f in FIGURES if (in_dir / f"{f.table}.csv").exists()]
    else:
        unknown = [f for f in figs if f not in byname]
        if unknown:
            raise ValueError(f"unknown figure(s): {', '.join(unknown)}; "
                             f"available: {', '.join(sorted(byname))}")
        selected = [byname[f] for f in figs]
    files: list[Path] = []
    for spec in selected:
        files.extend(render_figure(spec, in_dir, out_dir))
    recomputed = recompute_fits(in_dir, selected)
    return render_html(summary, recomputed, files, out_dir)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="report", description=__doc__)
    parser.add_argument("--in", dest="in_dir", required=True)
    parser.add_argument("--out", dest="out_dir", required=True)
    parser.add_argument("--figs", default="all",
                        help="comma-separated figure list, 'all', or '' for HTML only")
    args = parser.parse_args(argv)
    figs = [f for f in args.figs.split(",") if f] if args.figs != "all" else ["all"]
    try:
        out = run_report(Path(args.in_dir), Path(args.out_dir), figs)
    except MissingColumnError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
