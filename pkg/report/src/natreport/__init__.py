"""Report generator for natmeas suite output directories.

Consumes the CSV/NDJSON artifacts written by `natmeas suite --out DIR` and
renders the exponent-fit figures (scatter + fitted line + target band) plus a
one-page HTML summary.  Every fitted slope is recomputed here from the raw
fit points as an independent cross-check of the CLI summary values.
"""

from .fitting import FigureSpec, FIGURES, ols_slope, recompute_fits, load_table  # noqa: F401
from .html import render_html  # noqa: F401

__version__ = "0.1.0"
SCHEMA_VERSION = 1
