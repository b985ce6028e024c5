"""Figure rendering for RAN sharing sweep CSVs.

Consumes the simulator's long-format results file and renders the three
comparison figure kinds: grouped performance bars, blockchain-delay boxplots,
and overhead boxplots. The CSV is the only interface to the simulator.
"""

from .loader import REQUIRED_COLUMNS, SchemaError, load_results, sample_rows, summary_rows
from .render import (
    KIND_DELAY_BOX,
    KIND_OVERHEAD_BOX,
    KIND_PERFORMANCE_BARS,
    FigureSpec,
    NoDataError,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "KIND_DELAY_BOX",
    "KIND_OVERHEAD_BOX",
    "KIND_PERFORMANCE_BARS",
    "NoDataError",
    "REQUIRED_COLUMNS",
    "SchemaError",
    "load_results",
    "render",
    "sample_rows",
    "summary_rows",
]
