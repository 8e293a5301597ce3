"""
Command-line front end.

- ingest: CSV to GroupedSample
- report: human/csv/json rendering
- commands: argparse subcommands and the ``main`` entry point
"""

from .commands import build_parser, main, run_analysis
from .ingest import ingest_csv, ingest_endpoints, plot_data

__all__ = ["build_parser", "main", "run_analysis", "ingest_csv", "ingest_endpoints", "plot_data"]
