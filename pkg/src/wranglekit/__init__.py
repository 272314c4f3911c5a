"""Data-context-aware completion engine for tabular wrangling scripts.

The package provides a small columnar table engine, a closed set of
wrangling operators with an executable dialect, code-context detection for
partial statements, table/column/row profiling, rule- and model-backed
completion candidates, highlight and preview computation, and a
line-oriented session protocol with TCP/HTTP servers and a CLI.
"""

from __future__ import annotations

from .config import EngineConfig
from .ops import MISSING, OP_KINDS, TransformOp, apply_transform
from .table import DataTable, Environment, TableError, load_csv

__all__ = [
    "DataTable",
    "EngineConfig",
    "Environment",
    "MISSING",
    "OP_KINDS",
    "TableError",
    "TransformOp",
    "apply_transform",
    "load_csv",
]

__version__ = "0.1.0"
