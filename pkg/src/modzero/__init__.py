"""Modularized zero-shot VQA engine.

Parse module layouts, compile them into zero-shot plans, and execute the
plans against pluggable perception backends with full traces.
"""

from .compiler import compile_layout
from .executor import ExecutionConfig, Executor, QAResult
from .layout import Layout, parse_layout, format_layout, validate
from .plan import ZeroShotPlan

__version__ = "0.1.0"

__all__ = [
    "compile_layout",
    "ExecutionConfig",
    "Executor",
    "QAResult",
    "Layout",
    "parse_layout",
    "format_layout",
    "validate",
    "ZeroShotPlan",
    "__version__",
]
