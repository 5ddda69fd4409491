"""Exclusive selection in crash-prone shared memory: renaming, store&collect, repositories.

Algorithms are generator step machines driven by :mod:`exsel.simcore`;
:mod:`exsel.checks` audits the traces they produce and :mod:`exsel.harness`
runs experiment grids over them.
"""

from .simcore import ConfigurationError, ExecutionTrace, ProcessId

__all__ = ["ConfigurationError", "ExecutionTrace", "ProcessId"]
__version__ = "0.1.0"
