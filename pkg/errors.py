"""
errors.py
=========
Exception hierarchy and diagnostic records shared by every stage of the
pipeline.

Every user-facing failure derives from ``DslError`` so that the command line
can render it as a one-line diagnostic (``file:line:col: severity: message``)
instead of a traceback.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass

from constants import COLOR_ENV_VAR
from dsl_ast import Span


class DslError(Exception):
    """Base class for all diagnostics raised by the toolchain."""

    severity = "error"

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def to_diagnostic(self, file: str = "<input>") -> Diagnostic:
        return Diagnostic(file=file, span=self.span, severity=self.severity,
                          message=self.message)


class LexError(DslError):
    pass


class ParseError(DslError):
    def __init__(self, message: str, span: Span | None = None,
                 expected: frozenset[str] = frozenset()):
        if expected:
            message = f"{message} (expected {', '.join(sorted(expected))})"
        super().__init__(message, span)
        self.expected = expected


class TypeCheckError(DslError):
    pass


class InterpreterError(DslError):
    pass


class NonTermination(InterpreterError):
    pass


class UnsupportedConstruct(DslError):
    def __init__(self, backend: str, construct: str, span: Span | None = None):
        super().__init__(f"{backend}: no template for {construct}", span)
        self.backend = backend
        self.construct = construct


class InvalidEdge(DslError):
    pass


class NegativeWeight(DslError):
    pass


class EdgeListError(ParseError):
    pass


class GraphTooLarge(DslError):
    pass


class UnknownCorpusEntry(DslError):
    pass


class ConfigError(DslError):
    pass


class ArgumentError(DslError):
    pass


# ── Diagnostics ──────────────────────────────────────────────────────────────

_SEVERITY_COLORS = {
    "error":   "\033[1;31m",
    "warning": "\033[1;35m",
    "note":    "\033[1;36m",
}
_RESET = "\033[0m"


def use_color(stream=None) -> bool:
    """Resolve ``GRAPHDSL_COLOR``; unset means color only on a terminal."""
    value = os.environ.get(COLOR_ENV_VAR)
    if value is not None:
        return value.strip() not in ("", "0", "false", "no")
    stream = stream if stream is not None else sys.stderr
    return hasattr(stream, "isatty") and stream.isatty()


@dataclass
class Diagnostic:
    file: str
    span: Span | None
    severity: str
    message: str

    def format(self, color: bool = False) -> str:
        line, col = (self.span.line, self.span.column) if self.span else (0, 0)
        severity = self.severity
        if color:
            severity = f"{_SEVERITY_COLORS.get(severity, '')}{severity}{_RESET}"
        return f"{self.file}:{line}:{col}: {severity}: {self.message}"


@dataclass
class DataRaceWarning(Diagnostic):
    """Plain write to an outside scalar from several parallel iterations."""

    symbol: str = ""
    region: int = -1

    @classmethod
    def at(cls, span: Span | None, symbol: str, region: int,
           file: str = "<input>") -> DataRaceWarning:
        return cls(file=file, span=span, severity="warning",
                   message=f"data race: '{symbol}' is written by concurrent iterations "
                           f"of region {region} without a reduction operator",
                   symbol=symbol, region=region)
