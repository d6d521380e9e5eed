"""Structured errors with source excerpts."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class Span:
    """Half-open character range ``[start, end)`` with 1-based line/col of start."""

    start: int
    end: int
    line: int
    col: int

    def cover(self, other: Span) -> Span:
        if other.start < self.start:
            return Span(other.start, max(self.end, other.end), other.line, other.col)
        return Span(self.start, max(self.end, other.end), self.line, self.col)


@dataclass
class Diagnostic:
    code: str
    message: str
    span: Optional[Span] = None
    severity: str = "error"
    source: Optional[str] = field(default=None, repr=False)
    filename: str = "<input>"

    def excerpt(self) -> str:
        if self.span is None or self.source is None:
            return ""
        lines = self.source.splitlines() or [""]
        idx = min(self.span.line - 1, len(lines) - 1)
        return lines[idx]

    def render(self, color: bool = False) -> str:
        red, bold, reset = ("\x1b[31m", "\x1b[1m", "\x1b[0m") if color else ("", "", "")
        head = f"{red}{bold}{self.severity}[{self.code}]{reset}: {self.message}"
        if self.span is None or self.source is None:
            return head
        line_no = self.span.line
        text = self.excerpt()
        gutter = " " * len(str(line_no))
        width = max(1, min(self.span.end - self.span.start, len(text) - self.span.col + 1))
        caret = " " * (self.span.col - 1) + "^" * width
        return "\n".join([
            head,
            f"{gutter}--> {self.filename}:{line_no}:{self.span.col}",
            f"{gutter} |",
            f"{line_no} | {text}",
            f"{gutter} | {red}{caret}{reset}",
        ])

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "line": self.span.line if self.span else None,
            "col": self.span.col if self.span else None,
            "excerpt": self.excerpt(),
        }


class CaplessError(Exception):
    """Base class for errors that carry diagnostics."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.message for d in self.diagnostics))


class ParseError(CaplessError):
    pass


class ResolveError(CaplessError):
    pass


def use_color() -> bool:
    mode = os.environ.get("CAPLESS_COLOR", "auto")
    if mode == "never":
        return False
    return sys.stdout.isatty()
