"""Shared helpers for the whitespace-separated text formats."""

from __future__ import annotations

from typing import Iterator


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def iter_data_lines(text: str) -> Iterator[tuple[int, str]]:
    """Non-empty lines with '#' comments stripped, as (lineno, payload)."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            yield lineno, stripped


def parse_ints(lineno: int, line: str, expected: int | None = None) -> list[int]:
    parts = line.split()
    if expected is not None and len(parts) != expected:
        raise ParseError(lineno, f"expected {expected} integers, found {len(parts)}")
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise ParseError(lineno, "fields must be integers") from None
