"""
Text output for results: CSV tables and JSON reports.

Floating-point numbers are always written in the shortest decimal form that
reads back to the same double, so re-parsing and re-emitting an output file
reproduces it byte for byte.
"""

import csv
import json
import typing as t
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DEFAULT_FORMATTERS",
    "dumps_json",
    "format_float",
    "format_value",
    "parse_value",
    "read_csv",
    "to_builtin",
    "write_csv",
]


type ValueMatcher = Callable[[object], bool]
"""A predicate that returns True if its formatter applies to a value."""

type CustomFormatter = Callable[[t.Any], str]
"""A function that renders a value as a CSV cell."""

type MatcherAndFormatter = tuple[type | ValueMatcher, CustomFormatter]
"""
A pair of a matcher and its corresponding formatter.

If the matcher is a type, the formatter applies to instances of it; if it is
a ValueMatcher, it is called with the value and should return True if the
formatter should be used.
"""


def format_float(value: float) -> str:
    """Shortest round-trip decimal representation of a double."""
    return repr(float(value))


def _format_integer(value: int) -> str:
    return str(int(value))


DEFAULT_FORMATTERS: tuple[MatcherAndFormatter, ...] = (
    (bool, lambda value: "true" if value else "false"),
    (int, _format_integer),
    (np.integer, _format_integer),
    (float, format_float),
    (np.floating, format_float),
)


def _matcher_matches(matcher: type | ValueMatcher, value: object) -> bool:
    """Check if a matcher matches a given value."""
    return isinstance(value, matcher) if isinstance(matcher, type) else matcher(value)


def format_value(
    value: object, *, formatters: Sequence[MatcherAndFormatter] = DEFAULT_FORMATTERS
) -> str:
    """
    Render one cell. The first matching (matcher, formatter) pair wins;
    values no matcher accepts fall back to `str`.
    """
    for matcher, formatter in formatters:
        if _matcher_matches(matcher, value):
            return formatter(value)
    return str(value)


def parse_value(text: str) -> int | float:
    """Inverse of `format_value` for numeric cells."""
    try:
        return int(text)
    except ValueError:
        return float(text)


def write_csv(
    stream: t.TextIO,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    *,
    formatters: Sequence[MatcherAndFormatter] = DEFAULT_FORMATTERS,
) -> None:
    """Write a header row and data rows, comma-separated with LF line endings."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(value, formatters=formatters) for value in row])


def read_csv(stream: t.TextIO) -> tuple[list[str], list[list[int | float]]]:
    """Read a table written by `write_csv` back into numbers."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise ValueError("CSV input is empty.")
    return header, [[parse_value(cell) for cell in row] for row in reader]


def to_builtin(value: object) -> object:
    """Recursively replace numpy scalars and arrays with Python equivalents."""
    match value:
        case np.ndarray():
            return to_builtin(value.tolist())
        case np.generic():
            return value.item()
        case Mapping():
            return {str(key): to_builtin(item) for key, item in value.items()}
        case list() | tuple():
            return [to_builtin(item) for item in value]
        case _:
            return value


def dumps_json(value: object) -> str:
    """A JSON document with two-space indentation and a trailing newline."""
    return json.dumps(to_builtin(value), indent=2, allow_nan=False) + "\n"
