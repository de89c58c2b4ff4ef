"""
Worker-count scoping and a deterministic chunked parallel map.

The number of worker threads comes from, in order of precedence: an active
`Scope` bound to `max_workers`, the `BLOCKSPEC_THREADS` environment
variable, and finally `os.cpu_count()`. Results never depend on it: work is
split into chunks up front and results are reassembled in chunk order.

Example use:

    with threads(2).activate():
        radial = density_grid(structure)
"""

import logging
import os
import typing as t
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "ENV_VAR",
    "Scope",
    "chunked",
    "map_chunks",
    "max_workers",
    "threads",
    "worker_count",
]

logger = logging.getLogger(__name__)

ENV_VAR = "BLOCKSPEC_THREADS"

max_workers: ContextVar[int | None] = ContextVar("max_workers", default=None)


@dataclass(frozen=True, slots=True)
class Scope[T]:
    """
    A binding of a `ContextVar` to a value, activatable as a context manager.
    """

    cv: ContextVar[T]
    value: T

    @contextmanager
    def activate(self) -> t.Generator[None]:
        """Set `cv` to `value` for the duration of the block, then reset."""
        with self.cv.set(self.value):
            yield


def _positive(value: int, source: str) -> int:
    if value < 1:
        raise ValidationError(source, f"worker count must be positive, got {value}")
    return value


def threads(count: int) -> Scope[int | None]:
    """A scope capping worker threads at `count` for the enclosed block."""
    return Scope(max_workers, _positive(count, "threads"))


def worker_count() -> int:
    """The number of worker threads parallel helpers may use right now."""
    scoped = max_workers.get()
    if scoped is not None:
        return scoped
    raw = os.environ.get(ENV_VAR, "").strip()
    if raw:
        try:
            count = int(raw)
        except ValueError as exc:
            raise ValidationError(ENV_VAR, f"expected an integer, got {raw!r}") from exc
        return _positive(count, ENV_VAR)
    return os.cpu_count() or 1


def chunked[T](items: Sequence[T], size: int) -> list[Sequence[T]]:
    """Consecutive slices of `items` of length `size` (the last may be shorter)."""
    if size < 1:
        raise ValueError(f"Chunk size must be positive, got {size}.")
    return [items[start : start + size] for start in range(0, len(items), size)]


def map_chunks[T, R](
    fn: Callable[[int, Sequence[T]], list[R]],
    items: Sequence[T],
    chunk_size: int,
) -> list[R]:
    """
    Apply `fn(start, chunk)` to consecutive chunks and concatenate the results.

    `start` is the offset of the chunk in `items`. Chunks run on up to
    `worker_count()` threads; the output order is always the input order.
    """
    chunks = chunked(items, chunk_size)
    starts = range(0, len(items), chunk_size)
    workers = min(worker_count(), len(chunks))
    logger.debug(
        "mapping %d items in %d chunks on %d workers", len(items), len(chunks), workers
    )
    if workers <= 1:
        parts = [fn(start, chunk) for start, chunk in zip(starts, chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(fn, starts, chunks))
    return [result for part in parts for result in part]
