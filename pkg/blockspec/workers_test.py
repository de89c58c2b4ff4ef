"""Tests for `blockspec.workers`.

Each test that sets the `max_workers` variable runs in a fresh
`contextvars.Context` (via the `@isolated` decorator) so `.set()` calls in
one test cannot leak into another.
"""

import functools
import threading
from contextvars import ContextVar, copy_context

import pytest

from .errors import ValidationError
from .workers import ENV_VAR, Scope, chunked, map_chunks, threads, worker_count


def isolated(fn):
    """Run the test in a fresh contextvars.Context."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return copy_context().run(fn, *args, **kwargs)

    return wrapper


label: ContextVar[str] = ContextVar("label", default="none")


@isolated
def test_scope_activate():
    scope = Scope(label, "set")
    assert label.get() == "none"
    with scope.activate():
        assert label.get() == "set"
    assert label.get() == "none"


@isolated
def test_threads_scope_overrides_environment(monkeypatch):
    monkeypatch.setenv(ENV_VAR, "8")
    assert worker_count() == 8
    with threads(3).activate():
        assert worker_count() == 3
    assert worker_count() == 8


def test_environment_variable(monkeypatch):
    monkeypatch.setenv(ENV_VAR, " 5 ")
    assert worker_count() == 5


def test_defaults_to_cpu_count(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    assert worker_count() >= 1


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_rejects_bad_environment_values(monkeypatch, raw):
    monkeypatch.setenv(ENV_VAR, raw)
    with pytest.raises(ValidationError) as excinfo:
        worker_count()
    assert excinfo.value.field == ENV_VAR


def test_threads_rejects_zero():
    with pytest.raises(ValidationError):
        threads(0)


def test_chunked():
    assert chunked([1, 2, 3, 4, 5], 2) == [[1, 2], [3, 4], [5]]
    assert chunked([], 3) == []
    with pytest.raises(ValueError):
        chunked([1], 0)


class TestMapChunks:
    @staticmethod
    def squares(start, chunk):
        return [(start + k, value * value) for k, value in enumerate(chunk)]

    @isolated
    def test_results_keep_input_order(self):
        items = list(range(37))
        with threads(4).activate():
            result = map_chunks(self.squares, items, 5)
        assert result == [(k, k * k) for k in items]

    @isolated
    @pytest.mark.parametrize("count", [1, 2, 8])
    def test_results_do_not_depend_on_worker_count(self, count):
        items = [0.1 * k for k in range(100)]
        with threads(count).activate():
            result = map_chunks(self.squares, items, 7)
        assert result == self.squares(0, items)

    @isolated
    def test_uses_several_threads(self):
        seen: set[int] = set()
        barrier = threading.Barrier(2, timeout=5)

        def record(start, chunk):
            seen.add(threading.get_ident())
            barrier.wait()
            return list(chunk)

        with threads(2).activate():
            assert map_chunks(record, [1, 2], 1) == [1, 2]
        assert len(seen) == 2

    @isolated
    def test_single_worker_runs_inline(self):
        caller = threading.get_ident()
        with threads(1).activate():
            idents = map_chunks(lambda start, chunk: [threading.get_ident()], [1, 2, 3], 1)
        assert idents == [caller] * 3

