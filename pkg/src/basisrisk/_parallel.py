"""Ordered thread-pool map with a process-wide default worker count."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "BASISRISK_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(n, 1)


def pmap(func: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``list(map(func, items))``, optionally on a thread pool.

    Results come back in input order, so the worker count never changes output.
    """
    items = list(items)
    threads = default_threads() if threads is None else max(int(threads), 1)
    if threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, items))
