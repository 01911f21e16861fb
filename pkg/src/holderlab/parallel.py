"""Order-preserving parallel map capped by ``HOLDERLAB_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("HOLDERLAB_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    avail = os.cpu_count() or 1
    return max(1, min(cap, avail) if cap > 0 else avail)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]``, possibly threaded; results keep input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
