"""
Ordered worker pool for independent evaluations (q-logarithm terms, outer
series blocks). Results come back in input order so reductions never depend
on the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from qgamma.config import settings
from qgamma.util.logger import setup_logger

logger = setup_logger("tasks.pool")

T = TypeVar("T")
R = TypeVar("R")


def worker_count(n_items: int) -> int:
    """Processes to use for a batch; 1 means run in-process."""
    if settings.THREADS <= 1 or n_items < settings.PARALLEL_MIN_TASKS:
        return 1
    return min(settings.THREADS, n_items)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """
    Apply `fn` to every item, in parallel when the batch is large enough.

    `fn` must be a picklable module-level function. mpmath keeps its precision
    in a process-global context, so workers are processes, not threads.
    """
    items = list(items)
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(item) for item in items]

    logger.debug(
        "Dispatching batch to worker pool",
        extra={"data": {"items": len(items), "workers": workers}},
    )
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items, chunksize=chunksize))
