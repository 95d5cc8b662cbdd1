# ============================================================================
# FILE: utils/executor.py (Shared Drop Executor)
# ============================================================================

"""
Process-wide worker pools for Monte-Carlo drops.

The CLI and the REST layer share pools so concurrent sweep requests do not
each spawn their own.  One pool is kept per worker count: a request asking
for a different size gets its own pool and never shuts down a pool another
request is still mapping over.  Results are always returned in submission
order; callers reduce them in that order, which keeps outputs independent of
the thread count.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Pools keyed by worker count, and their creation lock
_executors: Dict[int, ThreadPoolExecutor] = {}
_executor_lock = threading.Lock()


def get_executor(threads: int) -> Optional[ThreadPoolExecutor]:
    """Return the shared pool sized for `threads` workers, or None for serial execution."""
    if threads <= 1:
        return None
    with _executor_lock:
        pool = _executors.get(threads)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=threads, thread_name_prefix=f"sublink-drop-{threads}")
            _executors[threads] = pool
            logger.info(f"Drop executor started with {threads} threads")
        return pool


def reset_executor() -> None:
    """Shut every pool down and forget them."""
    with _executor_lock:
        pools = list(_executors.values())
        _executors.clear()
    for pool in pools:
        pool.shutdown(wait=True)
    if pools:
        logger.info(f"Drop executor shut down ({len(pools)} pools)")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Apply fn to every item, in parallel when threads > 1, preserving input order."""
    items = list(items)
    pool = get_executor(threads)
    if pool is None or len(items) <= 1:
        return [fn(item) for item in items]
    return list(pool.map(fn, items))
