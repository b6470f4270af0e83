import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_jobs() -> int:
    """Worker count from FRACWAVE_JOBS, else the logical core count."""
    value = os.environ.get("FRACWAVE_JOBS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning(f"Ignoring non-integer FRACWAVE_JOBS={value!r}")
    return os.cpu_count() or 1


def run_jobs(fn: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = 1) -> List[R]:
    """Apply `fn` to every item; results come back in submission order.

    Exceptions raised by `fn` propagate; callers that need per-item isolation
    catch inside `fn`.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
