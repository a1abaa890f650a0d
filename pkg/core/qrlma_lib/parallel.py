import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)

THREADS_ENV = "QRLMA_THREADS"


def default_workers() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        return max(int(value), 1)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        return 1


def parallel_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    workers: Optional[int] = None,
    desc: Optional[str] = None,
    progress: bool = False,
) -> List[R]:
    """Map fn over items, results in input order. fn must be picklable when workers > 1."""
    workers = default_workers() if workers is None else max(workers, 1)
    bar = tqdm(total=len(items), desc=desc, disable=not progress, leave=False)
    try:
        if workers == 1 or len(items) <= 1:
            results = []
            for item in items:
                results.append(fn(item))
                bar.update(1)
            return results
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for result in pool.map(fn, items):
                results.append(result)
                bar.update(1)
            return results
    finally:
        bar.close()
