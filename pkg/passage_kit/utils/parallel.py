"""
Ordered fan-out of Monte Carlo chunks.

Each chunk owns its random stream, so the merged output depends only on the
chunk layout. Results are returned in chunk order for any worker count, which
is what keeps samples and estimates independent of ``--threads``.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def resolve_workers(max_workers: Optional[int], n_items: int, use_processes: bool = False) -> int:
    """Workers actually used: never more than there are items."""
    if max_workers is None:
        cpus = os.cpu_count() or 4
        max_workers = cpus if use_processes else min(32, cpus + 4)
    return max(1, min(max_workers, n_items))


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    max_workers: Optional[int] = None,
    use_processes: bool = False,
) -> List[R]:
    """
    Map ``func`` over ``items``, returning results in input order.

    Args:
        func: Chunk worker. Must be picklable when ``use_processes`` is set.
        items: Chunk descriptions
        max_workers: ``None`` picks a default from the CPU count; ``1`` runs
            inline on the calling thread.
        use_processes: Use a process pool instead of threads. numpy releases
            the GIL in its kernels, so threads are the default.

    Example:
        >>> batches = parallel_map(run_chunk, chunk_layout(n, 10_000), max_workers=8)
    """
    items = list(items)
    workers = resolve_workers(max_workers, len(items), use_processes)
    if workers == 1:
        return [func(item) for item in items]

    pool = ProcessPoolExecutor if use_processes else ThreadPoolExecutor
    logger.debug(f"{len(items)} chunks on {workers} {'processes' if use_processes else 'threads'}")
    with pool(max_workers=workers) as executor:
        return list(executor.map(func, items))
