"""Chunked data-parallel execution over an index range.

Work is split into contiguous chunks whose boundaries depend only on the
problem size and the worker count. Every element is computed by the same
operations regardless of chunking, so results are bit-identical for any
number of workers.
"""

from concurrent.futures import ThreadPoolExecutor

__all__ = ["parallel_for", "chunk_slices"]


def chunk_slices(n, workers):
    """Split ``range(n)`` into at most ``workers`` contiguous slices."""
    workers = max(1, min(int(workers), n))
    bounds = [n * k // workers for k in range(workers + 1)]
    return [slice(bounds[k], bounds[k + 1]) for k in range(workers)
            if bounds[k + 1] > bounds[k]]


def parallel_for(fn, n, workers=1):
    """Call ``fn(sl)`` for every chunk ``sl`` of ``range(n)``.

    ``fn`` must write only to the slots it owns. With ``workers <= 1`` the
    call runs inline.
    """
    if n <= 0:
        return
    if workers <= 1:
        fn(slice(0, n))
        return
    slices = chunk_slices(n, workers)
    if len(slices) == 1:
        fn(slices[0])
        return
    with ThreadPoolExecutor(max_workers=len(slices)) as pool:
        for fut in [pool.submit(fn, sl) for sl in slices]:
            fut.result()
