"""Counters for parallel depth and sequential per-link work.

Algorithms bump named counters as they run:

``scan_rounds``
    combine rounds executed by block scans
``oee_rounds``
    elimination rounds executed by odd-even elimination
``sequential_link_steps``
    iterations of loops whose step ``i`` depends on step ``i - 1``

Use :func:`track` to observe the counts accumulated by a block of code::

    with track() as counts:
        cfa_forward_dynamics(chain, q, qd, tau)
    assert counts["sequential_link_steps"] == 0
"""

import threading
from collections import Counter
from contextlib import contextmanager

__all__ = ["bump", "track"]

_lock = threading.Lock()
_active = []


def bump(name, amount=1):
    if not _active:
        return
    with _lock:
        for counts in _active:
            counts[name] += amount


@contextmanager
def track():
    counts = Counter()
    with _lock:
        _active.append(counts)
    try:
        yield counts
    finally:
        with _lock:
            _active.remove(counts)
