"""Thread-count plumbing shared by the row-parallel kernels.

Work is always split into fixed row blocks whose boundaries do not depend on
the thread count, and each output element is produced by exactly one block,
so results are bitwise identical for any number of workers.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

_threads = None


def get_threads():
    if _threads is not None:
        return _threads
    env = os.environ.get("GRIDKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def set_threads(n):
    global _threads
    _threads = None if n is None else max(1, int(n))


@contextmanager
def threads(n):
    """Temporarily cap the worker count."""
    global _threads
    old = _threads
    set_threads(n)
    try:
        yield
    finally:
        _threads = old


def row_blocks(n, block=256):
    return [slice(i, min(i + block, n)) for i in range(0, n, block)]


def map_blocks(fn, blocks):
    """Apply ``fn`` to every block, in order, possibly on several threads."""
    n = get_threads()
    if n <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, blocks))
