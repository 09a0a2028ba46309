import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Number of worker threads, from ``VOXEDGE_THREADS`` (0 or unset = auto)."""
    raw = os.environ.get("VOXEDGE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def slabs(length, parts):
    """Split ``range(length)`` into at most ``parts`` contiguous (start, stop) pairs."""
    parts = max(1, min(parts, length))
    bounds = [round(length * p / parts) for p in range(parts + 1)]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_slabs(fn, length, min_slab=8):
    """Call ``fn(start, stop)`` over disjoint slabs of ``range(length)``.

    Every output element is computed by exactly one call, so the result does not
    depend on how many workers are used.
    """
    n = min(worker_count(), max(1, length // min_slab))
    pieces = slabs(length, n)
    if len(pieces) == 1:
        fn(*pieces[0])
        return
    with ThreadPoolExecutor(max_workers=len(pieces)) as pool:
        for fut in [pool.submit(fn, a, b) for a, b in pieces]:
            fut.result()
