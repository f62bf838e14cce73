import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Worker cap from ``BLDKIT_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("BLDKIT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def pmap(fn, items):
    """Ordered map over ``items``; results never depend on the worker count."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(n_items, size):
    # fixed-size chunks so the work split is independent of worker count
    return [(lo, min(lo + size, n_items)) for lo in range(0, n_items, size)]
