"""Ordered worker pool: results always come back in input order."""
from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, workers=1):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
