"""Deterministic worker-pool helper.

Results are always collected in submission order, so reductions over the
output are bit-identical no matter how many workers run. The heavy kernels
(FFTs, filtering) release the GIL, which makes threads worthwhile without
the pickling cost of processes.
"""

from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, jobs: int = 1) -> list:
    """Map `fn` over `items`, preserving order; `jobs <= 1` runs inline."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
