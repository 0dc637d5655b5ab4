import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ValidationError


def resolve_workers(workers=None) -> int:
    """Explicit value, else ``PSKK_THREADS``, else 1."""
    if workers is None:
        workers = os.environ.get("PSKK_THREADS", "1")
    try:
        n = int(workers)
    except (TypeError, ValueError):
        raise ValidationError(f"invalid worker count {workers!r}") from None
    return max(1, n)


def ordered_map(fn, items, workers=None):
    """``list(map(fn, items))``, optionally threaded; output order is input order."""
    items = list(items)
    n = resolve_workers(workers)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def pairwise_sum(parts):
    """Tree reduction in a fixed order, so results do not depend on scheduling."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to sum")
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]
