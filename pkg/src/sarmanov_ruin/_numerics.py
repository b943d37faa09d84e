"""Shared numerical plumbing: checked quadrature, vectorized bisection, seeded batches."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate

from .errors import QuadratureError

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
QUAD_LIMIT = 10_000


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    epsabs: float = QUAD_EPSABS,
    epsrel: float = QUAD_EPSREL,
    points: Sequence[float] | None = None,
) -> float:
    """Adaptive Gauss-Kronrod quadrature that refuses to return an unconverged value.

    Thin wrapper over QUADPACK (``scipy.integrate.quad``). Any nonzero
    status code raises :class:`QuadratureError` instead of a warning.
    """
    if a == b:
        return 0.0
    kwargs = {}
    if points is not None and np.isfinite(a) and np.isfinite(b):
        inner = sorted(p for p in points if a < p < b)
        if inner:
            kwargs["points"] = inner
    out = _integrate.quad(
        f, a, b, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT, full_output=1, **kwargs
    )
    value, abserr = out[0], out[1]
    if len(out) > 3:
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge "
            f"(estimate={value!r}, abserr={abserr:.3g}): {out[3]}"
        )
    return float(value)


def bisect_log_tail(
    tail: Callable[[np.ndarray], np.ndarray],
    q: np.ndarray,
    log_lo: float,
    *,
    xtol: float = 0.0,
    max_iter: int = 2100,
) -> np.ndarray:
    """Solve ``tail(exp(s)) = q`` for ``s >= log_lo`` elementwise.

    ``tail`` must be nonincreasing with ``tail(exp(log_lo)) >= q``. The
    bracket is grown by doubling, then halved until its width falls below
    ``xtol`` (a relative tolerance on x, since we work in log x) or, with the
    default ``xtol=0``, until it cannot shrink further in floating point.
    Returns the smallest x with ``tail(x) <= q`` up to that tolerance.
    """
    with np.errstate(over="ignore"):
        return _bisect_log_tail(tail, q, log_lo, xtol, max_iter)


def _bisect_log_tail(tail, q, log_lo, xtol, max_iter):
    q = np.asarray(q, dtype=float)
    lo = np.full(q.shape, float(log_lo))
    width = np.ones(q.shape)
    hi = lo + width
    for _ in range(max_iter):
        grow = tail(np.exp(hi)) > q
        if not grow.any():
            break
        width = np.where(grow, 2.0 * width, width)
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, lo + width, hi)
    else:
        raise QuadratureError("could not bracket tail quantile")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo <= xtol) | (mid == lo) | (mid == hi)):
            break
        above = tail(np.exp(mid)) > q
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(hi)


def batch_sizes(n: int, n_batches: int) -> list[int]:
    """Split ``n`` into ``n_batches`` near-equal nonnegative parts, larger parts first."""
    base, extra = divmod(int(n), int(n_batches))
    return [base + (1 if b < extra else 0) for b in range(n_batches)]


def substreams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators keyed by (seed, index); the index is the batch, not the worker."""
    children = np.random.SeedSequence(int(seed)).spawn(int(count))
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def map_ordered(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Apply ``fn`` to ``items`` on a thread pool, returning results in input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))
