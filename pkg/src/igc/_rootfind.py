"""Bracketed bisection for monotone scalar maps that may overflow to +inf."""

from __future__ import annotations

import math
from typing import Callable


class BracketError(RuntimeError):
    """No finite bracket could be established for a monotone root-find."""


def decreasing_root(
    g: Callable[[float], float],
    target: float,
    guess: float,
    rel_tol: float = 1e-14,
    max_iter: int = 200,
    max_expansions: int = 600,
) -> float:
    """Solve g(r) = target for a nonincreasing map g on r > 0.

    Values of g above the target may be +inf (overflow counts as "too big").
    Returns the upper end of the final bracket, so g(result) <= target holds
    up to the bracket width.  Raises :class:`BracketError` when geometric
    expansion fails to bracket the target.
    """
    if not (guess > 0) or not math.isfinite(guess):
        raise ValueError("guess must be a positive finite number")

    def above(r: float) -> bool:
        val = g(r)
        return not (val <= target)  # inf and nan count as above

    hi = guess
    n = 0
    while above(hi):
        hi *= 2.0
        n += 1
        if n > max_expansions or not math.isfinite(hi):
            raise BracketError("no finite upper bracket: the integral diverges for every radius")
    lo = hi / 2.0
    n = 0
    while not above(lo):
        hi = lo
        lo /= 2.0
        n += 1
        if n > max_expansions:
            # g stays at or below target arbitrarily close to zero
            return 0.0
    for _ in range(max_iter):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
    return hi
