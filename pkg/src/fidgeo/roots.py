"""Level-set location on sampled curves: bracket scan plus bisection."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import optimize

ZERO_TOL = 1e-14


def _refine(source, lo: float, hi: float, level: float, xtol: float, v_lo: float, v_hi: float) -> float:
    if source is None:
        t = (level - v_lo) / (v_hi - v_lo)
        return lo + t * (hi - lo)
    return float(optimize.bisect(lambda t: float(source(t)) - level, lo, hi, xtol=xtol, maxiter=200))


def refine_run_end(source: Callable, inside: float, outside: float, level: float, tol: float,
                   xtol: float = 1e-12) -> float:
    """Boundary between a flat run at ``level`` (contains ``inside``) and ``outside``.

    Bisects on the predicate |source(t) - level| <= tol.
    """
    a, b = float(inside), float(outside)
    while abs(b - a) > xtol:
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        if abs(float(source(m)) - level) <= tol:
            a = m
        else:
            b = m
    return a


def level_set(coords: np.ndarray, values: np.ndarray, level: float,
              source: Callable | None = None, xtol: float = 1e-10,
              zero_tol: float = ZERO_TOL) -> tuple[list[float], list[tuple[float, float]]]:
    """All solutions of f(t) = level seen on the sampled curve.

    Returns isolated roots and closed intervals (runs of two or more nodes at
    the level). Isolated roots inside a cell are refined by bisection on
    ``source`` when given, else by linear interpolation. Interval ends are
    refined outward when ``source`` is given.
    """
    coords = np.asarray(coords, dtype=float)
    g = np.asarray(values, dtype=float) - level
    on = np.abs(g) <= zero_tol
    n = g.size
    points: list[float] = []
    intervals: list[tuple[float, float]] = []

    k = 0
    while k < n:
        if on[k]:
            e = k
            while e + 1 < n and on[e + 1]:
                e += 1
            if e > k:
                lo, hi = coords[k], coords[e]
                if source is not None:
                    if k > 0:
                        lo = refine_run_end(source, coords[k], coords[k - 1], level, zero_tol)
                    if e + 1 < n:
                        hi = refine_run_end(source, coords[e], coords[e + 1], level, zero_tol)
                intervals.append((float(lo), float(hi)))
            else:
                points.append(float(coords[k]))
            k = e + 1
            continue
        if k + 1 < n and not on[k + 1] and np.sign(g[k]) != np.sign(g[k + 1]):
            points.append(_refine(source, coords[k], coords[k + 1], level, xtol,
                                  values[k], values[k + 1]))
        k += 1
    return points, intervals
