"""Monte Carlo coverage of one-sided upper limits for phi = |theta|.

Setting: one observation y = |x| with x ~ N(theta, 1) written in the
translation form, so y has the composite-reduced distribution
F_bar(y | phi) = N(y + phi) - N(phi - y). Two upper limits for phi are
compared: the dual truncated* limit, which inverts the sampling
distribution, and the reciprocal limit from N(y + phi) - N(y - phi).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .fiducial import reciprocal_normal_cdf, reduced_normal_cdf

SPAN = 40.0


def _bisect_increasing(fn, target: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                       xtol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Vectorized bisection for fn(t) = target with fn increasing on [lo, hi]."""
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= xtol):
            break
    return 0.5 * (lo + hi)


def sample_y(u: np.ndarray, phi: float) -> np.ndarray:
    """Inverse-CDF draws of y from F_bar(y | phi)."""
    zero = np.zeros_like(u)
    return _bisect_increasing(lambda y: reduced_normal_cdf(y, phi), u, zero, zero + phi + SPAN)


def dual_upper_limit(y: np.ndarray, beta: float) -> np.ndarray:
    """phi_U with mu_bar(phi_U | y) = beta, or 0 when mu_bar(0 | y) = 2N(-y) already exceeds beta."""
    y = np.asarray(y, dtype=float)
    zero = np.zeros_like(y)
    mu = lambda p: 1.0 - reduced_normal_cdf(y, p)  # noqa: E731
    lim = _bisect_increasing(mu, np.full_like(y, beta), zero, y + SPAN)
    return np.where(mu(zero) >= beta, 0.0, lim)


def reciprocal_upper_limit(y: np.ndarray, beta: float) -> np.ndarray:
    """phi_R with N(y + phi_R) - N(y - phi_R) = beta."""
    y = np.asarray(y, dtype=float)
    zero = np.zeros_like(y)
    return _bisect_increasing(lambda p: reciprocal_normal_cdf(p, y), np.full_like(y, beta), zero, y + SPAN)


@dataclass(frozen=True)
class CoverageReport:
    beta: float
    trials: int
    phi_true: float
    seed: int
    coverage_dual: float
    coverage_reciprocal: float
    se_dual: float
    se_reciprocal: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def uniforms(seed: int, trials: int) -> np.ndarray:
    """One uniform per trial from the substream keyed by (seed, trial)."""
    return np.array([np.random.default_rng([seed, k]).random() for k in range(trials)])


def run_coverage(beta: float = 0.95, trials: int = 10_000, phi_true: float = 2.0,
                 seed: int = 0) -> CoverageReport:
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta} must lie in (0, 1)")
    if trials < 100:
        raise DomainError(f"trials={trials}; need at least 100")
    if phi_true < 0:
        raise DomainError("phi_true must be nonnegative")
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be an unsigned 64-bit integer")
    y = sample_y(uniforms(seed, trials), phi_true)
    cov_d = float(np.mean(phi_true <= dual_upper_limit(y, beta)))
    cov_r = float(np.mean(phi_true <= reciprocal_upper_limit(y, beta)))
    return CoverageReport(float(beta), int(trials), float(phi_true), int(seed),
                          cov_d, cov_r, _se(cov_d, trials), _se(cov_r, trials))
