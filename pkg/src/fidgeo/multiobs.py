"""Fiducial distribution from several independent observations.

Each observation contributes a fiducial density |dF_r(x_i | theta)/dtheta|;
the combined density is their normalized product over theta. Products are
accumulated in log space and the trapezoid normalization is refined by grid
doubling until it settles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .csvio import write_csv
from .errors import DegenerateCombinationError, DomainError, NoCoverageError, OracleInapplicableError
from .families import ParametricFamily, TranslationFamily

REFINE_TOL = 1e-6
MAX_NODES = 1 << 21


@dataclass(frozen=True)
class DensityValue:
    value: float
    method: str  # "analytic", "central" or "one_sided"
    one_sided: bool = False


def _step(theta):
    return np.maximum(1e-5, 1e-5 * np.abs(theta))


def _difference(family: ParametricFamily, x, theta) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    h = _step(theta)
    dom = family.theta_domain
    lo_ok = theta - h >= dom.lo
    hi_ok = theta + h <= dom.hi
    up = np.where(hi_ok, theta + h, theta)
    dn = np.where(lo_ok, theta - h, theta)
    d = np.asarray(family.theta_increment(x, dn, up), dtype=float) / (up - dn)
    return d, ~(lo_ok & hi_ok)


def fiducial_density_eval(family: ParametricFamily, x: float, theta: float,
                          method: str = "auto") -> DensityValue:
    """|dF_r(x | theta) / dtheta| with the method used recorded."""
    if not family.x_domain.contains(x) or not family.theta_domain.contains(theta):
        raise DomainError(f"(x, theta)=({x}, {theta}) outside the family domains")
    if method not in ("auto", "analytic", "difference"):
        raise ValueError(f"unknown method {method!r}")
    if method == "analytic" or (method == "auto" and family.has_theta_derivative):
        return DensityValue(abs(float(family.theta_derivative(x, theta))), "analytic")
    d, one = _difference(family, x, theta)
    one = bool(one)
    return DensityValue(abs(float(d)), "one_sided" if one else "central", one)


def fiducial_density(family: ParametricFamily, x: float, theta: float, method: str = "auto") -> float:
    return fiducial_density_eval(family, x, theta, method).value


@dataclass(frozen=True)
class FiducialDensity:
    theta_nodes: np.ndarray
    values: np.ndarray
    x: float
    one_sided: np.ndarray


def fiducial_density_nodes(family: ParametricFamily, x: float, theta_nodes,
                           method: str = "auto") -> FiducialDensity:
    """Vectorized per-observation fiducial density on ``theta_nodes``."""
    th = np.asarray(theta_nodes, dtype=float)
    if method == "analytic" or (method == "auto" and family.has_theta_derivative):
        vals = np.abs(np.asarray(family.theta_derivative(x, th), dtype=float))
        one = np.zeros(th.shape, dtype=bool)
    else:
        d, one = _difference(family, x, th)
        vals = np.abs(d)
    vals = np.broadcast_to(vals, th.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"fiducial density for x={x} is not finite on the grid")
    return FiducialDensity(th, vals, float(x), np.broadcast_to(one, th.shape).copy())


@dataclass(frozen=True)
class CombinedFiducialDensity:
    theta_nodes: np.ndarray
    density: np.ndarray
    cdf: np.ndarray
    log_Z: float
    observations: tuple[float, ...]
    refinement_levels: int
    converged: bool = True
    one_sided: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def Z(self) -> float:
        return math.exp(self.log_Z)

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["theta", "density", "cdf"], [self.theta_nodes, self.density, self.cdf])

    def metadata(self) -> dict:
        return {"observations": list(self.observations), "Z": self.Z, "log_Z": self.log_Z,
                "refinement_levels": self.refinement_levels, "converged": self.converged, **self.meta}

    def write_metadata(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _refine(nodes: np.ndarray) -> np.ndarray:
    out = np.empty(2 * nodes.size - 1)
    out[0::2] = nodes
    out[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return out


def _cumtrapz(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (f[1:] + f[:-1]))])


def _normalize(t: np.ndarray, logf: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    top = float(np.max(logf))
    if not np.isfinite(top):
        raise DegenerateCombinationError("product of fiducial densities vanishes on the whole grid")
    g = np.exp(logf - top)
    c = _cumtrapz(t, g)
    z = float(c[-1])
    if z <= 0:
        raise DegenerateCombinationError("product of fiducial densities integrates to zero")
    return g / z, c / z, top + math.log(z)


def _refined_product(log_density: Callable[[np.ndarray], np.ndarray], theta_nodes,
                     tol: float, max_nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, int, bool]:
    t = np.asarray(theta_nodes, dtype=float)
    if t.ndim != 1 or t.size < 3 or not np.all(np.diff(t) > 0):
        raise DomainError("theta_nodes must be a strictly increasing vector of at least 3 nodes")
    dens, cdf, log_z = _normalize(t, log_density(t))
    level = 0
    converged = False
    while 2 * t.size - 1 <= max_nodes:
        t2 = _refine(t)
        d2, c2, lz2 = _normalize(t2, log_density(t2))
        level += 1
        dz = abs(math.expm1(lz2 - log_z))
        dc = float(np.max(np.abs(c2[::2] - cdf)))
        t, dens, cdf, log_z = t2, d2, c2, lz2
        if dz < tol and dc < tol:
            converged = True
            break
    return t, dens, cdf, log_z, level, converged


def _log(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(v)


def combine(family: ParametricFamily, observations: Sequence[float], theta_nodes,
            method: str = "auto", tol: float = REFINE_TOL, max_nodes: int = MAX_NODES
            ) -> CombinedFiducialDensity:
    """Normalized product of per-observation fiducial densities over theta."""
    obs = tuple(float(x) for x in observations)
    if not obs:
        raise DomainError("need at least one observation")
    for x in obs:
        if not family.x_domain.contains(x):
            raise DomainError(f"observation {x} outside x-domain {tuple(family.x_domain)}")
    one_sided = [False]

    def logf(t):
        acc = np.zeros(t.shape)
        for x in obs:
            fd = fiducial_density_nodes(family, x, t, method)
            one_sided[0] |= bool(fd.one_sided.any())
            acc += _log(fd.values)
        return acc

    t, dens, cdf, log_z, level, conv = _refined_product(logf, theta_nodes, tol, max_nodes)
    return CombinedFiducialDensity(t, dens, cdf, log_z, obs, level, conv, one_sided[0])


def bayes_oracle(family: ParametricFamily, observations: Sequence[float], theta_nodes,
                 tol: float = REFINE_TOL, max_nodes: int = MAX_NODES) -> CombinedFiducialDensity:
    """Posterior under a flat prior, from the translation base density directly."""
    if not isinstance(family, TranslationFamily):
        raise OracleInapplicableError(
            f"{type(family).__name__} is not a translation family; the flat-prior posterior "
            "equivalence needs cdf(x, theta) = F*(x + theta)")
    obs = tuple(float(x) for x in observations)
    if not obs:
        raise DomainError("need at least one observation")

    def logf(t):
        return sum(_log(np.asarray(family.base_density(x + t), dtype=float)) for x in obs)

    t, dens, cdf, log_z, level, conv = _refined_product(logf, theta_nodes, tol, max_nodes)
    return CombinedFiducialDensity(t, dens, cdf, log_z, obs, level, conv, meta={"oracle": "bayes"})


def combined_quantile(combined: CombinedFiducialDensity, beta: float, xtol: float = 1e-10) -> float:
    """theta with cumulative fiducial probability ``beta``.

    Within a cell the density is linear, so the cumulative is the matching
    quadratic; that is inverted by bisection.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta} must lie in (0, 1)")
    t, f, c = combined.theta_nodes, combined.density, combined.cdf
    if not c[0] <= beta <= c[-1]:
        raise NoCoverageError(f"level {beta} outside cumulative range [{c[0]}, {c[-1]}]")
    k = int(np.searchsorted(c, beta, side="left"))
    k = min(max(k, 1), t.size - 1) - 1
    h = t[k + 1] - t[k]
    if c[k + 1] == c[k]:
        return float(t[k])

    def cum(s):
        u = s - t[k]
        return c[k] + f[k] * u + (f[k + 1] - f[k]) * u * u / (2 * h) - beta

    if cum(t[k]) >= 0:
        return float(t[k])
    if cum(t[k + 1]) <= 0:
        return float(t[k + 1])
    return float(optimize.bisect(cum, t[k], t[k + 1], xtol=xtol))
