"""Fiducial distributions, confidence limits and signed-measure operations.

FD surfaces yield a fiducial distribution per observation by reading an
x-section (or its complement for a decreasing parameter). Non-FD surfaces
yield signed fiducial measures, which are handled here through Jordan and
even/odd decompositions, the composite distribution of phi = |theta| and the
composite reduction of |x| families.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import optimize, special

from .classify import DEFAULT_TOL, ExistenceVerdict, Tolerances, fd_existence_verdict
from .csvio import write_csv
from .errors import (
    DomainError,
    GridSymmetryError,
    NoCoverageError,
    NotAnFDError,
    NotReducibleError,
)
from .families import AbsComposite, ParametricFamily, ReducedComposite
from .roots import level_set
from .surface import FiducialSurface, x_section

ROOT_XTOL = 1e-10
SYMMETRY_ATOL = 1e-12


class FDDirection(str, enum.Enum):
    THETA_INCREASING = "theta_increasing"
    THETA_DECREASING = "theta_decreasing"


def _section_direction(values: np.ndarray, eps: float) -> FDDirection:
    net = float(values[-1] - values[0])
    if abs(net) <= eps:
        raise DomainError(f"section net change {net:.3g} too small to fix a parameter direction")
    return FDDirection.THETA_INCREASING if net > 0 else FDDirection.THETA_DECREASING


# ---------------------------------------------------------------------------
# Fiducial distributions and confidence limits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiducialDistribution:
    theta_nodes: np.ndarray
    cdf_values: np.ndarray
    direction: FDDirection
    x0: float
    source: Callable | None = None

    def cdf(self, theta):
        """P(Theta <= theta | x0), evaluated on the family when available."""
        if self.source is not None:
            return self.source(theta)
        return np.interp(theta, self.theta_nodes, self.cdf_values)

    def quantile(self, beta: float) -> float | tuple[float, float]:
        """The beta-quantile; a plateau at level beta returns its full interval."""
        if not 0.0 < beta < 1.0:
            raise DomainError(f"beta={beta} must lie in (0, 1)")
        pts, ivs = level_set(self.theta_nodes, self.cdf_values, beta, self.source, xtol=1e-12)
        if ivs:
            return ivs[0]
        if pts:
            return pts[0]
        raise NoCoverageError(f"level {beta} not reached on theta span "
                              f"[{self.theta_nodes[0]}, {self.theta_nodes[-1]}]")

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["theta", "cdf"], [self.theta_nodes, self.cdf_values])


def extract_fd(surface: FiducialSurface, x0: float, tolerances: Tolerances = DEFAULT_TOL,
               verdict: ExistenceVerdict | None = None) -> FiducialDistribution:
    """FD at observation ``x0``: the x-section, complemented for a decreasing parameter."""
    verdict = verdict or fd_existence_verdict(surface, tolerances)
    if not verdict.fd_exists:
        why = "intersecting RDs" if not verdict.non_intersecting else "incomplete RDs"
        raise NotAnFDError(f"surface does not define a fiducial distribution ({why})", verdict)
    sec = x_section(surface, x0)
    direction = _section_direction(sec.values, tolerances.eps_mono)
    fam = surface.family
    if direction is FDDirection.THETA_INCREASING:
        vals = sec.values.copy()
        src = lambda t: fam.cdf(x0, t)  # noqa: E731
    else:
        vals = 1.0 - sec.values
        src = lambda t: 1.0 - fam.cdf(x0, t)  # noqa: E731
    return FiducialDistribution(surface.theta_nodes, vals, direction, float(x0), src)


class LimitCase(str, enum.Enum):
    UNIQUE = "unique"
    INTERVAL = "interval"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class ConfidenceLimitSet:
    beta: float
    theta_values: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    case_kind: LimitCase

    def to_csv(self, path: str | Path) -> Path:
        rows = [(self.case_kind.value, "point", t, t) for t in self.theta_values]
        rows += [(self.case_kind.value, "interval", lo, hi) for lo, hi in self.intervals]
        return write_csv(path, ["case_kind", "type", "theta_lo", "theta_hi"],
                         list(zip(*rows)) if rows else [[], [], [], []])


def _local_roots(src: Callable, lo: float, hi: float, beta: float, n: int) -> list[float]:
    t = np.linspace(lo, hi, n)
    pts, _ = level_set(t, np.asarray(src(t), dtype=float), beta, src, xtol=ROOT_XTOL)
    return pts


def _dedupe(roots: list[float], tol: float) -> list[float]:
    out: list[float] = []
    for r in sorted(roots):
        if not out or r - out[-1] > tol:
            out.append(r)
    return out


def confidence_limit_set(surface: FiducialSurface, x0: float, beta: float) -> ConfidenceLimitSet:
    """All theta with F_r(x0 | theta) = beta on the grid span.

    Bracket scan over theta-nodes with bisection to 1e-10. Each root and each
    sampled extremum near the level is rescanned on a 10x finer local grid,
    which separates close roots the coarse scan can merge or miss.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta} must lie in (0, 1)")
    sec = x_section(surface, x0)
    th, v, src = sec.coords, sec.values, sec.source
    pts, ivs = level_set(th, v, beta, src, xtol=ROOT_XTOL)

    h = np.diff(th)
    suspects = [(r, 2 * float(np.max(h))) for r in pts]
    d = np.diff(v)
    for k in range(1, th.size - 1):
        if d[k - 1] * d[k] < 0:
            slope = max(abs(d[k - 1]), abs(d[k]))
            if abs(v[k] - beta) <= slope:
                suspects.append((float(th[k]), float(max(h[k - 1], h[k]))))
    roots = list(pts)
    for c, w in suspects:
        lo, hi = max(th[0], c - w), min(th[-1], c + w)
        if hi > lo:
            roots.extend(r for r in _local_roots(src, lo, hi, beta, 41)
                         if not any(a <= r <= b for a, b in ivs))
    roots = _dedupe(roots, 1e-9)

    if not roots and not ivs:
        raise NoCoverageError(
            f"F_r({x0}|theta) = {beta} has no solution on theta in [{th[0]}, {th[-1]}]; "
            f"section range is [{v.min():.6g}, {v.max():.6g}]")
    if ivs and not roots and len(ivs) == 1:
        case = LimitCase.INTERVAL
    elif len(roots) == 1 and not ivs:
        case = LimitCase.UNIQUE
    else:
        case = LimitCase.MULTIPLE
    return ConfidenceLimitSet(float(beta), tuple(roots), tuple(ivs), case)


# ---------------------------------------------------------------------------
# Signed measures and decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignedFiducialMeasure:
    """Sampled FM m(theta | x0); values need not be monotone.

    Values are typically in [0, 1]; derived parts such as an odd component
    may be negative.
    """

    theta_nodes: np.ndarray
    values: np.ndarray
    x0: float = float("nan")

    def __post_init__(self):
        t = np.asarray(self.theta_nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DomainError("theta_nodes and values must be equal-length vectors")
        if not np.all(np.isfinite(v)):
            raise DomainError("measure values must be finite")
        object.__setattr__(self, "theta_nodes", t)
        object.__setattr__(self, "values", v)


def fiducial_measure(surface: FiducialSurface, x0: float) -> SignedFiducialMeasure:
    sec = x_section(surface, x0)
    return SignedFiducialMeasure(sec.coords, sec.values, float(x0))


@dataclass(frozen=True)
class JordanDecomposition:
    theta_nodes: np.ndarray
    M1: np.ndarray
    M2: np.ndarray


def jordan_decompose(m: SignedFiducialMeasure) -> JordanDecomposition:
    """m = M1 - M2 with M1, M2 nondecreasing.

    M2 grows by twice each decrease of m and is flat where m rises; M1 is
    m with every decreasing run reflected upward.
    """
    d = np.diff(m.values)
    M2 = np.concatenate([[0.0], np.cumsum(2.0 * np.maximum(-d, 0.0))])
    M1 = m.values + M2
    return JordanDecomposition(m.theta_nodes, M1, M2)


def _require_symmetric(theta: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(theta))))
    if theta.size % 2 == 0 or np.max(np.abs(theta + theta[::-1])) > SYMMETRY_ATOL * scale:
        raise GridSymmetryError("theta nodes must be symmetric about 0 with a node at 0")


@dataclass(frozen=True)
class EvenOddParts:
    theta_nodes: np.ndarray
    m_E: np.ndarray
    m_O: np.ndarray


def even_odd_decompose(m: SignedFiducialMeasure) -> EvenOddParts:
    _require_symmetric(m.theta_nodes)
    v, r = m.values, m.values[::-1]
    return EvenOddParts(m.theta_nodes, 0.5 * (v + r), 0.5 * (v - r))


def decomposition_table(m: SignedFiducialMeasure) -> dict[str, np.ndarray]:
    parts = even_odd_decompose(m)
    jd = jordan_decompose(m)
    return {"theta": m.theta_nodes, "m": m.values, "m_E": parts.m_E, "m_O": parts.m_O,
            "M1": jd.M1, "M2": jd.M2}


def write_decomposition_csv(path: str | Path, m: SignedFiducialMeasure) -> Path:
    tab = decomposition_table(m)
    return write_csv(path, list(tab), list(tab.values()))


@dataclass(frozen=True)
class CompositeOfPhi:
    """Composite distribution of phi = |theta| sampled at phi >= 0 nodes.

    ``reversed_orientation`` is set when the positive half of the odd part
    is negative, in which case right and left measures swap roles.
    """

    phi_nodes: np.ndarray
    values: np.ndarray
    reversed_orientation: bool


def _orientation_reversed(m: SignedFiducialMeasure) -> bool:
    c = m.theta_nodes.size // 2
    m_O = even_odd_decompose(m).m_O
    return float(np.sum(m_O[c:])) < 0.0


def composite_distribution_of_phi(m: SignedFiducialMeasure) -> CompositeOfPhi:
    """Shortcut: the even part drops out and the odd part contributes twice its positive half."""
    parts = even_odd_decompose(m)
    c = m.theta_nodes.size // 2
    rev = _orientation_reversed(m)
    half = parts.m_O[c::-1] if rev else parts.m_O[c:]
    return CompositeOfPhi(m.theta_nodes[c:], 2.0 * half, rev)


def composite_rl_construction(m: SignedFiducialMeasure,
                              reversed_orientation: bool | None = None) -> CompositeOfPhi:
    """Composite of phi via the right/left measures of a Jordan decomposition.

    R_i(phi) = M_i(+phi) - M_i(0) and L_i(phi) = M_i(0) - M_i(-phi); the
    composite is (R_1 + L_1) - (R_2 + L_2). Used as an independent check on
    :func:`composite_distribution_of_phi`.
    """
    _require_symmetric(m.theta_nodes)
    rev = _orientation_reversed(m) if reversed_orientation is None else reversed_orientation
    vals = m.values[::-1] if rev else m.values
    jd = jordan_decompose(SignedFiducialMeasure(m.theta_nodes, vals, m.x0))
    c = m.theta_nodes.size // 2
    out = np.zeros(c + 1)
    for M, sign in ((jd.M1, 1.0), (jd.M2, -1.0)):
        R = M[c:] - M[c]
        L = M[c] - M[c::-1]
        out += sign * (R + L)
    return CompositeOfPhi(m.theta_nodes[c:], out, rev)


# ---------------------------------------------------------------------------
# Composite reduction and truncated* distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedStarFM:
    """mu_bar(phi | y) = 1 - F_bar(y | phi): monotone in phi, mass below one."""

    family: ReducedComposite

    def value(self, y, phi):
        return 1.0 - np.asarray(self.family.cdf(y, phi), dtype=float)

    def initial_value(self, y) -> float:
        return float(self.value(y, 0.0))

    def values(self, y: float, phi_nodes) -> np.ndarray:
        return self.value(y, np.asarray(phi_nodes, dtype=float))

    def density(self, y: float, phi: float, h: float = 1e-5) -> float:
        """Central difference in phi (forward at phi < h)."""
        if phi < h:
            return float((self.value(y, phi + h) - self.value(y, phi)) / h)
        return float((self.value(y, phi + h) - self.value(y, phi - h)) / (2 * h))


def is_truncated_star(values: np.ndarray, delta: float = DEFAULT_TOL.delta_complete,
                      eps: float = DEFAULT_TOL.eps_mono) -> bool:
    """Monotone increasing but not spanning [0, 1] within ``delta``."""
    v = np.asarray(values, dtype=float)
    monotone = bool(np.all(np.diff(v) >= -eps))
    return monotone and (v[0] > delta or v[-1] < 1.0 - delta)


def composite_reduce(surface: FiducialSurface, eps: float = 1e-9
                     ) -> tuple[ReducedComposite, TruncatedStarFM]:
    """Re-index coinciding +/-theta composite RDs by phi = |theta|."""
    fam = surface.family
    if not isinstance(fam, AbsComposite):
        raise NotReducibleError("composite reduction needs an |x| composite surface")
    _require_symmetric(surface.theta_nodes)
    V = np.asarray(surface.values)
    gap = np.max(np.abs(V - V[:, ::-1]), axis=0)
    if gap.max() > eps:
        j = int(np.argmax(gap))
        raise NotReducibleError(
            f"RDs at theta={surface.theta_nodes[j]:.6g} and its negative differ by {gap[j]:.3g}; "
            "the dual FM is not symmetric, so the composite cannot be reduced")
    reduced = ReducedComposite(fam)
    return reduced, TruncatedStarFM(reduced)


def _check_nonneg(y: float, phi: float) -> None:
    if y < 0 or phi < 0:
        raise DomainError(f"need y >= 0 and phi >= 0, got y={y}, phi={phi}")


def truncated_star_density(y: float, phi: float) -> float:
    """Dual truncated* fiducial density for the reduced normal composite."""
    _check_nonneg(y, phi)
    return math.sqrt(2 / math.pi) * math.exp(-(y * y + phi * phi) / 2) * math.sinh(y * phi)


def reciprocal_density(y: float, phi: float) -> float:
    """Density in phi of N(y + phi) - N(y - phi)."""
    _check_nonneg(y, phi)
    return math.sqrt(2 / math.pi) * math.exp(-(y * y + phi * phi) / 2) * math.cosh(y * phi)


def reduced_normal_cdf(y, phi):
    """F_bar(y | phi) = N(y + phi) - N(phi - y)."""
    return special.ndtr(np.add(y, phi)) - special.ndtr(np.subtract(phi, y))


def reciprocal_normal_cdf(phi, y):
    """F_bar^R(phi | y) = N(y + phi) - N(y - phi)."""
    return special.ndtr(np.add(y, phi)) - special.ndtr(np.subtract(y, phi))


# ---------------------------------------------------------------------------
# Composite envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    y: np.ndarray
    theta_M: np.ndarray
    F_star_M: np.ndarray

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, ["y", "theta_M", "F_star_M"], [self.y, self.theta_M, self.F_star_M])


def evd_theta_M(y) -> np.ndarray:
    """Closed-form envelope argmax for the EVD composite, -ln(sinh y / y)."""
    y = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(y == 0, 1.0, np.sinh(y) / np.where(y == 0, 1.0, y))
    return -np.log(r)


def _argmax_row(fam: ParametricFamily, y: float, theta: np.ndarray, row: np.ndarray,
                xtol: float) -> tuple[float, float]:
    k = int(np.argmax(row))
    if k == 0 or k == theta.size - 1 or not (row[k] > row[k - 1] and row[k] > row[k + 1]):
        return float(theta[k]), float(row[k])
    res = optimize.minimize_scalar(lambda t: -float(fam.cdf(y, t)),
                                   bracket=(theta[k - 1], theta[k], theta[k + 1]),
                                   method="golden", options={"xtol": xtol})
    return float(res.x), float(-res.fun)


def composite_envelope(surface: FiducialSurface, xtol: float = 1e-9) -> Envelope:
    """Per y-node maximum of m*(theta | y) over theta, grid argmax then golden section."""
    fam = surface.family
    th = surface.theta_nodes
    tm, fm = [], []
    for y, row in zip(surface.x_nodes, np.asarray(surface.values)):
        t, f = _argmax_row(fam, float(y), th, row, xtol)
        tm.append(t)
        fm.append(f)
    return Envelope(surface.x_nodes.copy(), np.array(tm), np.array(fm))


def envelope_at(family: ParametricFamily, y: float, theta_range: tuple[float, float],
                n: int = 2001, xtol: float = 1e-9) -> tuple[float, float]:
    """(theta_M, F*_M) at a single y, scanning ``theta_range``."""
    th = np.linspace(*theta_range, n)
    row = np.asarray(family.cdf(y, th), dtype=float)
    return _argmax_row(family, y, th, row, xtol)
