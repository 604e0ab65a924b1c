"""Grid-sampled fiducial surface F(x, theta) and its sections.

Columns of the value matrix are random distributions (theta-sections); rows
are fiducial measures (x-sections). Both read the same family evaluations, so
the geometric identity holds exactly at grid nodes.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .csvio import fmt as _fmt
from .errors import DomainError, InvalidFamilyError
from .families import ParametricFamily

DEFAULT_NODES = 1001
MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    x_nodes: np.ndarray
    theta_nodes: np.ndarray

    def __post_init__(self):
        for name in ("x_nodes", "theta_nodes"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size < 3:
                raise DomainError(f"{name} needs at least 3 nodes")
            if not np.all(np.diff(arr) > 0):
                raise DomainError(f"{name} must be strictly increasing")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, x_range, theta_range, nx: int = DEFAULT_NODES, ntheta: int | None = None) -> "Grid":
        ntheta = nx if ntheta is None else ntheta
        return cls(np.linspace(*x_range, int(nx)), np.linspace(*theta_range, int(ntheta)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.x_nodes.size, self.theta_nodes.size


def auto_grid(family: ParametricFamily, n: int = DEFAULT_NODES, ntheta: int | None = None,
              symmetric_theta: bool = False) -> Grid:
    """Uniform grid over the family's truncation windows.

    With ``symmetric_theta`` the theta span is made symmetric about 0 so that
    +theta / -theta node pairs exist exactly (needed for even/odd work).
    """
    ntheta = n if ntheta is None else ntheta
    x = np.linspace(family.x_window.lo, family.x_window.hi, n)
    lo, hi = family.theta_window
    if symmetric_theta:
        half = max(abs(lo), abs(hi))
        if ntheta % 2 == 0:
            ntheta += 1
        theta = symmetric_nodes(half, ntheta)
    else:
        theta = np.linspace(lo, hi, ntheta)
    return Grid(x, theta)


def symmetric_nodes(half_width: float, n: int) -> np.ndarray:
    """Odd-length node set with nodes[k] == -nodes[-1-k] exactly and a node at 0."""
    if n % 2 == 0:
        raise DomainError("symmetric node sets need an odd node count")
    pos = np.linspace(0.0, half_width, n // 2 + 1)
    return np.concatenate([-pos[:0:-1], pos])


@dataclass(frozen=True)
class FiducialSurface:
    grid: Grid
    values: np.ndarray
    family: ParametricFamily

    @property
    def x_nodes(self) -> np.ndarray:
        return self.grid.x_nodes

    @property
    def theta_nodes(self) -> np.ndarray:
        return self.grid.theta_nodes

    def to_csv(self, path: str | Path) -> None:
        """Header row of theta nodes, first column x nodes, body row-major."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x\\theta"] + [_fmt(t) for t in self.theta_nodes])
            for xi, row in zip(self.x_nodes, self.values):
                w.writerow([_fmt(xi)] + [_fmt(v) for v in row])


def _check_in_domain(family: ParametricFamily, grid: Grid) -> None:
    for nodes, dom, name in (
        (grid.x_nodes, family.x_domain, "x"),
        (grid.theta_nodes, family.theta_domain, "theta"),
    ):
        if not dom.contains(nodes):
            raise DomainError(f"{name} grid [{nodes[0]}, {nodes[-1]}] leaves domain {tuple(dom)}")


def build_surface(family: ParametricFamily, grid: Grid) -> FiducialSurface:
    _check_in_domain(family, grid)
    values = np.asarray(family.cdf(grid.x_nodes[:, None], grid.theta_nodes[None, :]), dtype=float)
    values = np.array(np.broadcast_to(values, grid.shape))
    if not np.all(np.isfinite(values)):
        raise InvalidFamilyError("family returned non-finite probabilities")
    if values.min() < -MONOTONE_TOL or values.max() > 1.0 + MONOTONE_TOL:
        raise InvalidFamilyError("family returned values outside [0, 1]")
    drops = np.diff(values, axis=0)
    if drops.size and drops.min() < -MONOTONE_TOL:
        i, j = np.unravel_index(np.argmin(drops), drops.shape)
        raise InvalidFamilyError(
            f"RD at theta={grid.theta_nodes[j]} decreases in x near x={grid.x_nodes[i]} "
            f"(drop {drops[i, j]:.3g}); not a distribution function"
        )
    values.setflags(write=False)
    return FiducialSurface(grid, values, family)


class Axis(str, enum.Enum):
    THETA_SECTION = "theta_section"
    X_SECTION = "x_section"


@dataclass(frozen=True)
class Section:
    """One-dimensional cut of the surface.

    ``source`` re-evaluates the underlying family along the section's free
    coordinate; it lets downstream root finding refine between nodes.
    """

    axis: Axis
    anchor: float
    coords: np.ndarray
    values: np.ndarray
    source: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if c.shape != v.shape or c.ndim != 1:
            raise DomainError("section coords and values must be equal-length vectors")
        if c.size > 1 and not np.all(np.diff(c) > 0):
            raise DomainError("section coordinates must be strictly increasing")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "values", v)

    @property
    def samples(self) -> np.ndarray:
        return self.values

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.coords.tolist(), self.values.tolist()))


def _span_check(nodes: np.ndarray, v: float, name: str) -> None:
    if not nodes[0] <= v <= nodes[-1]:
        raise DomainError(f"{name}={v} outside grid span [{nodes[0]}, {nodes[-1]}]")


def theta_section(surface: FiducialSurface, theta0: float) -> Section:
    """The RD F_r(x | theta0) at every x-node."""
    nodes = surface.theta_nodes
    _span_check(nodes, theta0, "theta0")
    fam = surface.family
    hit = np.flatnonzero(nodes == theta0)
    if hit.size:
        vals = surface.values[:, hit[0]]
    else:
        vals = np.broadcast_to(fam.cdf(surface.x_nodes, theta0), surface.x_nodes.shape)
    return Section(Axis.THETA_SECTION, float(theta0), surface.x_nodes, np.array(vals),
                   source=lambda x: fam.cdf(x, theta0))


def x_section(surface: FiducialSurface, x0: float) -> Section:
    """The fiducial measure M_f(theta | x0) = F_r(x0 | theta) at every theta-node."""
    nodes = surface.x_nodes
    _span_check(nodes, x0, "x0")
    fam = surface.family
    hit = np.flatnonzero(nodes == x0)
    if hit.size:
        vals = surface.values[hit[0], :]
    else:
        vals = np.broadcast_to(fam.cdf(x0, surface.theta_nodes), surface.theta_nodes.shape)
    return Section(Axis.X_SECTION, float(x0), surface.theta_nodes, np.array(vals),
                   source=lambda t: fam.cdf(x0, t))


def section_complement(section: Section) -> Section:
    src = section.source
    comp_src = None if src is None else (lambda c: 1.0 - np.asarray(src(c)))
    return Section(section.axis, section.anchor, section.coords, 1.0 - section.values, source=comp_src)
