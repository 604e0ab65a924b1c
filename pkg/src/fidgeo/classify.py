"""Monotonicity of fiducial sections, RD intersections, touching and completeness.

Grid versions of the non-intersection criteria: an x-section that rises and
falls marks intersecting RDs, plateaus mark touching (or interval
intersections, depending on the neighbouring x-nodes), and completeness is
read off the extreme theta columns.

Step classification is tail-relative: a consecutive difference counts as flat
when ``|d| <= eps_plateau * min(v, 1 - v)`` on the larger side of the step.
Flat runs at the section ends that sit within ``eps_tail`` of 0 or 1 are
truncation saturation, not plateaus.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from .errors import InconsistencyError, InsufficientDataError
from .families import Direction
from .roots import level_set, refine_run_end
from .surface import FiducialSurface, Section, x_section


@dataclass(frozen=True)
class Tolerances:
    eps_mono: float = 1e-9
    eps_plateau: float = 1e-7
    delta_complete: float = 1e-3
    eps_tail: float = 1e-6


DEFAULT_TOL = Tolerances()


class MonotoneKind(str, enum.Enum):
    STRICTLY_INCREASING = "strictly_increasing"
    STRICTLY_DECREASING = "strictly_decreasing"
    MONOTONE_WITH_PLATEAUS = "monotone_with_plateaus"
    CONSTANT = "constant"
    NON_MONOTONE = "non_monotone"


@dataclass(frozen=True)
class EqualValueWitness:
    theta_pair: tuple[float, float]
    level: float
    not_in_constant_interval: bool
    values: tuple[float, float] = (float("nan"), float("nan"))


@dataclass(frozen=True)
class Plateau:
    lo: float
    hi: float
    level: float
    nodes: tuple[int, int]  # first and last node index of the flat run


@dataclass(frozen=True)
class MonotoneClass:
    kind: MonotoneKind
    direction: Direction | None = None
    plateaus: tuple[Plateau, ...] = ()
    witness: EqualValueWitness | None = None

    @property
    def is_monotone(self) -> bool:
        return self.kind is not MonotoneKind.NON_MONOTONE

    @property
    def plateau_intervals(self) -> list[tuple[float, float]]:
        return [(p.lo, p.hi) for p in self.plateaus]


def _tail_distance(v: np.ndarray) -> np.ndarray:
    return np.clip(np.minimum(v, 1.0 - v), 0.0, 0.5)


def step_signs(values: np.ndarray, eps_plateau: float) -> np.ndarray:
    """Sign of each consecutive difference, 0 where the step is flat."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    scale = np.maximum(_tail_distance(v[:-1]), _tail_distance(v[1:]))
    flat = np.abs(d) <= eps_plateau * scale
    return np.where(flat, 0, np.sign(d)).astype(np.int8)


def _near_bound(v: float, eps_tail: float) -> float | None:
    if v <= eps_tail:
        return 0.0
    if v >= 1.0 - eps_tail:
        return 1.0
    return None


def _saturated_ends(values: np.ndarray, eps_tail: float) -> tuple[int, int]:
    """Node range [start, end] left after trimming the saturated tails at both ends.

    Steps between two values inside the same eps_tail band are round-off in
    the distribution tail, whatever their sign.
    """
    n = values.size
    start = 0
    b0 = _near_bound(values[0], eps_tail)
    if b0 is not None:
        while start < n - 1 and _near_bound(values[start + 1], eps_tail) == b0:
            start += 1
    end = n - 1
    b1 = _near_bound(values[-1], eps_tail)
    if b1 is not None:
        while end > start and _near_bound(values[end - 1], eps_tail) == b1:
            end -= 1
    return start, end


def _flat_runs(signs: np.ndarray, start: int, end: int) -> list[tuple[int, int]]:
    """Maximal node runs [s, e] (e > s) joined by flat steps, within [start, end]."""
    runs = []
    k = start
    while k < end:
        if signs[k] == 0:
            s = k
            while k < end and signs[k] == 0:
                k += 1
            runs.append((s, k))
        else:
            k += 1
    return runs


def _plateau(section: Section, s: int, e: int, tol: Tolerances) -> Plateau:
    c, v = section.coords, section.values
    level = float(np.mean(v[s:e + 1]))
    lo, hi = float(c[s]), float(c[e])
    src = section.source
    if src is not None:
        ftol = min(tol.eps_plateau * float(_tail_distance(np.array(level))), 1e-12)
        if s > 0:
            lo = refine_run_end(src, c[s], c[s - 1], level, ftol)
        if e < c.size - 1:
            hi = refine_run_end(src, c[e], c[e + 1], level, ftol)
    return Plateau(lo, hi, level, (s, e))


def _crossing(section: Section, k0: int, k1: int, level: float) -> float:
    """Point in the cell [k0, k1] where the section passes through ``level``."""
    c, v = section.coords, section.values
    if v[k0] == level:
        return float(c[k0])
    if v[k1] == level:
        return float(c[k1])
    src = section.source
    if src is not None:
        try:
            return float(optimize.bisect(lambda t: float(src(t)) - level, c[k0], c[k1], xtol=1e-13))
        except ValueError:
            pass
    t = (level - v[k0]) / (v[k1] - v[k0])
    return float(c[k0] + t * (c[k1] - c[k0]))


def _branch_crossing(section: Section, nodes: range, level: float) -> float:
    v = section.values
    ks = list(nodes)
    for a, b in zip(ks[:-1], ks[1:]):
        lo, hi = sorted((v[a], v[b]))
        if lo <= level <= hi:
            return _crossing(section, min(a, b), max(a, b), level)
    raise InconsistencyError("monotone branch does not bracket the witness level", section.anchor)


def _witness(section: Section, signs: np.ndarray, start: int, end: int,
             tol: Tolerances) -> EqualValueWitness:
    """Equal-value pair across the first interior extremum of a non-monotone section."""
    v = section.values
    idx = [k for k in range(start, end) if signs[k] != 0]
    s0 = signs[idx[0]]
    q = next(k for k in idx if signs[k] == -s0)
    a = idx[0]
    e = max(k for k in idx if k < q and signs[k] == s0) + 1
    c = q + 1
    while c < end and signs[c] != s0:
        c += 1
    ext = v[e]
    base = max(v[a], v[c]) if s0 > 0 else min(v[a], v[c])
    level = 0.5 * (ext + base)
    t1 = _branch_crossing(section, range(a, e + 1), level)
    t2 = _branch_crossing(section, range(q, c + 1), level)
    src = section.source
    if src is not None:
        m1, m2 = float(src(t1)), float(src(t2))
    else:
        m1 = m2 = level
    return EqualValueWitness(
        theta_pair=(t1, t2),
        level=float(level),
        not_in_constant_interval=bool(abs(ext - level) > tol.eps_plateau),
        values=(m1, m2),
    )


def classify_section(section: Section, eps_mono: float = DEFAULT_TOL.eps_mono,
                     eps_plateau: float = DEFAULT_TOL.eps_plateau,
                     eps_tail: float = DEFAULT_TOL.eps_tail) -> MonotoneClass:
    """Monotone class of a sampled section."""
    tol = Tolerances(eps_mono=eps_mono, eps_plateau=eps_plateau, eps_tail=eps_tail)
    return _classify(section, tol)


def _classify(section: Section, tol: Tolerances) -> MonotoneClass:
    v = section.values
    if v.size < 3:
        raise InsufficientDataError(f"section has {v.size} samples; need at least 3")
    signs = step_signs(v, tol.eps_plateau)
    start, end = _saturated_ends(v, tol.eps_tail)
    interior = signs[start:end]
    has_up = bool(np.any(interior > 0))
    has_down = bool(np.any(interior < 0))
    if has_up and has_down:
        return MonotoneClass(MonotoneKind.NON_MONOTONE, witness=_witness(section, signs, start, end, tol))
    if not has_up and not has_down:
        return MonotoneClass(MonotoneKind.CONSTANT)
    direction = Direction.INCREASING if has_up else Direction.DECREASING
    plateaus = tuple(_plateau(section, s, e, tol) for s, e in _flat_runs(signs, start, end))
    if plateaus:
        return MonotoneClass(MonotoneKind.MONOTONE_WITH_PLATEAUS, direction, plateaus)
    kind = MonotoneKind.STRICTLY_INCREASING if has_up else MonotoneKind.STRICTLY_DECREASING
    return MonotoneClass(kind, direction)


# ---------------------------------------------------------------------------
# Intersections
# ---------------------------------------------------------------------------


class IntersectionKind(str, enum.Enum):
    ORDINARY = "ordinary"
    WEAK = "weak"
    PROPER_INTERVAL = "proper_interval"
    COMPLETE_INTERVAL_ENDPOINT = "complete_interval_endpoint"


@dataclass(frozen=True)
class IntersectionRecord:
    x0: float
    thetas: tuple[float, ...]
    kind: IntersectionKind
    intervals: tuple[tuple[float, float], ...] = ()
    level: float | None = None

    def to_json(self) -> dict:
        out: dict[str, Any] = {"x0": self.x0, "kind": self.kind.value, "thetas": list(self.thetas)}
        if self.intervals:
            out["intervals"] = [list(iv) for iv in self.intervals]
        if self.level is not None:
            out["level"] = self.level
        return out


@dataclass(frozen=True)
class TouchingSegment:
    x_range: tuple[float, float]
    x_nodes: tuple[float, ...]
    theta_L: tuple[float, ...]
    theta_U: tuple[float, ...]
    change_points: tuple[float, ...]

    @property
    def degenerate(self) -> bool:
        return self.x_range[0] == self.x_range[1]

    def theta_interval_at(self, x: float) -> tuple[float, float]:
        """Value of the step functions [theta_L(x), theta_U(x)]."""
        k = int(np.searchsorted(self.x_nodes, x, side="right")) - 1
        k = min(max(k, 0), len(self.x_nodes) - 1)
        return self.theta_L[k], self.theta_U[k]

    def to_json(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "x_nodes": list(self.x_nodes),
            "theta_L": list(self.theta_L),
            "theta_U": list(self.theta_U),
            "change_points": list(self.change_points),
        }


def _saturated_columns(values: np.ndarray, eps_tail: float) -> np.ndarray:
    return np.all(values <= eps_tail, axis=0) | np.all(values >= 1.0 - eps_tail, axis=0)


def coincident_column_pairs(values: np.ndarray, eps: float, eps_tail: float = DEFAULT_TOL.eps_tail
                            ) -> list[tuple[int, int]]:
    """Column pairs equal at every row within ``eps``.

    Columns wholly saturated at 0 or 1 are limiting RDs and are skipped.
    Candidate pairs are pre-filtered by column sums, so the scan is far below
    O(n^2) for families without coincidences.
    """
    m, n = values.shape
    skip = _saturated_columns(values, eps_tail)
    sums = values.sum(axis=0)
    order = np.argsort(sums, kind="stable")
    pairs = []
    for a in range(n):
        j = order[a]
        if skip[j]:
            continue
        for b in range(a + 1, n):
            k = order[b]
            if sums[k] - sums[j] > m * eps:
                break
            if skip[k]:
                continue
            if np.max(np.abs(values[:, k] - values[:, j])) <= eps:
                pairs.append((int(min(j, k)), int(max(j, k))))
    return sorted(pairs)


@dataclass(frozen=True)
class OracleResult:
    non_intersecting: bool
    crossing_pair: tuple[int, int] | None = None
    weak_pair: tuple[int, int] | None = None


def pairwise_intersection_oracle(surface: FiducialSurface, eps: float = DEFAULT_TOL.eps_mono,
                                 eps_tail: float = DEFAULT_TOL.eps_tail) -> OracleResult:
    """Brute-force O(n^2 m) RD comparison.

    Two theta-sections intersect when their difference takes both signs
    beyond ``eps`` across x (ordinary) or stays within ``eps`` everywhere
    (weak). Shares no code with the section-classification route.
    """
    V = np.asarray(surface.values)
    skip = _saturated_columns(V, eps_tail)
    n = V.shape[1]
    for j in range(n - 1):
        D = V[:, j + 1:] - V[:, [j]]
        cross = (D.max(axis=0) > eps) & (D.min(axis=0) < -eps)
        if cross.any():
            return OracleResult(False, crossing_pair=(j, j + 1 + int(np.argmax(cross))))
        if not skip[j]:
            weak = (np.abs(D).max(axis=0) <= eps) & ~skip[j + 1:]
            if weak.any():
                return OracleResult(False, weak_pair=(j, j + 1 + int(np.argmax(weak))))
    return OracleResult(True)


@dataclass
class _RowAnalysis:
    index: int
    x0: float
    cls: MonotoneClass
    section: Section
    crossings: list[float] = field(default_factory=list)
    crossing_intervals: list[tuple[float, float]] = field(default_factory=list)
    plateau_kinds: list[str] = field(default_factory=list)


def _plateau_kind(surface: FiducialSurface, i: int, p: Plateau, eps: float) -> str:
    """'touching', 'proper_interval' or 'weak' from the flanking x-nodes.

    The RDs at the refined plateau ends are compared at the neighbouring
    x-nodes: same-side inequality on both sides is touching, opposite sides
    is an interval intersection, equality on either side is weak.
    """
    x = surface.x_nodes
    fam = surface.family
    sides = []
    for k in (i - 1, i + 1):
        if 0 <= k < x.size:
            d = float(fam.cdf(x[k], p.hi)) - float(fam.cdf(x[k], p.lo))
            sides.append(0 if abs(d) <= eps else int(np.sign(d)))
    if not sides or any(d == 0 for d in sides):
        return "weak"
    if len(sides) == 1 or sides[0] == sides[1]:
        return "touching"
    return "proper_interval"


def _analyze(surface: FiducialSurface, tol: Tolerances) -> tuple[list[_RowAnalysis], list[tuple[int, int]]]:
    pairs = coincident_column_pairs(np.asarray(surface.values), tol.eps_mono, tol.eps_tail)
    rows = []
    for i, x0 in enumerate(surface.x_nodes):
        sec = x_section(surface, float(x0))
        cls = _classify(sec, tol)
        ra = _RowAnalysis(i, float(x0), cls, sec)
        if cls.kind is MonotoneKind.NON_MONOTONE:
            pts, ivs = level_set(sec.coords, sec.values, cls.witness.level, sec.source, xtol=1e-12)
            ra.crossings, ra.crossing_intervals = pts, ivs
        elif cls.plateaus:
            ra.plateau_kinds = [_plateau_kind(surface, i, p, tol.eps_mono) for p in cls.plateaus]
        rows.append(ra)
    return rows, pairs


def _row_has_weak_pair(V: np.ndarray, i: int, pairs: list[tuple[int, int]], eps_tail: float) -> bool:
    for j, _k in pairs:
        if _near_bound(V[i, j], eps_tail) is None:
            return True
    return False


def _records(surface: FiducialSurface, rows: list[_RowAnalysis], pairs, tol: Tolerances
             ) -> list[IntersectionRecord]:
    V = np.asarray(surface.values)
    out = []
    for ra in rows:
        cls = ra.cls
        if cls.kind is MonotoneKind.NON_MONOTONE:
            kind = (IntersectionKind.WEAK if _row_has_weak_pair(V, ra.index, pairs, tol.eps_tail)
                    else IntersectionKind.ORDINARY)
            out.append(IntersectionRecord(ra.x0, tuple(sorted(ra.crossings)), kind,
                                          tuple(ra.crossing_intervals), cls.witness.level))
        elif cls.kind is MonotoneKind.CONSTANT:
            level = float(np.mean(ra.section.values))
            if _near_bound(level, tol.eps_tail) is None:
                th = surface.theta_nodes
                out.append(IntersectionRecord(ra.x0, (), IntersectionKind.COMPLETE_INTERVAL_ENDPOINT,
                                              ((float(th[0]), float(th[-1])),), level))
        else:
            for p, pk in zip(cls.plateaus, ra.plateau_kinds):
                if pk == "touching":
                    continue
                kind = IntersectionKind.PROPER_INTERVAL if pk == "proper_interval" else IntersectionKind.WEAK
                out.append(IntersectionRecord(ra.x0, (), kind, ((p.lo, p.hi),), p.level))
    return out


def detect_intersections(surface: FiducialSurface, eps: float = DEFAULT_TOL.eps_mono,
                         tol: Tolerances | None = None) -> list[IntersectionRecord]:
    """Intersection records, one per x-node that carries an intersection."""
    tol = tol or Tolerances(eps_mono=eps)
    rows, pairs = _analyze(surface, tol)
    return _records(surface, rows, pairs, tol)


def _segments(rows: list[_RowAnalysis]) -> list[TouchingSegment]:
    open_segs: list[dict] = []
    done: list[dict] = []
    for ra in rows:
        touch = [p for p, k in zip(ra.cls.plateaus, ra.plateau_kinds) if k == "touching"]
        still_open = []
        for seg in open_segs:
            if seg["last_row"] != ra.index - 1:
                done.append(seg)
                continue
            still_open.append(seg)
        open_segs = still_open
        for p in touch:
            host = None
            for seg in open_segs:
                if seg["last_row"] == ra.index - 1:
                    lo, hi = seg["theta_L"][-1], seg["theta_U"][-1]
                    sl, sh = seg["nodes"][-1]
                    if p.nodes[0] <= sh + 1 and p.nodes[1] >= sl - 1:
                        host = seg
                        break
            if host is None:
                host = {"x": [], "theta_L": [], "theta_U": [], "nodes": [], "last_row": None}
                open_segs.append(host)
            host["x"].append(ra.x0)
            host["theta_L"].append(p.lo)
            host["theta_U"].append(p.hi)
            host["nodes"].append(p.nodes)
            host["last_row"] = ra.index
    done.extend(open_segs)
    out = []
    for seg in sorted(done, key=lambda s: s["x"][0]):
        xs, lo, hi = seg["x"], seg["theta_L"], seg["theta_U"]
        change = tuple(xs[k] for k in range(1, len(xs)) if lo[k] != lo[k - 1] or hi[k] != hi[k - 1])
        out.append(TouchingSegment((xs[0], xs[-1]), tuple(xs), tuple(lo), tuple(hi), change))
    return out


def extract_touching_segments(surface: FiducialSurface, eps_plateau: float = DEFAULT_TOL.eps_plateau,
                              tol: Tolerances | None = None) -> list[TouchingSegment]:
    tol = tol or Tolerances(eps_plateau=eps_plateau)
    rows, _ = _analyze(surface, tol)
    return _segments(rows)


# ---------------------------------------------------------------------------
# Completeness and the existence verdict
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryReport:
    orientation: str  # "increasing", "decreasing" or "ambiguous"
    low_theta: float
    high_theta: float
    worst_low: tuple[float, float]  # (x, value) furthest from 0 on the column that should be 0
    worst_high: tuple[float, float]  # (x, value) furthest from 1 on the column that should be 1

    def to_json(self) -> dict:
        return {
            "orientation": self.orientation,
            "low_theta": self.low_theta,
            "high_theta": self.high_theta,
            "worst_low": {"x": self.worst_low[0], "value": self.worst_low[1]},
            "worst_high": {"x": self.worst_high[0], "value": self.worst_high[1]},
        }


def check_completeness(surface: FiducialSurface, delta: float = DEFAULT_TOL.delta_complete
                       ) -> tuple[bool, BoundaryReport]:
    V = np.asarray(surface.values)
    x, th = surface.x_nodes, surface.theta_nodes
    first, last = V[:, 0], V[:, -1]
    net = float(np.mean(last) - np.mean(first))
    if abs(net) <= DEFAULT_TOL.eps_mono:
        orientation, zero_col, one_col = "ambiguous", first, last
        zt, ot = th[0], th[-1]
    elif net > 0:
        orientation, zero_col, one_col, zt, ot = "increasing", first, last, th[0], th[-1]
    else:
        orientation, zero_col, one_col, zt, ot = "decreasing", last, first, th[-1], th[0]
    i0 = int(np.argmax(zero_col))
    i1 = int(np.argmin(one_col))
    complete = orientation != "ambiguous" and zero_col[i0] <= delta and one_col[i1] >= 1.0 - delta
    report = BoundaryReport(orientation, float(zt), float(ot),
                            (float(x[i0]), float(zero_col[i0])), (float(x[i1]), float(one_col[i1])))
    return bool(complete), report


@dataclass(frozen=True)
class ExistenceVerdict:
    fd_exists: bool
    non_intersecting: bool
    complete: bool
    completable_hint: bool
    intersections: tuple[IntersectionRecord, ...]
    touching_segments: tuple[TouchingSegment, ...]
    boundary_report: BoundaryReport
    all_sections_monotone: bool

    @property
    def evidence(self) -> list:
        return [*self.intersections, *self.touching_segments, self.boundary_report]

    def to_json(self) -> dict:
        return {
            "fd_exists": self.fd_exists,
            "non_intersecting": self.non_intersecting,
            "complete": self.complete,
            "completable_hint": self.completable_hint,
            "all_sections_monotone": self.all_sections_monotone,
            "intersections": [r.to_json() for r in self.intersections],
            "touching_segments": [s.to_json() for s in self.touching_segments],
            "boundary_report": self.boundary_report.to_json(),
        }


def _completable(surface: FiducialSurface, report: BoundaryReport, delta: float) -> bool:
    dom = surface.family.theta_domain
    th = surface.theta_nodes
    sides = []
    if report.worst_low[1] > delta:
        sides.append(report.low_theta)
    if report.worst_high[1] < 1.0 - delta:
        sides.append(report.high_theta)
    if report.orientation == "ambiguous" or not sides:
        return False
    for t in sides:
        room = dom.lo < th[0] if t == th[0] else dom.hi > th[-1]
        if not room:
            return False
    return True


def fd_existence_verdict(surface: FiducialSurface, tolerances: Tolerances = DEFAULT_TOL
                         ) -> ExistenceVerdict:
    """FD exists iff the RDs are non-intersecting and complete."""
    tol = tolerances
    rows, pairs = _analyze(surface, tol)
    records = _records(surface, rows, pairs, tol)
    for ra in rows:
        if not ra.cls.is_monotone and len(ra.crossings) + len(ra.crossing_intervals) < 2:
            raise InconsistencyError(
                f"non-monotone x-section at x={ra.x0} but fewer than two theta values at the "
                "witness level; tolerances are miscalibrated for this grid", ra.x0)
    all_monotone = all(ra.cls.is_monotone for ra in rows)
    ow = [r for r in records if r.kind in (IntersectionKind.ORDINARY, IntersectionKind.WEAK)
          and r.thetas]
    if all_monotone != (not ow):
        bad = next((r.x0 for r in ow), None)
        raise InconsistencyError("monotone sections and intersection records disagree", bad)
    segs = _segments(rows)
    complete, report = check_completeness(surface, tol.delta_complete)
    non_intersecting = not records
    hint = non_intersecting and not complete and _completable(surface, report, tol.delta_complete)
    return ExistenceVerdict(
        fd_exists=non_intersecting and complete,
        non_intersecting=non_intersecting,
        complete=complete,
        completable_hint=hint,
        intersections=tuple(records),
        touching_segments=tuple(segs),
        boundary_report=report,
        all_sections_monotone=all_monotone,
    )
