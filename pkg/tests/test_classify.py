import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidgeo.classify import (
    IntersectionKind,
    MonotoneKind,
    Tolerances,
    check_completeness,
    classify_section,
    coincident_column_pairs,
    detect_intersections,
    extract_touching_segments,
    fd_existence_verdict,
    pairwise_intersection_oracle,
    step_signs,
)
from fidgeo.errors import InsufficientDataError
from fidgeo.families import CallableFamily, Direction, builtin_fixtures
from fidgeo.roots import level_set
from fidgeo.surface import Axis, Grid, Section, auto_grid, build_surface, section_complement, x_section


def _sec(values, coords=None):
    values = np.asarray(values, dtype=float)
    coords = np.arange(values.size, dtype=float) if coords is None else coords
    return Section(Axis.X_SECTION, 0.0, coords, values)


class TestClassifySection:
    def test_point_a_non_monotone(self, ju_surface):
        c = classify_section(x_section(ju_surface, 1.25))
        assert c.kind is MonotoneKind.NON_MONOTONE
        w = c.witness
        t1, t2 = w.theta_pair
        assert t1 < t2
        assert abs(w.values[0] - w.values[1]) <= 1e-9
        assert w.not_in_constant_interval
        # the witness level is attained three times, once on each linear piece
        sec = x_section(ju_surface, 1.25)
        pts, _ = level_set(sec.coords, sec.values, w.level, sec.source)
        assert len(pts) == 3
        assert pts[0] < -0.5 < pts[1] < 0.5 < pts[2]

    def test_below_vertex_monotone(self, ju_surface):
        sec = x_section(ju_surface, 0.5)
        assert classify_section(sec).kind is MonotoneKind.STRICTLY_DECREASING
        assert classify_section(section_complement(sec)).kind is MonotoneKind.STRICTLY_INCREASING

    @pytest.mark.parametrize("x0", [-3.0, 0.0, 0.7, 3.9])
    def test_normal_strictly_increasing(self, normal_surface, x0):
        assert classify_section(x_section(normal_surface, x0)).kind is MonotoneKind.STRICTLY_INCREASING

    def test_plateau(self):
        c = classify_section(_sec([0.1, 0.2, 0.3, 0.3, 0.3, 0.5, 0.6]))
        assert c.kind is MonotoneKind.MONOTONE_WITH_PLATEAUS
        assert c.direction is Direction.INCREASING
        assert c.plateau_intervals == [(2.0, 4.0)]

    def test_constant(self):
        assert classify_section(_sec([0.4] * 5)).kind is MonotoneKind.CONSTANT

    def test_saturated_tails_ignored(self):
        v = [0.0, 0.0, 0.0, 0.2, 0.5, 0.9, 1.0, 1.0]
        assert classify_section(_sec(v)).kind is MonotoneKind.STRICTLY_INCREASING

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            classify_section(_sec([0.1, 0.2]))

    def test_tail_relative_flatness(self):
        # steps of 1e-12 deep in a tail are real changes, not plateaus
        v = np.array([1e-10, 2e-10, 3e-10, 0.1, 0.2])
        assert np.all(step_signs(v, 1e-7) == 1)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=3, max_size=40))
def test_witness_whenever_non_monotone(vals):
    c = classify_section(_sec(vals))
    assert (c.witness is not None) == (c.kind is MonotoneKind.NON_MONOTONE)
    if c.witness is not None:
        a, b = c.witness.theta_pair
        assert a < b
        inside = [v for t, v in zip(range(len(vals)), vals) if a < t < b]
        assert any(abs(v - c.witness.level) > 1e-7 for v in inside)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=40))
def test_sorted_is_monotone(vals):
    assert classify_section(_sec(sorted(vals))).is_monotone


@settings(max_examples=60, deadline=None)
@given(st.floats(0.85, 3.45))
def test_ju_intersection_region(x0):
    from fidgeo.families import JoinedUniform
    fam = JoinedUniform(1.0, 4.0, 0.5)
    g = Grid(np.array([x0 - 0.01, x0, x0 + 0.01]), np.linspace(-12, 8, 2001))
    c = classify_section(x_section(build_surface(fam, g), x0))
    assert c.kind is MonotoneKind.NON_MONOTONE


class TestIntersections:
    def test_joined_uniform_region(self, ju_surface):
        recs = detect_intersections(ju_surface)
        xs = np.array([r.x0 for r in recs])
        assert recs and all(r.kind is IntersectionKind.ORDINARY for r in recs)
        nodes = ju_surface.x_nodes
        expected = nodes[(nodes > 5 / 6) & (nodes < 3.5)]
        assert np.array_equal(xs, expected)
        assert all(len(r.thetas) >= 2 for r in recs)

    def test_abs_normal_weak(self, abs_normal_surface):
        recs = detect_intersections(abs_normal_surface)
        assert recs and all(r.kind is IntersectionKind.WEAK for r in recs)
        pairs = coincident_column_pairs(np.asarray(abs_normal_surface.values), 1e-9)
        n = abs_normal_surface.theta_nodes.size
        assert all(j + k == n - 1 for j, k in pairs)

    def test_evd_none(self, evd_surface):
        assert detect_intersections(evd_surface) == []

    def test_complete_interval_endpoint(self):
        fam = CallableFamily(lambda x, t: np.clip(0.5 + (x - 0.0) * (1 + t), 0, 1), (-1, 1), (0, 1))
        s = build_surface(fam, Grid(np.linspace(-1, 1, 21), np.linspace(0, 1, 11)))
        kinds = {r.kind for r in detect_intersections(s)}
        assert IntersectionKind.COMPLETE_INTERVAL_ENDPOINT in kinds

    def test_proper_interval(self):
        # RDs for theta in [0.4, 0.6] coincide at x = 0 and swap sides across it
        def cdf(x, t):
            slope = 1.0 + 4 * np.clip(t - 0.4, 0.0, 0.2)
            shift = np.where(t < 0.4, t - 0.4, np.where(t > 0.6, t - 0.6, 0.0))
            return np.clip(0.5 + slope * x / 4 + shift / 4, 0, 1)
        fam = CallableFamily(cdf, (-1, 1), (0, 1))
        s = build_surface(fam, Grid(np.linspace(-1, 1, 41), np.linspace(0, 1, 101)))
        recs = [r for r in detect_intersections(s) if r.x0 == 0.0]
        assert recs and recs[0].kind is IntersectionKind.PROPER_INTERVAL
        lo, hi = recs[0].intervals[0]
        assert lo == pytest.approx(0.4, abs=1e-6) and hi == pytest.approx(0.6, abs=1e-6)


class TestTouching:
    def test_evd_none(self, evd_surface):
        assert extract_touching_segments(evd_surface) == []

    def test_flattened_fixture(self, flat_surface):
        segs = extract_touching_segments(flat_surface)
        assert len(segs) == 1
        seg = segs[0]
        assert seg.degenerate and seg.x_range == (0.0, 0.0)
        assert seg.theta_L[0] == pytest.approx(0.2, abs=1e-8)
        assert seg.theta_U[0] == pytest.approx(0.4, abs=1e-8)

    def test_joined_uniform_no_false_positive(self, ju_surface):
        assert extract_touching_segments(ju_surface) == []

    def test_gapped_segment_spans_x(self, gapped):
        s = build_surface(gapped, auto_grid(gapped, 201))
        segs = extract_touching_segments(s)
        assert len(segs) == 1
        seg = segs[0]
        for x in seg.x_nodes[::20]:
            lo, hi = seg.theta_interval_at(x)
            assert lo <= hi
            assert lo == pytest.approx(-1 - x, abs=1e-8) and hi == pytest.approx(1 - x, abs=1e-8)
        assert list(seg.change_points) == sorted(seg.change_points)


class TestCompleteness:
    def test_normal_complete(self, normal):
        s = build_surface(normal, Grid(np.linspace(-4, 4, 81), np.linspace(-8, 8, 161)))
        ok, rep = check_completeness(s, 1e-3)
        assert ok and rep.orientation == "increasing"

    def test_reduced_incomplete(self, reduced_normal_surface):
        ok, rep = check_completeness(reduced_normal_surface)
        assert not ok
        assert rep.orientation == "decreasing"
        assert rep.worst_high[1] < 1 - 1e-3

    def test_constant_incomplete(self):
        fam = CallableFamily(lambda x, t: 0.5 + 0 * x * t, (-1, 1), (-1, 1))
        s = build_surface(fam, Grid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)))
        assert check_completeness(s)[0] is False


class TestVerdict:
    def test_evd(self, evd_surface):
        v = fd_existence_verdict(evd_surface)
        assert v.fd_exists and v.non_intersecting and v.complete

    def test_joined_uniform(self, ju_surface):
        v = fd_existence_verdict(ju_surface)
        assert not v.fd_exists and not v.non_intersecting

    def test_reduced(self, reduced_normal_surface):
        v = fd_existence_verdict(reduced_normal_surface)
        assert (v.fd_exists, v.non_intersecting, v.complete) == (False, True, False)

    def test_completable_hint(self, normal):
        s = build_surface(normal, Grid(np.linspace(-2, 2, 41), np.linspace(-1, 1, 41)))
        v = fd_existence_verdict(s)
        assert v.non_intersecting and not v.complete and v.completable_hint

    def test_json_layout(self, ju_surface):
        js = fd_existence_verdict(ju_surface).to_json()
        for key in ("fd_exists", "non_intersecting", "complete", "intersections",
                    "touching_segments", "boundary_report"):
            assert key in js
        assert set(js["intersections"][0]) >= {"x0", "kind", "thetas"}

    def test_tolerance_override(self, flat_surface):
        v = fd_existence_verdict(flat_surface, Tolerances(eps_plateau=1e-7))
        assert v.fd_exists


@pytest.mark.parametrize("fx", builtin_fixtures(), ids=lambda f: f.name)
def test_monotone_sections_iff_non_intersecting(fx):
    s = build_surface(fx.family, auto_grid(fx.family, 101, symmetric_theta=fx.symmetric_theta))
    v = fd_existence_verdict(s)
    ow = [r for r in v.intersections if r.kind in (IntersectionKind.ORDINARY, IntersectionKind.WEAK)]
    assert v.all_sections_monotone == (not ow)
    assert pairwise_intersection_oracle(s).non_intersecting == v.non_intersecting
    assert v.fd_exists == (v.non_intersecting and v.complete)


@settings(max_examples=60, deadline=None)
@given(t1=st.floats(-3.0, -0.6), t2=st.floats(0.6, 2.0))
def test_crossing_rds_give_non_monotone_section(t1, t2):
    # the semirange-4 RD at t1 and the semirange-1 RD at t2 cross at x*;
    # the x-section through that crossing must be non-monotone
    from fidgeo.families import JoinedUniform
    fam = JoinedUniform(1.0, 4.0, 0.5)
    xs = (4 * t2 - t1) / 3
    level = 0.5 + (xs - t2) / 2
    if not 0.01 < level < 0.99:
        return
    g = Grid(np.array([xs - 0.1, xs, xs + 0.1]), np.linspace(-12, 8, 2001))
    c = classify_section(x_section(build_surface(fam, g), xs))
    assert c.kind is MonotoneKind.NON_MONOTONE
