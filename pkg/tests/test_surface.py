import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fidgeo.errors import DomainError, InvalidFamilyError
from fidgeo.families import CallableFamily
from fidgeo.surface import (
    Axis,
    Grid,
    auto_grid,
    build_surface,
    section_complement,
    symmetric_nodes,
    theta_section,
    x_section,
)


def test_normal_center_node(normal):
    g = Grid(np.linspace(-6, 6, 101), np.linspace(-6, 6, 101))
    s = build_surface(normal, g)
    assert s.values[50, 50] == 0.5


def test_joined_uniform_vertex_row(ju):
    xt, ft = ju.intersection_vertex()
    g = Grid(np.sort(np.append(np.linspace(-5, 5, 101), xt)), np.linspace(-4, 4, 801))
    s = build_surface(ju, g)
    row = x_section(s, xt)
    inside = np.abs(row.coords) <= 0.5
    assert np.max(np.abs(row.values[inside] - 2 / 3)) <= 1e-12


def test_evd_origin_node(evd_surface):
    s = x_section(evd_surface, 0.0)
    assert theta_section(evd_surface, 0.0).axis is Axis.THETA_SECTION
    assert float(s.source(0.0)) == pytest.approx(1 - math.exp(-1), abs=1e-15)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(np.array([0.0, 1.0]), np.linspace(0, 1, 5))
    with pytest.raises(DomainError):
        Grid(np.array([0.0, 2.0, 1.0]), np.linspace(0, 1, 5))


def test_grid_outside_domain(ju):
    fam = CallableFamily(lambda x, t: np.clip(x - t, 0, 1), (0, 1), (0, 1), x_domain=(0, 1))
    with pytest.raises(DomainError):
        build_surface(fam, Grid(np.linspace(-1, 1, 5), np.linspace(0, 1, 5)))


def test_non_monotone_rd_rejected():
    fam = CallableFamily(lambda x, t: 0.5 + 0.4 * np.sin(x) + 0 * t, (-5, 5), (0, 1))
    with pytest.raises(InvalidFamilyError):
        build_surface(fam, Grid(np.linspace(-5, 5, 51), np.linspace(0, 1, 5)))


def test_sections_off_node_requery(normal_surface, normal):
    sec = theta_section(normal_surface, 0.123)
    assert np.array_equal(sec.values, normal.cdf(normal_surface.x_nodes, 0.123))
    sec = x_section(normal_surface, 0.321)
    assert np.array_equal(sec.values, normal.cdf(0.321, normal_surface.theta_nodes))


def test_theta_section_joined_uniform(ju_surface):
    sec = theta_section(ju_surface, 0.25)
    x = sec.coords
    expected = np.clip(0.5 + (x - 0.25) / 3.5, 0, 1)
    assert np.allclose(sec.values, expected, atol=1e-14)


def test_evd_x_section_shape(evd_surface):
    sec = x_section(evd_surface, 0.0)
    assert np.allclose(sec.values, 1 - np.exp(-np.exp(sec.coords)), atol=1e-15)


def test_point_a_on_section(ju):
    g = Grid(np.linspace(-5, 5, 11), np.linspace(-4, 4, 801))
    s = build_surface(ju, g)
    sec = x_section(s, 1.25)
    assert float(sec.source(-1.0)) == 0.78125
    assert float(sec.source(0.68)) == pytest.approx(0.785, abs=1e-3)


def test_section_out_of_span(normal_surface):
    with pytest.raises(DomainError):
        x_section(normal_surface, 10.0)
    with pytest.raises(DomainError):
        theta_section(normal_surface, -10.0)


def test_upper_truncation_row_constant(evd):
    # The top x-node lies beyond every RD's upper truncation point.
    lo, hi = evd.base.tail_bounds()
    g = Grid(np.linspace(lo, hi + 3.0, 101), np.linspace(-3.0, 0.0, 101))
    s = build_surface(evd, g)
    row = x_section(s, g.x_nodes[-1])
    assert np.all(row.values >= 1 - 1e-6)


def test_complement():
    from fidgeo.surface import Section
    c = Section(Axis.X_SECTION, 0.0, np.linspace(0, 1, 5), np.full(5, 0.5))
    assert np.array_equal(section_complement(c).values, c.values)


def test_complement_involution(ju_surface):
    sec = x_section(ju_surface, 1.25)
    back = section_complement(section_complement(sec))
    assert np.allclose(back.values, sec.values, atol=1e-15)


def test_geometric_identity(ju_surface):
    V = ju_surface.values
    for i in (0, 57, 200, 400):
        for j in (0, 13, 222, 400):
            xi, tj = ju_surface.x_nodes[i], ju_surface.theta_nodes[j]
            assert x_section(ju_surface, xi).values[j] == theta_section(ju_surface, tj).values[i] == V[i, j]


def test_translation_surface_symmetry(evd):
    n = np.linspace(-4, 4, 81)
    s = build_surface(evd, Grid(n, n))
    assert np.max(np.abs(s.values - s.values.T)) <= 1e-12


def test_values_read_only(normal_surface):
    with pytest.raises(ValueError):
        normal_surface.values[0, 0] = 1.0


def test_csv_export(tmp_path, ju):
    s = build_surface(ju, Grid(np.linspace(-1, 1, 3), np.linspace(0, 1, 4)))
    p = tmp_path / "s.csv"
    s.to_csv(p)
    lines = p.read_text().split("\n")
    assert lines[0].split(",")[0] == "x\\theta"
    assert len(lines[0].split(",")) == 5
    assert float(lines[1].split(",")[1]) == s.values[0, 0]


@settings(max_examples=50, deadline=None)
@given(half=st.floats(0.1, 20), k=st.integers(1, 200))
def test_symmetric_nodes_exact(half, k):
    n = 2 * k + 1
    t = symmetric_nodes(half, n)
    assert np.array_equal(t, -t[::-1])
    assert t[k] == 0.0


def test_auto_grid_symmetric(normal):
    from fidgeo.families import AbsComposite
    g = auto_grid(AbsComposite(normal), 100, symmetric_theta=True)
    assert g.theta_nodes.size % 2 == 1
    assert np.array_equal(g.theta_nodes, -g.theta_nodes[::-1])
