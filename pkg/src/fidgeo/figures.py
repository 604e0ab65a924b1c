"""Curve data behind the illustrative figures, one CSV per curve.

Every file has a header row. Column schemas:

1   rd_theta_<t>.csv (x, F_r); fd_x0_0.csv (theta, F_f)
2a  rd_theta_<t>.csv (x, F_r) for the joined uniform family; vertex.csv (x_T, F_T)
2b  fm_x_<x>_thetaT_<t>.csv (theta, one_minus_m), the complemented FM
4a  rd_theta_<t>.csv (y, F_star); even_odd_theta_1.csv (y, F_E, F_O_minus); envelope.csv (y, theta_M, F_star_M)
4b  fm_y_<y>.csv (theta, m_star); decomposition_y_1.5.csv (theta, m, m_E, m_O, M1, M2)
5a  rd_theta_<t>.csv (y, F_star); envelope.csv (y, F_star_0)
5b  fm_y_<y>.csv (theta, m_star); reduced_y_<y>.csv (phi, m_bar, mu_bar)
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .csvio import write_csv
from .errors import DomainError
from .families import AbsComposite, JoinedUniform, evd_translation, normal_translation
from .fiducial import SignedFiducialMeasure, envelope_at, write_decomposition_csv
from .surface import symmetric_nodes

FIGURE_IDS = ("1", "2a", "2b", "4a", "4b", "5a", "5b")
Y_VALUES = (0.5, 1.25, 1.5)


def _tag(v: float) -> str:
    return format(v, "g")


def _figure_1(out: Path) -> list[Path]:
    fam = normal_translation()
    x = np.linspace(-5, 5, 501)
    files = [write_csv(out / f"rd_theta_{_tag(t)}.csv", ["x", "F_r"], [x, fam.cdf(x, t)])
             for t in (-2.0, -1.0, 0.0, 1.0, 2.0)]
    th = np.linspace(-5, 5, 501)
    files.append(write_csv(out / "fd_x0_0.csv", ["theta", "F_f"], [th, fam.cdf(0.0, th)]))
    return files


def _figure_2a(out: Path) -> list[Path]:
    fam = JoinedUniform(1.0, 4.0, 0.5)
    x = np.linspace(-5, 5, 1001)
    files = [write_csv(out / f"rd_theta_{_tag(t)}.csv", ["x", "F_r"], [x, fam.cdf(x, t)])
             for t in (-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 0.6875, 1.0)]
    xt, ft = fam.intersection_vertex()
    files.append(write_csv(out / "vertex.csv", ["x_T", "F_T"], [[xt], [ft]]))
    return files


def _figure_2b(out: Path) -> list[Path]:
    th = np.linspace(-3.0, 2.5, 1101)
    files = []
    for x0, tt in ((1.25, 0.5), (0.5, 0.5), (0.5, 0.3), (0.5, 0.15)):
        fam = JoinedUniform(1.0, 4.0, tt)
        files.append(write_csv(out / f"fm_x_{_tag(x0)}_thetaT_{_tag(tt)}.csv",
                               ["theta", "one_minus_m"], [th, fam.cdf(x0, th)]))
    return files


def _figure_4a(out: Path) -> list[Path]:
    fam = AbsComposite(evd_translation())
    y = np.linspace(0, 5, 501)
    files = [write_csv(out / f"rd_theta_{_tag(t)}.csv", ["y", "F_star"], [y, fam.cdf(y, t)])
             for t in (-2.0, -1.0, -0.35, 0.0, 1.0)]
    plus, minus = fam.cdf(y, 1.0), fam.cdf(y, -1.0)
    files.append(write_csv(out / "even_odd_theta_1.csv", ["y", "F_E", "F_O_minus"],
                           [y, 0.5 * (plus + minus), 0.5 * (minus - plus)]))
    env = [envelope_at(fam, float(v), (-8.0, 2.0)) for v in y]
    files.append(write_csv(out / "envelope.csv", ["y", "theta_M", "F_star_M"],
                           [y, [e[0] for e in env], [e[1] for e in env]]))
    return files


def _figure_4b(out: Path) -> list[Path]:
    fam = AbsComposite(evd_translation())
    th = symmetric_nodes(5.0, 1001)
    files = [write_csv(out / f"fm_y_{_tag(y)}.csv", ["theta", "m_star"], [th, fam.cdf(y, th)])
             for y in Y_VALUES]
    m = SignedFiducialMeasure(th, fam.cdf(1.5, th), 1.5)
    files.append(write_decomposition_csv(out / "decomposition_y_1.5.csv", m))
    return files


def _figure_5a(out: Path) -> list[Path]:
    fam = AbsComposite(normal_translation())
    y = np.linspace(0, 5, 501)
    files = [write_csv(out / f"rd_theta_{_tag(t)}.csv", ["y", "F_star"], [y, fam.cdf(y, t)])
             for t in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)]
    files.append(write_csv(out / "envelope.csv", ["y", "F_star_0"], [y, fam.cdf(y, 0.0)]))
    return files


def _figure_5b(out: Path) -> list[Path]:
    fam = AbsComposite(normal_translation())
    th = symmetric_nodes(5.0, 1001)
    phi = th[th.size // 2:]
    files = []
    for y in Y_VALUES:
        files.append(write_csv(out / f"fm_y_{_tag(y)}.csv", ["theta", "m_star"], [th, fam.cdf(y, th)]))
        m_bar = fam.cdf(y, phi)
        files.append(write_csv(out / f"reduced_y_{_tag(y)}.csv", ["phi", "m_bar", "mu_bar"],
                               [phi, m_bar, 1.0 - m_bar]))
    return files


_BUILDERS = {
    "1": _figure_1, "2a": _figure_2a, "2b": _figure_2b, "4a": _figure_4a,
    "4b": _figure_4b, "5a": _figure_5a, "5b": _figure_5b,
}


def write_figure(fig_id: str, out_dir: str | Path) -> list[Path]:
    if fig_id not in _BUILDERS:
        raise DomainError(f"unknown figure id {fig_id!r}; choose from {', '.join(FIGURE_IDS)}")
    out = Path(out_dir) / f"figure_{fig_id}"
    out.mkdir(parents=True, exist_ok=True)
    return _BUILDERS[fig_id](out)
