from __future__ import annotations

import numpy as np
import pytest

from fidgeo.families import (
    AbsComposite,
    FlattenedNormal,
    JoinedUniform,
    ReducedComposite,
    evd_translation,
    gapped_translation,
    normal_translation,
)
from fidgeo.surface import Grid, auto_grid, build_surface


@pytest.fixture(scope="session")
def ju():
    return JoinedUniform(1.0, 4.0, 0.5)


@pytest.fixture(scope="session")
def evd():
    return evd_translation()


@pytest.fixture(scope="session")
def normal():
    return normal_translation()


@pytest.fixture(scope="session")
def ju_surface(ju):
    return build_surface(ju, auto_grid(ju, 401))


@pytest.fixture(scope="session")
def evd_surface(evd):
    return build_surface(evd, auto_grid(evd, 401))


@pytest.fixture(scope="session")
def normal_surface(normal):
    return build_surface(normal, Grid(np.linspace(-4, 4, 201), np.linspace(-8, 8, 401)))


@pytest.fixture(scope="session")
def abs_normal_surface(normal):
    fam = AbsComposite(normal)
    return build_surface(fam, auto_grid(fam, 201, symmetric_theta=True))


@pytest.fixture(scope="session")
def abs_evd_surface(evd):
    fam = AbsComposite(evd)
    return build_surface(fam, auto_grid(fam, 201, symmetric_theta=True))


@pytest.fixture(scope="session")
def reduced_normal_surface(normal):
    fam = ReducedComposite(AbsComposite(normal))
    return build_surface(fam, auto_grid(fam, 201))


@pytest.fixture(scope="session")
def flat_surface():
    fam = FlattenedNormal()
    return build_surface(fam, auto_grid(fam, 201))


@pytest.fixture(scope="session")
def gapped():
    return gapped_translation(1.0)
