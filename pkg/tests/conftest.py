from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from lbmgks.scheme import boundary_condition, make_scheme

settings.register_profile("lbmgks", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lbmgks")

F = Fraction


@pytest.fixture
def d1q2_outflow():
    return make_scheme("d1q2", s2=F(3, 2), courant=F(-1, 2))


@pytest.fixture
def d1q2_critical():
    return make_scheme("d1q2", s2=F(2), courant=F(-1, 2))


@pytest.fixture
def lw():
    return make_scheme("d1q3-lw", s2=F(1), s3=F(1), courant=F(-1, 2))


@pytest.fixture
def o4():
    return make_scheme("d1q3-o4", courant=F(-1, 4))


def bc(name, spec, source=None):
    return boundary_condition(name, spec, source=source)
