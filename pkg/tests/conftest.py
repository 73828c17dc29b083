import pytest
import sympy

from gpx.algebra.field import Algebra
from gpx.corpus import _run, fixture


@pytest.fixture(scope="session")
def cosmo():
    return fixture("viscous_cosmology.gpx")


@pytest.fixture(scope="session")
def painleve():
    return fixture("painleve_beta.gpx")


@pytest.fixture(scope="session")
def cosmo1():
    return _run("viscous_cosmology.gpx", 1)


@pytest.fixture(scope="session")
def cosmo2():
    return _run("viscous_cosmology.gpx", 2)


@pytest.fixture(scope="session")
def pain3():
    return _run("painleve_beta.gpx", None)


@pytest.fixture
def alg():
    return Algebra(sympy.symbols("q gamma alpha v k beta n"))
