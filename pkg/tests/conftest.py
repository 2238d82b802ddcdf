import pytest
from hypothesis import HealthCheck, settings

from fairpool import corpus

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def phd():
    """(models, spec, encoding, evidence) for the bundled admissions example."""
    return corpus.load()


@pytest.fixture(scope="session")
def alice(phd):
    return phd[0][0]


@pytest.fixture(scope="session")
def bob(phd):
    return phd[0][1]


@pytest.fixture(scope="session")
def applicants(phd):
    return {rec.label: rec for rec in phd[3]}
