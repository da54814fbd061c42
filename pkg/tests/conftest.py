import pytest

from forestreturn import default_coefficients, default_tables


@pytest.fixture(scope="session")
def coeffs():
    return default_coefficients()


@pytest.fixture(scope="session")
def tables():
    return default_tables()
