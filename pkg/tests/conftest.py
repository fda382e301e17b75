import pytest

from suite_cases import build_suite


@pytest.fixture(scope="session")
def suite_specs():
    return build_suite()
