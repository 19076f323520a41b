from pathlib import Path

import pytest

from coverage_auditor.countries import CountryRegistry

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def registry() -> CountryRegistry:
    return CountryRegistry.load()


@pytest.fixture(scope="session")
def e2e_dir() -> Path:
    return FIXTURES / "e2e"
