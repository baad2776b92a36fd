# See https://docs.pytest.org/en/7.1.x/example/simple.html
from typing import Any
import pytest


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption('--update_golden', default=False, action='store_true',
                     help='(Re)write the golden report files in tests/data/golden/ instead of comparing against them.')


@pytest.fixture
def update_golden(request: pytest.FixtureRequest) -> Any:
    return request.config.getoption("--update_golden")
