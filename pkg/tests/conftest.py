from pathlib import Path

import pytest

from effisplit.adapters.document import read_instance

FIXTURES = Path(__file__).parent / "fixtures"
TOY3_PATH = FIXTURES / "toy3.json"


@pytest.fixture
def toy3():
    return read_instance(TOY3_PATH)


@pytest.fixture
def toy3_path():
    return str(TOY3_PATH)
