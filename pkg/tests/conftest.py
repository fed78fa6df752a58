from pathlib import Path

import pytest

from raftgen.knowledge import finance_pack

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def pack():
    return finance_pack()


@pytest.fixture(scope="session")
def symbols(pack):
    return pack.symbols


def read(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")
