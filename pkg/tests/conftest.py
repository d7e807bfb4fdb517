import pytest

from dtofsim import table1_preset


@pytest.fixture
def apd_config():
    return table1_preset("apd")


@pytest.fixture
def sipm_config():
    return table1_preset("sipm")
