import pytest

from pfalab.sbox import AES_SBOX
from pfalab.sbox_analysis import build_detection_pair, build_redundant_tables


@pytest.fixture(scope="session")
def pair():
    return build_detection_pair(AES_SBOX)


@pytest.fixture(scope="session")
def tables():
    return build_redundant_tables(AES_SBOX)
