import pytest

from pfalab.sbox import (
    AES_INV_SBOX,
    AES_SBOX,
    IDENTITY_TABLE,
    NotAPermutation,
    SBoxTable,
    down,
    left,
    neighbors,
    right,
    up,
)


def test_standard_table_known_entries():
    assert AES_SBOX[0x00] == 0x63
    assert AES_SBOX[0x01] == 0x7C
    assert AES_SBOX[0x53] == 0xED
    assert AES_SBOX[0xFF] == 0x16
    assert AES_SBOX[0x73] == 0x8F
    assert AES_SBOX[0x8F] == 0x73


def test_is_permutation_and_inverse():
    assert AES_SBOX.is_permutation()
    inv = AES_SBOX.inverse()
    assert inv == AES_INV_SBOX
    assert all(inv[AES_SBOX[x]] == x for x in range(256))


def test_identity_table():
    assert all(IDENTITY_TABLE[x] == x for x in range(256))


def test_rejects_non_permutation_inverse():
    broken = AES_SBOX.with_entry(0, AES_SBOX[1])
    assert not broken.is_permutation()
    with pytest.raises(NotAPermutation):
        broken.inverse()


def test_table_is_immutable():
    with pytest.raises(AttributeError):
        AES_SBOX.entries = bytes(256)


def test_with_entry_returns_new_table():
    modified = AES_SBOX.with_entry(0x10, 0x00)
    assert modified[0x10] == 0x00
    assert AES_SBOX[0x10] == 0xCA
    assert modified != AES_SBOX
    with pytest.raises(ValueError):
        AES_SBOX.with_entry(256, 0)
    with pytest.raises(ValueError):
        AES_SBOX.with_entry(0, 300)


def test_equality_and_hash():
    twin = SBoxTable(bytes(AES_SBOX.entries))
    assert twin == AES_SBOX
    assert hash(twin) == hash(AES_SBOX)
    assert len({twin, AES_SBOX}) == 1


def test_differences():
    modified = AES_SBOX.with_entry(5, 0).with_entry(250, 1)
    assert AES_SBOX.differences(modified) == [5, 250]
    assert AES_SBOX.differences(AES_SBOX) == []


def test_grid_moves_wrap_toroidally():
    assert up(0x05) == 0xF5
    assert down(0xF5) == 0x05
    assert left(0x10) == 0x1F
    assert right(0x1F) == 0x10
    assert up(0x23) == 0x13
    assert right(0x34) == 0x35


def test_grid_moves_are_inverse_pairs():
    for x in range(256):
        assert down(up(x)) == x
        assert up(down(x)) == x
        assert right(left(x)) == x
        assert left(right(x)) == x


def test_neighbors_order():
    for x in range(256):
        assert neighbors(x) == (up(x), down(x), left(x), right(x))
