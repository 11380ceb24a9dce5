import numpy as np
import pytest

from pfalab.aes import (
    BLOCK_SIZE,
    SHIFT_ROWS_PERM,
    CipherOptions,
    block_from_hex,
    block_to_hex,
    decrypt,
    decrypt_blocks,
    encrypt,
    encrypt_blocks,
    inverse_key_expand,
    key_expand,
    sub_bytes_block,
)
from pfalab.rng import Rng
from pfalab.sbox import AES_SBOX, IDENTITY_TABLE

FIPS_KEY = block_from_hex("2b7e151628aed2a6abf7158809cf4f3c")
FIPS_PT = block_from_hex("3243f6a8885a308d313198a2e0370734")
FIPS_CT = block_from_hex("3925841d02dc09fbdc118597196a0b32")


def test_fips_example_vector():
    assert encrypt(FIPS_PT, key_expand(FIPS_KEY)) == FIPS_CT


def test_fips_appendix_c1_vector():
    key = block_from_hex("000102030405060708090a0b0c0d0e0f")
    pt = block_from_hex("00112233445566778899aabbccddeeff")
    ct = block_from_hex("69c4e0d86a7b0430d8cdb78070b4c55a")
    assert encrypt(pt, key_expand(key)) == ct


def test_last_round_key_value():
    rk = key_expand(FIPS_KEY)
    assert rk[10] == block_from_hex("d014f9a8c9ee2589e13f0cc8b6630ca6")
    assert len(rk) == 11
    assert rk[0] == FIPS_KEY


def test_block_hex_round_trip():
    assert block_to_hex(FIPS_PT) == "3243f6a8885a308d313198a2e0370734"
    with pytest.raises(ValueError):
        block_from_hex("00")
    with pytest.raises(ValueError):
        block_from_hex("zz" * 16)


def test_encrypt_decrypt_inverse():
    rng = Rng(41)
    for _ in range(1000):
        key = rng.randbytes(BLOCK_SIZE)
        pt = rng.randbytes(BLOCK_SIZE)
        rk = key_expand(key)
        assert decrypt(encrypt(pt, rk), rk) == pt


def test_inverse_without_shiftrows():
    options = CipherOptions(shift_rows_enabled=False)
    rng = Rng(42)
    for _ in range(200):
        key = rng.randbytes(BLOCK_SIZE)
        pt = rng.randbytes(BLOCK_SIZE)
        rk = key_expand(key)
        ct = encrypt(pt, rk, options=options)
        assert ct != encrypt(pt, rk)
        assert decrypt(ct, rk, options=options) == pt


def test_inverse_key_expand_round_trip():
    rng = Rng(43)
    for _ in range(1000):
        key = rng.randbytes(BLOCK_SIZE)
        assert inverse_key_expand(key_expand(key)[10]) == key


def test_shift_rows_permutation_shape():
    # Row r of the state rotates left by r positions (column-major index).
    assert SHIFT_ROWS_PERM[0] == 0
    assert SHIFT_ROWS_PERM[1] == 5
    assert SHIFT_ROWS_PERM[2] == 10
    assert SHIFT_ROWS_PERM[3] == 15
    assert sorted(SHIFT_ROWS_PERM) == list(range(16))


def test_sub_bytes_block():
    block = bytes(range(16))
    expected = bytes(AES_SBOX[b] for b in block)
    assert sub_bytes_block(block) == expected
    assert sub_bytes_block(block, IDENTITY_TABLE) == block


def test_trace_collects_table_indices():
    trace = set()
    encrypt(FIPS_PT, key_expand(FIPS_KEY), trace=trace)
    assert trace <= set(range(256))
    # 160 lookups for this vector happen to hit 119 distinct indices.
    assert len(trace) == 119


def test_encryption_with_modified_table_differs():
    rk = key_expand(FIPS_KEY)
    touched = set()
    encrypt(FIPS_PT, rk, trace=touched)
    x = min(touched)
    faulted = AES_SBOX.with_entry(x, AES_SBOX[x] ^ 0x01)
    assert encrypt(FIPS_PT, rk, table=faulted) != FIPS_CT


def test_untouched_entry_leaves_ciphertext_alone():
    rk = key_expand(FIPS_KEY)
    touched = set()
    encrypt(FIPS_PT, rk, trace=touched)
    untouched = [x for x in range(256) if x not in touched]
    assert untouched, "vector unexpectedly touches all 256 entries"
    x = untouched[0]
    faulted = AES_SBOX.with_entry(x, AES_SBOX[x] ^ 0xFF)
    assert encrypt(FIPS_PT, rk, table=faulted) == FIPS_CT


def test_batched_matches_scalar():
    rng = Rng(44)
    rk = key_expand(rng.randbytes(BLOCK_SIZE))
    pts = np.frombuffer(rng.randbytes(BLOCK_SIZE * 500), dtype=np.uint8)
    pts = pts.reshape(500, BLOCK_SIZE)
    cts = encrypt_blocks(pts, rk)
    for i in range(0, 500, 7):
        assert bytes(cts[i]) == encrypt(bytes(pts[i]), rk)
    back = decrypt_blocks(cts, rk)
    assert (back == pts).all()


def test_batched_matches_scalar_with_faulted_table():
    rng = Rng(45)
    rk = key_expand(rng.randbytes(BLOCK_SIZE))
    faulted = AES_SBOX.with_entry(0x42, 0x00)
    options = CipherOptions(shift_rows_enabled=False)
    pts = np.frombuffer(rng.randbytes(BLOCK_SIZE * 64), dtype=np.uint8)
    pts = pts.reshape(64, BLOCK_SIZE)
    cts = encrypt_blocks(pts, rk, faulted, options)
    for i in range(64):
        assert bytes(cts[i]) == encrypt(bytes(pts[i]), rk, faulted, options)


def test_rounds_option_is_pinned():
    with pytest.raises(ValueError):
        CipherOptions(rounds=9)
