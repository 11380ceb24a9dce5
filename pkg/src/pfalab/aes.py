"""AES-128 with a pluggable byte-substitution table.

The substitution step is kept as a plain 256-byte table lookup so that a
corrupted table propagates through encryption exactly like a persistent
memory fault would on a real device.  Round keys are always expanded
with the reference table: the fault model covers the substitution table
read during encryption, not the key schedule computed beforehand.

State layout follows the standard column-major convention: byte i of a
block is state[row=i % 4, col=i // 4], i.e. flat index 4*c + r.

Two execution paths are provided with identical semantics: a scalar path
operating on 16-byte ``bytes`` blocks, and a batched path operating on
numpy arrays of shape (n, 16) for the statistics-heavy experiments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .sbox import AES_INV_SBOX, AES_SBOX, SBoxTable

BLOCK_SIZE = 16
KEY_SIZE = 16
NUM_ROUNDS = 10

_HEX_BLOCK = re.compile(r"[0-9a-f]{32}")


@dataclass(frozen=True)
class CipherOptions:
    """Structural switches for experiments.

    shift_rows_enabled: with False, both ShiftRows and its inverse become
    the identity.  Byte permutations do not affect the per-byte lookup
    statistics the attack relies on, and disabling them isolates the
    substitution layer in experiments.  rounds is fixed by the 128-bit
    key size.
    """

    shift_rows_enabled: bool = True
    rounds: int = 10

    def __post_init__(self):
        if self.rounds != NUM_ROUNDS:
            raise ValueError("AES-128 always runs 10 rounds")


DEFAULT_OPTIONS = CipherOptions()

# ShiftRows sends old flat index 4*((c + r) % 4) + r to new index 4*c + r.
SHIFT_ROWS_PERM = tuple(4 * ((c + r) % 4) + r for c in range(4) for r in range(4))
INV_SHIFT_ROWS_PERM = tuple(SHIFT_ROWS_PERM.index(i) for i in range(16))

_SR_IDX = np.array(SHIFT_ROWS_PERM, dtype=np.intp)
_INV_SR_IDX = np.array(INV_SHIFT_ROWS_PERM, dtype=np.intp)


def _gf_mul(a: int, b: int) -> int:
    out = 0
    for _ in range(8):
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
    return out


XTIME = bytes(_gf_mul(x, 2) for x in range(256))
_GM9 = bytes(_gf_mul(x, 9) for x in range(256))
_GM11 = bytes(_gf_mul(x, 11) for x in range(256))
_GM13 = bytes(_gf_mul(x, 13) for x in range(256))
_GM14 = bytes(_gf_mul(x, 14) for x in range(256))

_XT = np.frombuffer(XTIME, dtype=np.uint8)
_NP_GM = {m: np.frombuffer(t, dtype=np.uint8) for m, t in
          ((9, _GM9), (11, _GM11), (13, _GM13), (14, _GM14))}

RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def block_from_hex(text: str) -> bytes:
    """Parse one block from exactly 32 lowercase hex characters."""
    if not _HEX_BLOCK.fullmatch(text):
        raise ValueError(f"expected 32 lowercase hex chars, got {text!r}")
    return bytes.fromhex(text)


def block_to_hex(block: bytes) -> str:
    if len(block) != BLOCK_SIZE:
        raise ValueError(f"expected a {BLOCK_SIZE}-byte block")
    return block.hex()


def key_expand(key: bytes) -> list[bytes]:
    """Expand a 16-byte key into the 11 round keys.

    Always uses the reference substitution table; see the module
    docstring for why faulted tables never enter the schedule.
    """
    if len(key) != KEY_SIZE:
        raise ValueError(f"expected a {KEY_SIZE}-byte key")
    sbox = AES_SBOX.entries
    words = [key[4 * i:4 * i + 4] for i in range(4)]
    for i in range(4, 44):
        temp = words[i - 1]
        if i % 4 == 0:
            temp = bytes((
                sbox[temp[1]] ^ RCON[i // 4 - 1],
                sbox[temp[2]],
                sbox[temp[3]],
                sbox[temp[0]],
            ))
        words.append(bytes(a ^ b for a, b in zip(words[i - 4], temp)))
    return [b"".join(words[4 * r:4 * r + 4]) for r in range(11)]


def inverse_key_expand(last_round_key: bytes) -> bytes:
    """Recover the master key from round key 10 by running the schedule
    backwards.  This is what makes last-round-key recovery equivalent to
    full key recovery."""
    if len(last_round_key) != KEY_SIZE:
        raise ValueError(f"expected a {KEY_SIZE}-byte round key")
    sbox = AES_SBOX.entries
    words: list[bytes | None] = [None] * 44
    for i in range(4):
        words[40 + i] = last_round_key[4 * i:4 * i + 4]
    for i in range(43, 3, -1):
        temp = words[i - 1]
        assert temp is not None
        if i % 4 == 0:
            temp = bytes((
                sbox[temp[1]] ^ RCON[i // 4 - 1],
                sbox[temp[2]],
                sbox[temp[3]],
                sbox[temp[0]],
            ))
        words[i - 4] = bytes(a ^ b for a, b in zip(words[i], temp))
    return b"".join(words[0:4])


def sub_bytes_block(block: bytes, table: SBoxTable = AES_SBOX) -> bytes:
    """Apply the substitution table to every byte of a block.

    This is also the checkpoint iteration step: detection walks a block
    through repeated applications of this function alone.
    """
    return block.translate(table.entries)


def _shift_rows(state: bytes) -> bytes:
    return bytes(state[i] for i in SHIFT_ROWS_PERM)


def _inv_shift_rows(state: bytes) -> bytes:
    return bytes(state[i] for i in INV_SHIFT_ROWS_PERM)


def _mix_columns(state: bytes) -> bytes:
    out = bytearray(16)
    for c in range(0, 16, 4):
        s0, s1, s2, s3 = state[c:c + 4]
        t = s0 ^ s1 ^ s2 ^ s3
        out[c] = s0 ^ t ^ XTIME[s0 ^ s1]
        out[c + 1] = s1 ^ t ^ XTIME[s1 ^ s2]
        out[c + 2] = s2 ^ t ^ XTIME[s2 ^ s3]
        out[c + 3] = s3 ^ t ^ XTIME[s3 ^ s0]
    return bytes(out)


def _inv_mix_columns(state: bytes) -> bytes:
    out = bytearray(16)
    for c in range(0, 16, 4):
        s0, s1, s2, s3 = state[c:c + 4]
        out[c] = _GM14[s0] ^ _GM11[s1] ^ _GM13[s2] ^ _GM9[s3]
        out[c + 1] = _GM9[s0] ^ _GM14[s1] ^ _GM11[s2] ^ _GM13[s3]
        out[c + 2] = _GM13[s0] ^ _GM9[s1] ^ _GM14[s2] ^ _GM11[s3]
        out[c + 3] = _GM11[s0] ^ _GM13[s1] ^ _GM9[s2] ^ _GM14[s3]
    return bytes(out)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def encrypt(
    plaintext: bytes,
    round_keys: list[bytes],
    table: SBoxTable = AES_SBOX,
    options: CipherOptions = DEFAULT_OPTIONS,
    trace: set[int] | None = None,
) -> bytes:
    """Encrypt one block with the given (possibly faulted) table.

    trace, when given a set, collects every table index read during this
    encryption.  Tracing forces a slower per-byte path, so it is off by
    default.
    """
    if len(plaintext) != BLOCK_SIZE:
        raise ValueError(f"expected a {BLOCK_SIZE}-byte block")
    state = _xor(plaintext, round_keys[0])
    for rnd in range(1, NUM_ROUNDS + 1):
        if trace is not None:
            trace.update(state)
        state = sub_bytes_block(state, table)
        if options.shift_rows_enabled:
            state = _shift_rows(state)
        if rnd < NUM_ROUNDS:
            state = _mix_columns(state)
        state = _xor(state, round_keys[rnd])
    return state


def decrypt(
    ciphertext: bytes,
    round_keys: list[bytes],
    inv_table: SBoxTable = AES_INV_SBOX,
    options: CipherOptions = DEFAULT_OPTIONS,
) -> bytes:
    """Decrypt one block.  inv_table plays the role the inverse table
    would play in a device's decryption module and may be faulted
    independently of the forward table."""
    if len(ciphertext) != BLOCK_SIZE:
        raise ValueError(f"expected a {BLOCK_SIZE}-byte block")
    state = _xor(ciphertext, round_keys[NUM_ROUNDS])
    for rnd in range(NUM_ROUNDS, 0, -1):
        if options.shift_rows_enabled:
            state = _inv_shift_rows(state)
        state = sub_bytes_block(state, inv_table)
        state = _xor(state, round_keys[rnd - 1])
        if rnd > 1:
            state = _inv_mix_columns(state)
    return state


def _round_keys_array(round_keys: list[bytes]) -> np.ndarray:
    return np.array([np.frombuffer(k, dtype=np.uint8) for k in round_keys])


def encrypt_blocks(
    plaintexts: np.ndarray,
    round_keys: list[bytes],
    table: SBoxTable = AES_SBOX,
    options: CipherOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """Batched encrypt: (n, 16) uint8 in, (n, 16) uint8 out.

    Bit-identical to the scalar path; the unit tests pin this down.
    """
    if plaintexts.ndim != 2 or plaintexts.shape[1] != BLOCK_SIZE:
        raise ValueError("expected an (n, 16) array of blocks")
    keys = _round_keys_array(round_keys)
    lut = np.frombuffer(table.entries, dtype=np.uint8)
    state = plaintexts.astype(np.uint8) ^ keys[0]
    for rnd in range(1, NUM_ROUNDS + 1):
        state = lut[state]
        if options.shift_rows_enabled:
            state = state[:, _SR_IDX]
        if rnd < NUM_ROUNDS:
            state = _mix_columns_np(state)
        state = state ^ keys[rnd]
    return state


def decrypt_blocks(
    ciphertexts: np.ndarray,
    round_keys: list[bytes],
    inv_table: SBoxTable = AES_INV_SBOX,
    options: CipherOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    if ciphertexts.ndim != 2 or ciphertexts.shape[1] != BLOCK_SIZE:
        raise ValueError("expected an (n, 16) array of blocks")
    keys = _round_keys_array(round_keys)
    lut = np.frombuffer(inv_table.entries, dtype=np.uint8)
    state = ciphertexts.astype(np.uint8) ^ keys[NUM_ROUNDS]
    for rnd in range(NUM_ROUNDS, 0, -1):
        if options.shift_rows_enabled:
            state = state[:, _INV_SR_IDX]
        state = lut[state]
        state = state ^ keys[rnd - 1]
        if rnd > 1:
            state = _inv_mix_columns_np(state)
    return state


def _mix_columns_np(state: np.ndarray) -> np.ndarray:
    out = np.empty_like(state)
    for c in range(0, 16, 4):
        s0 = state[:, c]
        s1 = state[:, c + 1]
        s2 = state[:, c + 2]
        s3 = state[:, c + 3]
        t = s0 ^ s1 ^ s2 ^ s3
        out[:, c] = s0 ^ t ^ _XT[s0 ^ s1]
        out[:, c + 1] = s1 ^ t ^ _XT[s1 ^ s2]
        out[:, c + 2] = s2 ^ t ^ _XT[s2 ^ s3]
        out[:, c + 3] = s3 ^ t ^ _XT[s3 ^ s0]
    return out


def _inv_mix_columns_np(state: np.ndarray) -> np.ndarray:
    out = np.empty_like(state)
    g9, g11, g13, g14 = (_NP_GM[m] for m in (9, 11, 13, 14))
    for c in range(0, 16, 4):
        s0 = state[:, c]
        s1 = state[:, c + 1]
        s2 = state[:, c + 2]
        s3 = state[:, c + 3]
        out[:, c] = g14[s0] ^ g11[s1] ^ g13[s2] ^ g9[s3]
        out[:, c + 1] = g9[s0] ^ g14[s1] ^ g11[s2] ^ g13[s3]
        out[:, c + 2] = g13[s0] ^ g9[s1] ^ g14[s2] ^ g11[s3]
        out[:, c + 3] = g11[s0] ^ g13[s1] ^ g9[s2] ^ g14[s3]
    return out
