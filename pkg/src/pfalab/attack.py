"""Ciphertext-only key recovery against a persistently faulted table.

With one table entry v corrupted, the last round's substitution output
never takes the value S[v] and takes the duplicated value e* twice as
often.  Per ciphertext byte position j this shifts the value histogram:
c = S[v] XOR k_j has probability 0, c = e* XOR k_j has 2/256, the rest
stay at 1/256.  The attacker therefore recovers k_j from the value that
never appears (and cross-checks against the most frequent one), needing
nothing but ciphertexts.

Recovery is gated on the zero structure: a byte is reported only once
its position shows exactly one never-seen value.  The most-frequent
value check and the count gap are tracked as confidence metadata, not
as gates; at realistic sample sizes the maximum fluctuates long after
the unique zero has stabilized, while on a healthy (corrected) stream
the unique-zero gate virtually never fires at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aes import BLOCK_SIZE
from .sbox import AES_SBOX, SBoxTable


class CiphertextHistogram:
    """Per-position counts of ciphertext byte values."""

    __slots__ = ("counts", "n")

    def __init__(self):
        self.counts = np.zeros((BLOCK_SIZE, 256), dtype=np.int64)
        self.n = 0

    def add(self, block: bytes) -> None:
        if len(block) != BLOCK_SIZE:
            raise ValueError(f"expected a {BLOCK_SIZE}-byte block")
        for j, value in enumerate(block):
            self.counts[j, value] += 1
        self.n += 1

    def add_blocks(self, blocks: np.ndarray) -> None:
        """Accumulate an (n, 16) uint8 array in one pass."""
        if blocks.ndim != 2 or blocks.shape[1] != BLOCK_SIZE:
            raise ValueError("expected an (n, 16) array of blocks")
        for j in range(BLOCK_SIZE):
            self.counts[j] += np.bincount(blocks[:, j], minlength=256)
        self.n += blocks.shape[0]

    def merge(self, other: "CiphertextHistogram") -> "CiphertextHistogram":
        """Pointwise sum, so sharded streams can be combined."""
        out = CiphertextHistogram()
        out.counts = self.counts + other.counts
        out.n = self.n + other.n
        return out

    def zero_values(self, position: int) -> list[int]:
        """Values never observed at this position."""
        return [int(u) for u in np.flatnonzero(self.counts[position] == 0)]

    def csv_rows(self):
        for position in range(BLOCK_SIZE):
            for value in range(256):
                yield position, value, int(self.counts[position, value])

    def to_csv(self) -> str:
        lines = ["position,value,count"]
        lines.extend(f"{p},{v},{c}" for p, v, c in self.csv_rows())
        return "\n".join(lines) + "\n"


def accumulate(ciphertexts) -> CiphertextHistogram:
    """Histogram of a ciphertext stream (iterable of blocks or array)."""
    hist = CiphertextHistogram()
    if isinstance(ciphertexts, np.ndarray):
        hist.add_blocks(ciphertexts)
        return hist
    for block in ciphertexts:
        hist.add(block)
    return hist


@dataclass(frozen=True)
class KeyRecoveryResult:
    """Per-position recovery state for the round-10 key.

    recovered holds a byte only where the position's zero structure is
    unambiguous; candidate_sets always carries both estimates
    {c_min XOR S[v], c_max XOR S[v*]} (collapsed to one element when the
    two agree).  confidence is the second-smallest count per position,
    the gap that must open above the missing value before the recovery
    deserves trust; confident applies the configured threshold and
    additionally requires the unique zero.
    """

    recovered: tuple
    candidate_sets: tuple
    v: int
    v_star: int
    agreements: tuple
    confidence: tuple
    confident: tuple
    gap_threshold: int

    def full_key(self) -> bytes | None:
        if any(b is None for b in self.recovered):
            return None
        return bytes(self.recovered)

    def to_json_dict(self) -> dict:
        return {
            "k10": [b for b in self.recovered],
            "v": self.v,
            "v_star": self.v_star,
            "confidence": list(self.confidence),
        }


def recover_key_maxmin(
    hist: CiphertextHistogram,
    v: int,
    v_star: int,
    sbox: SBoxTable = AES_SBOX,
    gap_threshold: int = 5,
) -> KeyRecoveryResult:
    """Recover round-10 key bytes from the histogram's extremes.

    c_min and c_max are the least/most frequent values per position,
    ties broken toward the smaller value.  A key byte is reported when
    the position has exactly one zero-count value: that value must be
    S[v] XOR k_j, so k_j = c_min XOR S[v].  The c_max cross-check
    (k_j = c_max XOR S[v*]) is recorded in agreements/candidate_sets
    but does not gate the report: on a genuinely faulted stream the
    unique zero identifies the key long before the maximum separates
    from the pack, and on a uniform stream the zero gate stays shut.
    """
    if v == v_star:
        raise ValueError("v and v_star must differ")
    recovered = []
    candidate_sets = []
    agreements = []
    confidence = []
    confident = []
    for j in range(BLOCK_SIZE):
        counts = hist.counts[j]
        c_min = int(counts.argmin())
        c_max = int(counts.argmax())
        k1 = c_min ^ sbox[v]
        k2 = c_max ^ sbox[v_star]
        zeros = int((counts == 0).sum())
        agree = k1 == k2
        second_smallest = int(np.partition(counts, 1)[1])
        recovered.append(k1 if zeros == 1 else None)
        candidate_sets.append(frozenset({k1, k2}))
        agreements.append(agree)
        confidence.append(second_smallest)
        confident.append(zeros == 1 and second_smallest >= gap_threshold)
    return KeyRecoveryResult(
        recovered=tuple(recovered),
        candidate_sets=tuple(candidate_sets),
        v=v,
        v_star=v_star,
        agreements=tuple(agreements),
        confidence=tuple(confidence),
        confident=tuple(confident),
        gap_threshold=gap_threshold,
    )


def eliminate_candidates(
    hist: CiphertextHistogram,
    v: int,
    sbox: SBoxTable = AES_SBOX,
    threshold: int = 1,
) -> list[set[int]]:
    """Shrink each position's key space by crossing off observed values.

    Every value c seen at least threshold times rules out the candidate
    c XOR S[v], because the true key byte's companion value can never be
    observed.  With the full distribution in hand exactly the true byte
    survives.
    """
    survivors = []
    for j in range(BLOCK_SIZE):
        observed = np.flatnonzero(hist.counts[j] >= threshold)
        ruled_out = {int(c) ^ sbox[v] for c in observed}
        survivors.append(set(range(256)) - ruled_out)
    return survivors


@dataclass(frozen=True)
class FaultSearchResult:
    """Ranked (v, v*) hypotheses with their cross-position scores."""

    ranked: tuple
    top_score: int
    inconclusive: bool

    def top_group(self) -> list:
        return [(v, vs) for v, vs, s in self.ranked if s == self.top_score]


def search_fault_values(
    hist: CiphertextHistogram,
    sbox: SBoxTable = AES_SBOX,
    inconclusive_below: int = 12,
) -> FaultSearchResult:
    """Score every (v, v*) hypothesis by cross-position consistency.

    A hypothesis scores one point per position where c_min XOR S[v]
    equals c_max XOR S[v*].  The score depends on the pair only through
    S[v] XOR S[v*], so whole classes of hypotheses tie; the planted pair
    sits in the top group rather than strictly first.  Scores below
    inconclusive_below (out of 16) mean no hypothesis explains the
    histogram and the stream is probably not single-faulted.
    """
    diffs = np.zeros(BLOCK_SIZE, dtype=np.int64)
    for j in range(BLOCK_SIZE):
        counts = hist.counts[j]
        diffs[j] = int(counts.argmin()) ^ int(counts.argmax())
    score_by_diff = np.bincount(diffs, minlength=256)
    entries = np.frombuffer(sbox.entries, dtype=np.uint8)
    ranked = []
    for v in range(256):
        for v_star in range(256):
            if v_star == v:
                continue
            score = int(score_by_diff[entries[v] ^ entries[v_star]])
            ranked.append((v, v_star, score))
    ranked.sort(key=lambda item: (-item[2], item[0], item[1]))
    top_score = ranked[0][2] if ranked else 0
    return FaultSearchResult(
        ranked=tuple(ranked),
        top_score=top_score,
        inconclusive=top_score < inconclusive_below,
    )


def min_ciphertexts_to_recover(
    ciphertexts,
    true_round10_key: bytes,
    v: int,
    v_star: int,
    sbox: SBoxTable = AES_SBOX,
    zco_filter: bool = False,
) -> int | None:
    """Smallest stream prefix that recovers the full round-10 key.

    Returns the first N at which recover_key_maxmin over the first N
    blocks reports all 16 bytes equal to the truth, or None when the
    stream never gets there (the NotReached outcome).  N counts every
    emitted block; with zco_filter the all-zero blocks still advance N
    but stay out of the histogram, mirroring what the adversary facing
    a zero-on-mismatch device would do.

    Equivalent to re-running the recovery after every block: position j
    reports the true byte exactly when its one missing value is
    S[v] XOR k_j, which holds from the moment the last other value has
    been seen until (if ever) the companion value itself shows up.  Both
    moments are functions of each value's first occurrence, so one pass
    suffices.
    """
    blocks = np.asarray(ciphertexts, dtype=np.uint8)
    if blocks.ndim != 2 or blocks.shape[1] != BLOCK_SIZE:
        raise ValueError("expected an (n, 16) array of blocks")
    n = blocks.shape[0]
    if n == 0:
        return None
    positions = np.arange(1, n + 1, dtype=np.int64)
    if zco_filter:
        kept = blocks.any(axis=1)
        blocks = blocks[kept]
        positions = positions[kept]
    never = n + 1
    first_seen = np.full((BLOCK_SIZE, 256), never, dtype=np.int64)
    for j in range(BLOCK_SIZE):
        # Assign in reverse so the earliest occurrence lands last.
        first_seen[j, blocks[::-1, j]] = positions[::-1]
    targets = np.array([sbox[v] ^ k for k in true_round10_key])
    target_first = first_seen[np.arange(BLOCK_SIZE), targets]
    # Latest first-occurrence among the other 255 values, per position.
    masked = first_seen.copy()
    masked[np.arange(BLOCK_SIZE), targets] = -1
    others_done = masked.max(axis=1)
    reached_at = int(others_done.max())
    if reached_at > n:
        return None
    if not (target_first > reached_at).all():
        return None
    return reached_at


def estimate_residual_keyspace(n_faults: int) -> float:
    """Figure of merit for multi-fault recovery: 16 * log2(fault count).

    With more than one corrupted entry each position retains several
    indistinguishable candidates; this is the standard aggregate over
    the 16 positions.  Exposed as the raw formula, units left to the
    caller.
    """
    if n_faults < 1:
        raise ValueError("fault count must be at least 1")
    return 16.0 * math.log2(n_faults)
