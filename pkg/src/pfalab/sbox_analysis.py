"""Offline analysis of a substitution table.

Two artifacts are derived from a table ahead of deployment:

* A detection pair (P, C): a 16-byte seed block P and the block C
  obtained by applying the table to P sixteen bytes at a time for t
  rounds.  Seeds are placed along the cycles of the table's permutation
  so that t applications read every table entry at least once; a single
  corrupted entry then almost surely perturbs C.  The one exception is a
  fault that maps an entry onto a short cycle in a self-masking way,
  which is caught by also checking the (t+1)-th block C_hat.

* Redundant parity tables (H, V): byte-wise XOR of horizontally and
  vertically adjacent entries in the 16x16 grid view.  Any entry can be
  reconstructed four ways from its neighbours, enabling majority-vote
  repair (see guard.correct).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil

import numpy as np

from .sbox import NotAPermutation, SBoxTable, down, left, right, up


class InfeasibleAllocation(ValueError):
    """More cycles than seeds: one walk per cycle is impossible."""


class AllocationMismatch(ValueError):
    """Allocation shape does not match the table's cycle structure."""


@dataclass(frozen=True)
class CycleDecomposition:
    """Cycles of a table viewed as a permutation.

    Each cycle is rotated to start at its smallest member and cycles are
    ordered by that member, so the decomposition is canonical.
    """

    cycles: tuple[tuple[int, ...], ...]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cycles)

    def __len__(self) -> int:
        return len(self.cycles)


def cycle_decompose(table: SBoxTable) -> CycleDecomposition:
    if not table.is_permutation():
        raise NotAPermutation("cycle structure requires a permutation")
    seen = bytearray(256)
    cycles = []
    for start in range(256):
        if seen[start]:
            continue
        cycle = []
        x = start
        while not seen[x]:
            seen[x] = 1
            cycle.append(x)
            x = table[x]
        cycles.append(tuple(cycle))
    return CycleDecomposition(tuple(cycles))


@dataclass(frozen=True)
class SeedAllocation:
    """How many of the m walk seeds go to each cycle.

    d[i] seeds walk cycle i; each then has to cover a stretch of
    r[i] = ceil(length[i] / d[i]) elements, and the number of table
    applications is t = max(r).
    """

    d: tuple[int, ...]
    r: tuple[int, ...]
    t: int
    m: int


def allocate_seeds(lengths, m: int = 16) -> SeedAllocation:
    """Distribute m seeds over cycles to minimise the walk length t.

    Exhaustive over all compositions of m into len(lengths) positive
    parts; m is a block's 16 bytes and tables rarely decompose into more
    than a handful of cycles, so the search space stays tiny.  Ties on t
    are broken by the total covered stretch sum(r), then by the
    lexicographically smallest d, making the result deterministic.
    """
    lengths = tuple(lengths)
    k = len(lengths)
    if k == 0:
        raise ValueError("no cycles to allocate seeds to")
    if k > m:
        raise InfeasibleAllocation(
            f"{k} cycles need at least {k} seeds, only {m} available")
    best: tuple[int, int, tuple[int, ...]] | None = None
    for cuts in combinations(range(1, m), k - 1):
        bounds = (0,) + cuts + (m,)
        d = tuple(bounds[i + 1] - bounds[i] for i in range(k))
        r = tuple(ceil(length / di) for length, di in zip(lengths, d))
        cand = (max(r), sum(r), d)
        if best is None or cand < best:
            best = cand
    assert best is not None
    t, _, d = best
    r = tuple(ceil(length / di) for length, di in zip(lengths, d))
    return SeedAllocation(d=d, r=r, t=t, m=m)


@dataclass(frozen=True)
class DetectionPair:
    """Precomputed (P, C) checkpoint plus the follow-up block C_hat."""

    p: bytes
    c: bytes
    c_hat: bytes
    t: int


def build_detection_pair(
    table: SBoxTable,
    allocation: SeedAllocation | None = None,
) -> DetectionPair:
    """Place seeds along the cycles and precompute the checkpoints.

    Within cycle i the d[i] seeds sit r[i] positions apart, so the t-step
    walks tile the cycle with overlap only at the stretch ends.
    """
    decomp = cycle_decompose(table)
    if allocation is None:
        allocation = allocate_seeds(decomp.lengths)
    if len(allocation.d) != len(decomp):
        raise AllocationMismatch(
            f"allocation has {len(allocation.d)} cycles, table has {len(decomp)}")
    if sum(allocation.d) != allocation.m:
        raise AllocationMismatch("seed counts do not sum to m")
    seeds = []
    for cycle, di, ri in zip(decomp.cycles, allocation.d, allocation.r):
        for j in range(di):
            seeds.append(cycle[(j * ri) % len(cycle)])
    p = bytes(seeds)
    c = p
    for _ in range(allocation.t):
        c = c.translate(table.entries)
    c_hat = c.translate(table.entries)
    return DetectionPair(p=p, c=c, c_hat=c_hat, t=allocation.t)


def verify_detection(
    table: SBoxTable,
    pair: DetectionPair,
    use_second_checkpoint: bool = True,
) -> list[tuple[int, int]]:
    """Exhaustively try every single-entry fault against the pair.

    Returns the (index, wrong value) pairs that would go undetected; an
    empty list certifies completeness against single faults.  A fault
    only matters to the walks that actually read its index, so each of
    the 65280 cases reduces to re-walking a couple of lanes, vectorised
    over all 255 wrong values at once.
    """
    lut = np.frombuffer(table.entries, dtype=np.uint8)
    # Which lanes read index x, considering the t reads for C plus the
    # one extra read for C_hat.
    reads_for = {x: [] for x in range(256)}
    extra = 1 if use_second_checkpoint else 0
    for lane, seed in enumerate(pair.p):
        x = seed
        inputs = set()
        for _ in range(pair.t + extra):
            inputs.add(x)
            x = table[x]
        for idx in inputs:
            reads_for[idx].append(lane)
    escapes = []
    values = np.arange(256, dtype=np.uint8)
    for x in range(256):
        lanes = reads_for[x]
        if not lanes:
            # Never read: every wrong value escapes.  Cannot happen with
            # a full-coverage allocation, but report it honestly.
            escapes.extend((x, int(e)) for e in values if e != table[x])
            continue
        wrong = values[values != table[x]]
        escaped = np.ones(len(wrong), dtype=bool)
        for lane in lanes:
            s = np.full(len(wrong), pair.p[lane], dtype=np.uint8)
            for _ in range(pair.t):
                s = np.where(s == x, wrong, lut[s])
            lane_ok = s == pair.c[lane]
            if use_second_checkpoint:
                s2 = np.where(s == x, wrong, lut[s])
                lane_ok &= s2 == pair.c_hat[lane]
            escaped &= lane_ok
        escapes.extend((x, int(e)) for e in wrong[escaped])
    return escapes


@dataclass(frozen=True)
class RedundantTables:
    """Parity tables for neighbour reconstruction.

    h[x] = table[x] ^ table[right(x)] and v[x] = table[x] ^ table[down(x)]
    on the toroidal 16x16 grid.  They are assumed to live in storage that
    the modelled fault does not reach; the fault model targets the main
    table only.
    """

    h: bytes
    v: bytes


def build_redundant_tables(table: SBoxTable) -> RedundantTables:
    h = bytes(table[x] ^ table[right(x)] for x in range(256))
    v = bytes(table[x] ^ table[down(x)] for x in range(256))
    return RedundantTables(h=h, v=v)


def analyze_table(table: SBoxTable, m: int = 16) -> dict:
    """One-stop structural report, JSON-compatible.

    Cycles are lists of table indices, blocks are 32-char lowercase hex,
    and the two parity tables are arrays of 256 two-char hex entries.
    """
    decomp = cycle_decompose(table)
    allocation = allocate_seeds(decomp.lengths, m)
    pair = build_detection_pair(table, allocation)
    redundant = build_redundant_tables(table)
    return {
        "cycles": [list(c) for c in decomp.cycles],
        "d": list(allocation.d),
        "t": allocation.t,
        "p": pair.p.hex(),
        "c": pair.c.hex(),
        "c_hat": pair.c_hat.hex(),
        "h_table": [f"{b:02x}" for b in redundant.h],
        "v_table": [f"{b:02x}" for b in redundant.v],
    }
