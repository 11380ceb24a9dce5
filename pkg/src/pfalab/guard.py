"""Closed-loop table checking and neighbour-vote repair.

The guard runs before each encryption:

1. detect: walk the stored seed block P through t table applications
   and compare against the precomputed checkpoint C (and one further
   step against C_hat).  Any single corrupted entry flips the
   comparison, at the cost of 16*t extra lookups and no storage beyond
   three blocks.

2. correct: if detection fires, rebuild entries by majority vote over
   the four neighbour reconstructions offered by the parity tables.
   One sweep repairs any entry that still has at least two sound
   votes; denser damage is peeled from the outside in over repeated
   sweeps.

Both steps operate on a working copy; the persistent (possibly faulted)
storage is never written, mirroring a device that refreshes its RAM
copy of the table on every call.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .aes import CipherOptions, DEFAULT_OPTIONS, encrypt
from .sbox import SBoxTable, down, left, neighbors, right, up
from .sbox_analysis import DetectionPair, RedundantTables

_UP = np.array([up(x) for x in range(256)], dtype=np.intp)
_DOWN = np.array([down(x) for x in range(256)], dtype=np.intp)
_LEFT = np.array([left(x) for x in range(256)], dtype=np.intp)
_RIGHT = np.array([right(x) for x in range(256)], dtype=np.intp)


FULL_TABLE = "full_table"
SINGLE_ENTRY = "single_entry"


@dataclass(frozen=True)
class GuardConfig:
    """Knobs for the check-and-repair loop.

    max_correction_rounds bounds the vote sweeps per invocation.  The
    default is generous; deployments trade it down (two sweeps already
    repair anything but a dense cluster's core) and accept that a
    too-dense cluster stays flagged.  single_entry scope restricts
    writes to caller-specified indices, the cheap end of the correction
    cost range; full sweeps are the experiment default.
    """

    max_correction_rounds: int = 16
    scope: str = FULL_TABLE
    use_second_checkpoint: bool = True

    def __post_init__(self):
        if self.max_correction_rounds < 1:
            raise ValueError("max_correction_rounds must be at least 1")
        if self.scope not in (FULL_TABLE, SINGLE_ENTRY):
            raise ValueError(f"unknown scope {self.scope!r}")


DEFAULT_GUARD = GuardConfig()


def detect(
    table: SBoxTable,
    pair: DetectionPair,
    use_second_checkpoint: bool = True,
) -> bool:
    """True when the table fails the checkpoint walk (fault present)."""
    block = pair.p
    for _ in range(pair.t):
        block = block.translate(table.entries)
    if block != pair.c:
        return True
    if use_second_checkpoint:
        return block.translate(table.entries) != pair.c_hat
    return False


def reconstruct_candidates(
    table: SBoxTable,
    tables: RedundantTables,
    x: int,
) -> tuple[int, int, int, int]:
    """The four neighbour-based reconstructions of entry x.

    Each parity entry ties two adjacent table entries together, so each
    of the four neighbours proposes a value for x; a proposal is sound
    iff that neighbour's entry is sound.
    """
    return (
        table[up(x)] ^ tables.v[up(x)],
        table[down(x)] ^ tables.v[x],
        table[left(x)] ^ tables.h[left(x)],
        table[right(x)] ^ tables.h[x],
    )


def vote(candidates: tuple[int, ...], current: int) -> tuple[int, bool]:
    """Majority vote with a pair fallback.

    Resolves to the unique value holding at least two of the four votes;
    a 2-2 tie or four distinct values keeps the current entry and
    reports the vote as unresolved.
    """
    counts = Counter(candidates)
    (top_value, top_count), *rest = counts.most_common()
    if top_count >= 3:
        return top_value, True
    if top_count == 2 and (not rest or rest[0][1] < 2):
        return top_value, True
    return current, False


def _sweep(entries: np.ndarray, h: np.ndarray, v: np.ndarray):
    """One simultaneous vote over all entries.

    Returns (new entries, changed mask, unresolved mask).  All votes
    read the same snapshot, so sweep results do not depend on entry
    order.
    """
    cand = np.stack((
        entries[_UP] ^ v[_UP],
        entries[_DOWN] ^ v,
        entries[_LEFT] ^ h[_LEFT],
        entries[_RIGHT] ^ h,
    ))
    counts = np.ones((4, 256), dtype=np.int8)
    for i in range(4):
        for j in range(4):
            if i != j:
                counts[i] += cand[i] == cand[j]
    top = counts.max(axis=0)
    pairs = (counts == 2).sum(axis=0)
    resolved = (top >= 3) | ((top == 2) & (pairs == 2))
    winner = np.take_along_axis(cand, counts.argmax(axis=0)[None, :], axis=0)[0]
    new = np.where(resolved, winner, entries)
    return new, resolved & (new != entries), ~resolved


@dataclass(frozen=True)
class CorrectionReport:
    """What a correct() invocation did and where it ended up.

    changed_entries lists (index, old value, new value) in write order;
    unresolved lists the indices where the final state's vote still
    cannot decide.  converged means the checkpoint walk passes on the
    final table.
    """

    converged: bool
    rounds_used: int
    changed_entries: tuple[tuple[int, int, int], ...] = field(default=())
    unresolved: tuple[int, ...] = field(default=())

    def to_json_dict(self) -> dict:
        return {
            "changed": [[x, old, new] for x, old, new in self.changed_entries],
            "rounds": self.rounds_used,
            "unresolved": list(self.unresolved),
            "converged": self.converged,
        }


def correct(
    table: SBoxTable,
    tables: RedundantTables,
    pair: DetectionPair,
    cfg: GuardConfig = DEFAULT_GUARD,
    indices=None,
) -> tuple[SBoxTable, CorrectionReport]:
    """Repair a working copy of the table by repeated vote sweeps.

    Sweeps run until the checkpoint walk passes, a sweep changes
    nothing, or the round budget is spent.  Writes within a round are
    simultaneous (every vote reads the same snapshot), so entry order
    never matters and rounds_used is well defined.  Under single_entry
    scope only the given indices may be rewritten; the vote still reads
    the whole table.
    """
    if cfg.scope == SINGLE_ENTRY and indices is None:
        raise ValueError("single_entry scope needs explicit indices")
    entries = np.frombuffer(table.entries, dtype=np.uint8).copy()
    h = np.frombuffer(tables.h, dtype=np.uint8)
    v = np.frombuffer(tables.v, dtype=np.uint8)
    allowed = None
    if cfg.scope == SINGLE_ENTRY:
        allowed = np.zeros(256, dtype=bool)
        allowed[list(indices)] = True
    changed_entries: list[tuple[int, int, int]] = []
    rounds_used = 0
    for _ in range(cfg.max_correction_rounds):
        working = SBoxTable(entries.tobytes())
        if not detect(working, pair, cfg.use_second_checkpoint):
            break
        new, changed, _ = _sweep(entries, h, v)
        if allowed is not None:
            new = np.where(allowed, new, entries)
            changed &= allowed
        rounds_used += 1
        for x in np.flatnonzero(changed):
            changed_entries.append((int(x), int(entries[x]), int(new[x])))
        if not changed.any():
            break
        entries = new
    final = SBoxTable(entries.tobytes())
    # Unresolved is assessed on the final state so that converged
    # (clean detect) always implies an empty list.
    _, _, unresolved_mask = _sweep(entries, h, v)
    report = CorrectionReport(
        converged=not detect(final, pair, cfg.use_second_checkpoint),
        rounds_used=rounds_used,
        changed_entries=tuple(changed_entries),
        unresolved=tuple(int(i) for i in np.flatnonzero(unresolved_mask)),
    )
    return final, report


def precorrect_lookup(table: SBoxTable, tables: RedundantTables, x: int) -> int:
    """Voted value for one lookup, without writing anything.

    The always-on variant of repair: every table read is replaced by
    this reconstruction, so a single fault is masked from the very first
    encryption, at four lookups and three XORs per table read.
    """
    value, resolved = vote(reconstruct_candidates(table, tables, x), table[x])
    return value if resolved else table[x]


def precorrect_table(table: SBoxTable, tables: RedundantTables) -> SBoxTable:
    """All 256 voted lookups as an effective table (one vote sweep)."""
    entries = np.frombuffer(table.entries, dtype=np.uint8)
    h = np.frombuffer(tables.h, dtype=np.uint8)
    v = np.frombuffer(tables.v, dtype=np.uint8)
    new, _, _ = _sweep(entries, h, v)
    return SBoxTable(new.tobytes())


@dataclass(frozen=True)
class DcResult:
    """Outcome of one guarded encryption."""

    ciphertext: bytes
    detected: bool
    report: CorrectionReport
    table: SBoxTable


def dc_encrypt(
    plaintext: bytes,
    round_keys: list[bytes],
    table: SBoxTable,
    tables: RedundantTables,
    pair: DetectionPair,
    cfg: GuardConfig = DEFAULT_GUARD,
    options: CipherOptions = DEFAULT_OPTIONS,
) -> DcResult:
    """Detect, repair if needed, then encrypt with the working table.

    table is the persistent storage as it currently stands; the repair
    happens on this call's working copy only.  When detection stays
    quiet the encryption uses the table as-is, no sweep runs, and the
    report shows zero rounds.
    """
    if detect(table, pair, cfg.use_second_checkpoint):
        working, report = correct(table, tables, pair, cfg)
        detected = True
    else:
        working = table
        report = CorrectionReport(converged=True, rounds_used=0)
        detected = False
    ciphertext = encrypt(plaintext, round_keys, working, options)
    return DcResult(ciphertext=ciphertext, detected=detected,
                    report=report, table=working)
