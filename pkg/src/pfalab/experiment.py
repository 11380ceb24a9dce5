"""Seeded trial harness tying tables, faults and the attack together.

A trial draws a key, a fault pattern and a plaintext stream from
per-purpose substreams of the master seed, encrypts the stream under
the chosen implementation, and evaluates the ciphertext-only recovery
against what the device actually emitted.  Every randomness source is
labeled by (seed, trial, purpose), so two implementations run with the
same seed face identical keys, faults and plaintexts, and any single
trial can be replayed without rerunning the others.

Run artifacts are a config snapshot, one JSON record per trial, the
per-value distribution curves for the tracked trials, and the summary
table over minimum-ciphertext counts.  All files are pure functions of
the config; nothing time- or host-dependent is written.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .aes import (
    BLOCK_SIZE,
    CipherOptions,
    block_from_hex,
    encrypt_blocks,
    key_expand,
)
from .attack import (
    accumulate,
    min_ciphertexts_to_recover,
    recover_key_maxmin,
    estimate_residual_keyspace,
)
from .classic import (
    IDDMR,
    MODULE_ONE_ONLY,
    NCO,
    RCO,
    REDMR,
    SHARED,
    ZCO,
    DmrConfig,
    bs_encrypt_blocks,
    dmr_encrypt_blocks,
)
from .faults import (
    BIT_FLIP,
    CLUSTERED,
    RANDOM_BYTE,
    SCATTERED,
    classify_case,
    inject,
    random_faults,
)
from .guard import (
    CorrectionReport,
    GuardConfig,
    correct,
    detect,
    precorrect_table,
)
from .rng import RNG_ALGORITHM, Rng, derive_seed
from .sbox import AES_INV_SBOX, AES_SBOX
from .sbox_analysis import build_detection_pair, build_redundant_tables

ORI = "ori"
DMR = "dmr"
BS = "bs"
DC = "dc"
DC_PRECORRECT = "dc_precorrect"

IMPLEMENTATIONS = (ORI, DMR, BS, DC, DC_PRECORRECT)

SINGLE_FAULT = "single_fault"
MULTI_FAULT = "multi_fault"


class ConfigError(ValueError):
    """An ExperimentConfig field is missing, malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on; the seed pins all randomness.

    scenario and fault_scope may be left None and are then resolved
    from the fault count and the implementation (multi_fault above one
    fault; DMR gets per-module tables, byte scrambling a shared one).
    key_hex fixes the key across trials; by default each trial draws
    its own.
    """

    implementation: str
    n_faults: int = 1
    scenario: str | None = None
    placement: str = SCATTERED
    value_policy: str = RANDOM_BYTE
    n_ciphertexts: int = 10_000
    n_trials: int = 100
    seed: int = 0
    key_hex: str | None = None
    shift_rows: bool = True
    dmr_mode: str = REDMR
    dmr_defense: str = ZCO
    fault_scope: str | None = None
    dc_max_rounds: int = 2
    gap_threshold: int = 5
    curve_trials: int = 1
    curve_positions: tuple = (0,)
    curve_grid: int = 100

    def __post_init__(self):
        if self.implementation not in IMPLEMENTATIONS:
            raise ConfigError(f"unknown implementation {self.implementation!r}")
        if not 1 <= self.n_faults <= 255:
            raise ConfigError("n_faults must be in 1..255")
        derived = MULTI_FAULT if self.n_faults > 1 else SINGLE_FAULT
        if self.scenario is None:
            object.__setattr__(self, "scenario", derived)
        elif self.scenario != derived:
            raise ConfigError(
                f"scenario {self.scenario!r} inconsistent with "
                f"{self.n_faults} fault(s)")
        if self.placement not in (SCATTERED, CLUSTERED):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.value_policy not in (RANDOM_BYTE, BIT_FLIP):
            raise ConfigError(f"unknown value policy {self.value_policy!r}")
        if self.n_ciphertexts < 1:
            raise ConfigError("n_ciphertexts must be positive")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be positive")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.key_hex is not None:
            try:
                block_from_hex(self.key_hex)
            except ValueError as exc:
                raise ConfigError(f"bad key_hex: {exc}") from exc
        if self.dmr_mode not in (REDMR, IDDMR):
            raise ConfigError(f"unknown dmr_mode {self.dmr_mode!r}")
        if self.dmr_defense not in (NCO, ZCO, RCO):
            raise ConfigError(f"unknown dmr_defense {self.dmr_defense!r}")
        if self.fault_scope is None:
            scope = SHARED if self.implementation == BS else MODULE_ONE_ONLY
            object.__setattr__(self, "fault_scope", scope)
        elif self.fault_scope not in (MODULE_ONE_ONLY, SHARED):
            raise ConfigError(f"unknown fault_scope {self.fault_scope!r}")
        if self.dc_max_rounds < 1:
            raise ConfigError("dc_max_rounds must be at least 1")
        if self.gap_threshold < 1:
            raise ConfigError("gap_threshold must be at least 1")
        if not 0 <= self.curve_trials <= self.n_trials:
            raise ConfigError("curve_trials must be in 0..n_trials")
        positions = tuple(self.curve_positions)
        if any(not 0 <= p < BLOCK_SIZE for p in positions):
            raise ConfigError("curve positions must be in 0..15")
        object.__setattr__(self, "curve_positions", positions)
        if self.curve_grid < 1:
            raise ConfigError("curve_grid must be positive")

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["curve_positions"] = list(self.curve_positions)
        out["rng_algorithm"] = RNG_ALGORITHM
        return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list = field(default_factory=list)

    def table3_csv(self) -> str:
        return emit_table3(self.records)

    def curves_csv(self) -> str:
        return emit_distribution_curves(self.records)

    def summary(self) -> str:
        return summarize(self.records)


def _encrypt_trial(config, round_keys, faulted, plaintexts, options, rco_rng):
    """One trial's emitted stream plus implementation-specific extras.

    Returns (public, attack_stream, zco_filter, extras): public is every
    block that leaves the device (curves are drawn over it), the attack
    stream is what feeds the recovery histogram, zco_filter tells the
    minimum-ciphertext scan to skip all-zero blocks while still counting
    them.
    """
    impl = config.implementation
    if impl == ORI:
        cts = encrypt_blocks(plaintexts, round_keys, faulted, options)
        return cts, cts, False, {}
    if impl == DMR:
        cfg = DmrConfig(mode=config.dmr_mode, defense=config.dmr_defense,
                        fault_scope=config.fault_scope)
        out, mismatch = dmr_encrypt_blocks(
            plaintexts, round_keys, AES_SBOX, faulted, cfg,
            rng=rco_rng, options=options)
        extras = {"dmr_mismatches": int(mismatch.sum())}
        if cfg.defense == NCO:
            public = out[~mismatch]
            return public, public, False, extras
        if cfg.defense == ZCO:
            kept = out.any(axis=1)
            return out, out[kept], True, extras
        return out, out, False, extras
    if impl == BS:
        if config.fault_scope == SHARED:
            table_a, table_b = faulted, faulted
        else:
            table_a, table_b = faulted, AES_SBOX
        cts = bs_encrypt_blocks(plaintexts, round_keys, table_a, table_b,
                                options)
        return cts, cts, False, {}
    if impl == DC:
        guard = GuardConfig(max_correction_rounds=config.dc_max_rounds)
        pair = _detection_pair()
        tables = _redundant_tables()
        detected = detect(faulted, pair, guard.use_second_checkpoint)
        if detected:
            working, report = correct(faulted, tables, pair, guard)
        else:
            working, report = faulted, CorrectionReport(converged=True,
                                                        rounds_used=0)
        cts = encrypt_blocks(plaintexts, round_keys, working, options)
        extras = {
            "detected": detected,
            "correction": report.to_json_dict(),
            "table_restored": working == AES_SBOX,
        }
        return cts, cts, False, extras
    if impl == DC_PRECORRECT:
        effective = precorrect_table(faulted, _redundant_tables())
        cts = encrypt_blocks(plaintexts, round_keys, effective, options)
        return cts, cts, False, {"table_restored": effective == AES_SBOX}
    raise ConfigError(f"unknown implementation {impl!r}")


_PAIR = None
_TABLES = None


def _detection_pair():
    global _PAIR
    if _PAIR is None:
        _PAIR = build_detection_pair(AES_SBOX)
    return _PAIR


def _redundant_tables():
    global _TABLES
    if _TABLES is None:
        _TABLES = build_redundant_tables(AES_SBOX)
    return _TABLES


def _curve_rows(public: np.ndarray, positions, grid_step: int) -> list:
    """Running per-value frequency estimates over the emitted stream."""
    rows = []
    n = public.shape[0]
    for position in positions:
        column = public[:, position]
        counts = np.zeros(256, dtype=np.int64)
        prev = 0
        for n_seen in range(grid_step, n + 1, grid_step):
            counts += np.bincount(column[prev:n_seen], minlength=256)
            prev = n_seen
            for value in range(256):
                rows.append([position, value, n_seen,
                             int(counts[value]) / n_seen])
    return rows


def run_trial(config: ExperimentConfig, trial: int) -> dict:
    """Run one seeded trial and return its JSON-safe record."""
    key_rng = Rng(derive_seed(config.seed, trial, "key"))
    fault_rng = Rng(derive_seed(config.seed, trial, "fault"))
    pt_rng = Rng(derive_seed(config.seed, trial, "plaintext"))
    rco_rng = Rng(derive_seed(config.seed, trial, "rco"))

    if config.key_hex is not None:
        key = block_from_hex(config.key_hex)
    else:
        key = key_rng.randbytes(BLOCK_SIZE)
    round_keys = key_expand(key)
    true_k10 = round_keys[10]

    spec = random_faults(fault_rng, config.n_faults,
                         placement=config.placement,
                         value_policy=config.value_policy)
    faulted = inject(AES_SBOX, spec)

    raw = pt_rng.randbytes(BLOCK_SIZE * config.n_ciphertexts)
    plaintexts = np.frombuffer(raw, dtype=np.uint8).reshape(
        config.n_ciphertexts, BLOCK_SIZE)
    options = CipherOptions(shift_rows_enabled=config.shift_rows)

    public, attack_stream, zco_filter, extras = _encrypt_trial(
        config, round_keys, faulted, plaintexts, options, rco_rng)

    x0, e0 = spec.faults[0]
    v = x0
    v_star = AES_INV_SBOX[e0]

    hist = accumulate(np.ascontiguousarray(attack_stream))
    recovery = recover_key_maxmin(hist, v, v_star,
                                  gap_threshold=config.gap_threshold)
    min_ct = min_ciphertexts_to_recover(
        public, true_k10, v, v_star, zco_filter=zco_filter)

    n_present = sum(1 for b in recovery.recovered if b is not None)
    n_correct = sum(1 for j, b in enumerate(recovery.recovered)
                    if b == true_k10[j])

    record = {
        "trial": trial,
        "implementation": config.implementation,
        "scenario": config.scenario,
        "seed": config.seed,
        "rng_algorithm": RNG_ALGORITHM,
        "config": config.to_json_dict(),
        "key": key.hex(),
        "true_k10": true_k10.hex(),
        "fault_spec": spec.to_json_dict(),
        "fault_case": classify_case(spec),
        "v": v,
        "v_star": v_star,
        "n_emitted": int(public.shape[0]),
        "n_attack": hist.n,
        "min_ciphertexts": min_ct,
        "not_reached": min_ct is None,
        "recovery": recovery.to_json_dict(),
        "confident": [bool(flag) for flag in recovery.confident],
        "n_recovered": n_present,
        "n_correct": n_correct,
        "full_recovery": n_present == BLOCK_SIZE and n_correct == BLOCK_SIZE,
        "histogram": {"n": hist.n, "counts": hist.counts.tolist()},
    }
    record.update(extras)
    if config.scenario == MULTI_FAULT:
        record["residual_keyspace_bits"] = estimate_residual_keyspace(
            config.n_faults)
    if trial < config.curve_trials:
        record["curves"] = _curve_rows(public, config.curve_positions,
                                       config.curve_grid)
    return record


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    records = [run_trial(config, trial) for trial in range(config.n_trials)]
    return ExperimentResult(config=config, records=records)


def emit_table3(records) -> str:
    """Minimum-ciphertext summary, one row per implementation.

    p90 is the value at rank ceil(0.9 n) among the trials that reached
    recovery; not_reached_fraction counts the trials that never did.
    Implementations with no reached trial get NA statistics.
    """
    by_impl: dict = {}
    order = []
    for record in records:
        impl = record["implementation"]
        if impl not in by_impl:
            by_impl[impl] = []
            order.append(impl)
        by_impl[impl].append(record["min_ciphertexts"])
    lines = ["implementation,min,median,p90,not_reached_fraction"]
    for impl in order:
        values = by_impl[impl]
        reached = sorted(value for value in values if value is not None)
        if reached:
            low = str(reached[0])
            mid = str(statistics.median(reached))
            p90 = str(reached[math.ceil(0.9 * len(reached)) - 1])
        else:
            low = mid = p90 = "NA"
        fraction = (len(values) - len(reached)) / len(values)
        lines.append(f"{impl},{low},{mid},{p90},{fraction}")
    return "\n".join(lines) + "\n"


def emit_distribution_curves(records) -> str:
    """Per-value running frequencies for the curve-tracked trials."""
    lines = ["trial,position,value,n,probability"]
    for record in records:
        for position, value, n_seen, probability in record.get("curves", ()):
            lines.append(
                f"{record['trial']},{position},{value},{n_seen},{probability}")
    return "\n".join(lines) + "\n"


def summarize(records) -> str:
    """Human-readable per-implementation digest of a record list."""
    by_impl: dict = {}
    order = []
    for record in records:
        impl = record["implementation"]
        if impl not in by_impl:
            by_impl[impl] = []
            order.append(impl)
        by_impl[impl].append(record)
    lines = []
    for impl in order:
        recs = by_impl[impl]
        reached = sorted(r["min_ciphertexts"] for r in recs
                         if r["min_ciphertexts"] is not None)
        full = sum(1 for r in recs if r["full_recovery"])
        parts = [f"{impl}: trials={len(recs)}", f"full_recovery={full}"]
        if reached:
            parts.append(f"min={reached[0]}")
            parts.append(f"median={statistics.median(reached)}")
            parts.append(f"p90={reached[math.ceil(0.9 * len(reached)) - 1]}")
        parts.append(
            f"not_reached={(len(recs) - len(reached)) / len(recs)}")
        lines.append("  ".join(parts))
    return "\n".join(lines) + "\n"


def _canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def render_files(result: ExperimentResult) -> dict:
    """The run directory's contents as filename -> text.

    Byte-for-byte reproducible: identical configs yield identical file
    contents, which `--check` relies on.
    """
    records_text = "".join(
        _canonical_json(record) + "\n" for record in result.records)
    return {
        "config.json": _canonical_json(result.config.to_json_dict()) + "\n",
        "records.jsonl": records_text,
        "curves.csv": result.curves_csv(),
        "table3.csv": result.table3_csv(),
    }


def write_run(result: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in render_files(result).items():
        (out / name).write_text(text)
    return out
