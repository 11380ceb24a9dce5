"""Command-line front end: table analysis, seeded runs, attack, costs.

Exit codes: 0 on success, 1 on a configuration or input error, 2 when
a --check verification fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .aes import BLOCK_SIZE, block_from_hex
from .attack import (
    accumulate,
    min_ciphertexts_to_recover,
    recover_key_maxmin,
    search_fault_values,
)
from .classic import IDDMR, MODULE_ONE_ONLY, NCO, RCO, REDMR, SHARED, ZCO
from .costs import to_csv as cost_table_csv
from .experiment import (
    IMPLEMENTATIONS,
    ExperimentConfig,
    render_files,
    run_experiment,
    write_run,
)
from .faults import BIT_FLIP, CLUSTERED, RANDOM_BYTE, SCATTERED
from .sbox import AES_SBOX
from .sbox_analysis import analyze_table


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems with exit code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_analyze_sbox(args) -> int:
    report = analyze_table(AES_SBOX)
    _write_or_print(json.dumps(report, indent=2, sort_keys=True) + "\n",
                    args.out)
    return 0


def _cmd_run(args) -> int:
    config = ExperimentConfig(
        implementation=args.impl,
        n_faults=args.faults,
        placement=args.placement,
        value_policy=args.value_policy,
        n_ciphertexts=args.n,
        n_trials=args.trials,
        seed=args.seed,
        key_hex=args.key,
        shift_rows=not args.no_shiftrows,
        dmr_mode=args.dmr_mode,
        dmr_defense=args.dmr_defense,
        fault_scope=args.fault_scope,
        dc_max_rounds=args.dc_rounds,
        gap_threshold=args.gap_threshold,
        curve_trials=args.curve_trials,
    )
    result = run_experiment(config)
    out_dir = write_run(result, args.out)
    sys.stdout.write(result.table3_csv())
    sys.stdout.write(result.summary())
    sys.stdout.write(f"run written to {out_dir}\n")
    if args.check:
        again = run_experiment(config)
        if render_files(again) != render_files(result):
            sys.stderr.write("check failed: rerun produced different files\n")
            return 2
        sys.stdout.write("check passed: rerun reproduced all files\n")
    return 0


def _read_blocks(path: str) -> np.ndarray:
    blocks = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
        text = line.strip()
        if not text:
            continue
        try:
            blocks.append(block_from_hex(text))
        except ValueError as exc:
            raise ValueError(f"{path}:{line_no}: {exc}") from exc
    if not blocks:
        raise ValueError(f"{path}: no ciphertext blocks")
    joined = np.frombuffer(b"".join(blocks), dtype=np.uint8)
    return joined.reshape(len(blocks), BLOCK_SIZE)


def _cmd_attack(args) -> int:
    if args.search:
        if args.v is not None or args.v_star is not None:
            raise ValueError("--search excludes --v/--v-star")
    elif args.v is None or args.v_star is None:
        raise ValueError("give either --search or both --v and --v-star")
    blocks = _read_blocks(args.ciphertexts)
    stream = blocks[blocks.any(axis=1)] if args.zco_filter else blocks
    hist = accumulate(stream)
    output = {}
    if args.search:
        found = search_fault_values(hist)
        v, v_star, _ = found.ranked[0]
        output["search"] = {
            "top_score": found.top_score,
            "inconclusive": found.inconclusive,
        }
    else:
        v, v_star = args.v, args.v_star
    recovery = recover_key_maxmin(hist, v, v_star,
                                  gap_threshold=args.gap_threshold)
    output.update(recovery.to_json_dict())
    if args.true_k10 is not None:
        output["min_ciphertexts"] = min_ciphertexts_to_recover(
            blocks, block_from_hex(args.true_k10), v, v_star,
            zco_filter=args.zco_filter)
    if args.hist_out is not None:
        Path(args.hist_out).write_text(hist.to_csv())
    _write_or_print(json.dumps(output, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_cost(args) -> int:
    _write_or_print(cost_table_csv(), args.out)
    return 0


def _hex_int(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfalab",
                     description="persistent-fault lab for table ciphers")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze-sbox",
                             help="cycle structure and guard material")
    analyze.add_argument("--out", help="write JSON here instead of stdout")
    analyze.set_defaults(func=_cmd_analyze_sbox)

    run = sub.add_parser("run", help="seeded fault/attack experiment")
    run.add_argument("--impl", required=True, choices=IMPLEMENTATIONS)
    run.add_argument("--faults", type=int, default=1)
    run.add_argument("--placement", choices=(SCATTERED, CLUSTERED),
                     default=SCATTERED)
    run.add_argument("--value-policy", choices=(RANDOM_BYTE, BIT_FLIP),
                     default=RANDOM_BYTE)
    run.add_argument("--n", type=int, default=10_000,
                     help="ciphertexts per trial")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--key", help="fixed key as 32 hex digits")
    run.add_argument("--out", required=True, help="run directory")
    run.add_argument("--no-shiftrows", action="store_true")
    run.add_argument("--dmr-mode", choices=(REDMR, IDDMR), default=REDMR)
    run.add_argument("--dmr-defense", choices=(NCO, ZCO, RCO), default=ZCO)
    run.add_argument("--fault-scope", choices=(MODULE_ONE_ONLY, SHARED),
                     default=None)
    run.add_argument("--dc-rounds", type=int, default=2,
                     help="correction round budget per detection")
    run.add_argument("--gap-threshold", type=int, default=5)
    run.add_argument("--curve-trials", type=int, default=1)
    run.add_argument("--check", action="store_true",
                     help="rerun and verify byte-identical artifacts")
    run.set_defaults(func=_cmd_run)

    attack = sub.add_parser("attack", help="key recovery from a stream")
    attack.add_argument("ciphertexts",
                        help="file of hex blocks, one per line")
    attack.add_argument("--v", type=_hex_int,
                        help="faulted table index hypothesis")
    attack.add_argument("--v-star", type=_hex_int,
                        help="index mapping to the duplicated value")
    attack.add_argument("--search", action="store_true",
                        help="rank (v, v*) hypotheses instead")
    attack.add_argument("--zco-filter", action="store_true",
                        help="drop all-zero blocks from the histogram")
    attack.add_argument("--true-k10",
                        help="known round-10 key, for the minimum count")
    attack.add_argument("--gap-threshold", type=int, default=5)
    attack.add_argument("--hist-out", help="write histogram CSV here")
    attack.add_argument("--out", help="write JSON here instead of stdout")
    attack.set_defaults(func=_cmd_attack)

    cost = sub.add_parser("cost", help="operation-count cost table")
    cost.add_argument("--out", help="write CSV here instead of stdout")
    cost.set_defaults(func=_cmd_cost)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
