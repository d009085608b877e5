"""Command line front end.

Subcommands:

- run: one honest session; writes a transcript and a verdict summary
- attack: Monte Carlo estimate of one strategy's success rate; writes CSV
- sweep: attack x n cross product; one CSV row per cell

Formats:

- transcript lines: seq|phase|actor|event|k=v,k=v  (records flagged private
  are excluded unless --include-private; timestamps appear only with
  --timestamps)
- CSV columns: attack,n,mask_weight,trials,successes,rate,wilson99_low,
  wilson99_high,v1_fail,v2_fail,v3_fail,seed
- --plot renders the CSV rows as a PNG figure next to the delimited output

Exit codes: 0 success, 1 configuration error, 2 internal invariant violation,
3 sweep produced no rows. Identical flags produce byte-identical output; the
QDS_SIM_THREADS environment variable only parallelizes trial execution and
never changes results.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .adversary import (
    STRATEGIES,
    AttackKind,
    AttackSpec,
    TrialStats,
    monte_carlo,
    trial_rng,
)
from .protocol import (
    BitString,
    ProtocolError,
    TranscriptRecord,
    bits_text,
    run_honest_session,
)
from .report import render_rate_figure, stats_row, write_csv

MAX_SEED = 2**64 - 1
_ENV_THREADS = "QDS_SIM_THREADS"


class CLIError(Exception):
    """Configuration problem; maps to exit code 1."""


@dataclass(frozen=True)
class RunConfig:
    """Validated knobs shared by the subcommands."""

    n: int
    trials: int
    seed: int
    attack: str
    mask: Optional[BitString]
    crosscheck: bool
    out_path: str


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this tool reserves 2 for invariant
    # violations, so usage problems are remapped to 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def parse_mask(text: str, n: int) -> Optional[BitString]:
    """Mask flag: 'all' or an integer literal whose bit i targets position i+1."""
    if text == "all":
        return None
    try:
        value = int(text, 0)
    except ValueError:
        raise CLIError(f"mask must be 'all' or an integer literal, got {text!r}")
    if value <= 0:
        raise CLIError("mask must select at least one position")
    if value >= 1 << n:
        raise CLIError(f"mask {text} does not fit n={n}")
    return tuple((value >> i) & 1 for i in range(n))


def _workers_hint() -> int:
    raw = os.environ.get(_ENV_THREADS)
    if raw is None:
        return 1
    try:
        workers = int(raw)
        if workers < 1:
            raise ValueError
    except ValueError:
        print(f"note: ignoring invalid {_ENV_THREADS}={raw!r}", file=sys.stderr)
        return 1
    return workers


def _check_common(n: int, trials: int, seed: int) -> None:
    if n < 1:
        raise CLIError(f"--n must be at least 1, got {n}")
    if trials < 1:
        raise CLIError(f"--trials must be at least 1, got {trials}")
    if not 0 <= seed <= MAX_SEED:
        raise CLIError("--seed must be an unsigned 64-bit integer")


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def render_transcript(records: Sequence[TranscriptRecord], include_private: bool = False) -> list[str]:
    lines = []
    for rec in records:
        if rec.private and not include_private:
            continue
        parts = [f"{k}={v}" for k, v in rec.payload.items()]
        if rec.private:
            parts.append("private=true")
        if rec.ts is not None:
            parts.append(f"ts={rec.ts:.6f}")
        lines.append(f"{rec.seq}|{rec.phase}|{rec.actor}|{rec.event}|{','.join(parts)}")
    return lines


def _summary_line(attack: str, n: int, mask_weight: int, stats: TrialStats, crosscheck: bool) -> str:
    profile = STRATEGIES[attack]
    base = (
        f"# attack={attack} n={n} mask_weight={mask_weight} trials={stats.trials}"
        f" successes={stats.successes} rate={stats.success_rate!r}"
        f" wilson99=[{stats.wilson99_low!r},{stats.wilson99_high!r}]"
    )
    law = profile.rate_law
    warn = ""
    if law == "crosscheck":
        if crosscheck:
            return base + " expected=0 detection=crosscheck"
        law, warn = "one", " WARN=triplet-only-verification-accepts-forged-messages"
    if law == "one":
        note = f' note="{profile.note}"' if profile.note else ""
        return base + " expected=1" + note + warn
    if law == "zero":
        detection = profile.predicted_failures[0]
        return base + f" expected=0 detection={detection}"
    reference = 0.5**mask_weight
    within = "yes" if stats.wilson99_low <= reference <= stats.wilson99_high else "no"
    return base + f" reference=(1/2)^{mask_weight}={reference!r} within_wilson99={within}"


# ---- Subcommands ------------------------------------------------------------


def _cmd_run(args: argparse.Namespace) -> int:
    _check_common(args.n, 1, args.seed)
    try:
        session, report = run_honest_session(
            args.n,
            trial_rng(args.seed, 0),
            record_transcript=True,
            record_timestamps=args.timestamps,
        )
    except (ProtocolError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    lines = render_transcript(session.transcript, include_private=args.include_private)
    _write_text(args.out, "\n".join(lines) + "\n")
    accepted = report.bob_accepts and report.charlie_accepts
    print(f"session n={args.n} seed={args.seed} phase={session.phase.name}")
    print(
        "v1=" + bits_text([int(b) for b in report.v1_bits])
        + " v2=" + bits_text([int(b) for b in report.v2_bits])
        + " v3=" + bits_text([int(b) for b in report.v3_bits])
    )
    print(
        f"bob_accepts={str(report.bob_accepts).lower()}"
        f" charlie_accepts={str(report.charlie_accepts).lower()}"
        f" blamed={report.blamed.value}"
    )
    if accepted:
        print("result=ACCEPT")
        return 0
    print("result=REJECT")
    print("invariant violation: honest session was rejected", file=sys.stderr)
    return 2


def _cmd_attack(args: argparse.Namespace) -> int:
    _check_common(args.n, args.trials, args.seed)
    if args.attack == AttackKind.HONEST.value:
        raise CLIError("the honest baseline belongs to run or sweep, not attack")
    config = RunConfig(
        n=args.n,
        trials=args.trials,
        seed=args.seed,
        attack=args.attack,
        mask=parse_mask(args.mask, args.n),
        crosscheck=args.crosscheck,
        out_path=args.out,
    )
    spec = AttackSpec(AttackKind(config.attack), config.mask, config.crosscheck)
    try:
        stats = monte_carlo(spec, config.n, config.trials, config.seed, workers=_workers_hint())
    except ValueError as exc:
        raise CLIError(str(exc))
    mask_weight = sum(spec.resolve_mask(config.n))
    row = stats_row(config.attack, config.n, mask_weight, stats, config.seed)
    buffer = io.StringIO()
    write_csv([row], buffer)
    _write_text(config.out_path, buffer.getvalue())
    print(_summary_line(config.attack, config.n, mask_weight, stats, config.crosscheck))
    if args.plot:
        render_rate_figure([row], args.plot)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    attacks = [a.strip() for a in args.attacks.split(",") if a.strip()]
    if not attacks:
        raise CLIError("--attacks must name at least one strategy")
    try:
        n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise CLIError(f"--n-list must be comma-separated integers, got {args.n_list!r}")
    if not n_list:
        raise CLIError("--n-list must contain at least one value")
    _check_common(min(n_list), args.trials, args.seed)
    workers = _workers_hint()

    rows = []
    summaries = []
    cell = 0
    for attack in attacks:
        for n in n_list:
            cell_seed = int(np.random.SeedSequence((args.seed, cell)).generate_state(1, np.uint64)[0])
            cell += 1
            try:
                if attack not in STRATEGIES:
                    raise CLIError(f"unknown attack {attack!r}")
                if n < 1:
                    raise CLIError(f"n must be at least 1, got {n}")
                mask = parse_mask(args.mask, n)
                spec = AttackSpec(AttackKind(attack), mask, args.crosscheck)
                stats = monte_carlo(spec, n, args.trials, cell_seed, workers=workers)
            except (CLIError, ValueError) as exc:
                print(f"note: skipping attack={attack} n={n}: {exc}", file=sys.stderr)
                continue
            weight = sum(spec.resolve_mask(n))
            rows.append(stats_row(attack, n, weight, stats, cell_seed))
            summaries.append(_summary_line(attack, n, weight, stats, args.crosscheck))
    if not rows:
        print("error: every sweep cell failed", file=sys.stderr)
        return 3
    buffer = io.StringIO()
    write_csv(rows, buffer)
    _write_text(args.out, buffer.getvalue())
    for line in summaries:
        print(line)
    if args.plot:
        render_rate_figure(rows, args.plot)
    return 0


# ---- Parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qds-sim", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one honest session and print its verdict")
    run.add_argument("--n", type=int, required=True, help="message length in bits")
    run.add_argument("--seed", type=int, default=0, help="unsigned 64-bit master seed")
    run.add_argument("--out", default="-", help="transcript destination ('-' for stdout)")
    run.add_argument("--include-private", action="store_true", help="keep private-flagged records")
    run.add_argument("--timestamps", action="store_true", help="record wall-clock event times")

    attack_names = sorted(STRATEGIES)
    attack = sub.add_parser("attack", help="Monte Carlo estimate for one strategy")
    attack.add_argument("--attack", required=True, choices=attack_names)
    attack.add_argument("--n", type=int, required=True)
    attack.add_argument("--trials", type=int, required=True)
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--mask", default="all", help="'all' or an integer literal (bit i = position i+1)")
    attack.add_argument("--crosscheck", action=argparse.BooleanOptionalAction, default=True,
                        help="give Charlie Alice's directly disclosed pair")
    attack.add_argument("--out", default="-", help="CSV destination ('-' for stdout)")
    attack.add_argument("--plot", default=None, help="also render the row as a PNG figure")

    sweep = sub.add_parser("sweep", help="attack x n cross product, one CSV row per cell")
    sweep.add_argument("--attacks", required=True, help="comma-separated strategy names")
    sweep.add_argument("--n-list", required=True, help="comma-separated message lengths")
    sweep.add_argument("--trials", type=int, required=True)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--mask", default="all")
    sweep.add_argument("--crosscheck", action=argparse.BooleanOptionalAction, default=True)
    sweep.add_argument("--out", default="-")
    sweep.add_argument("--plot", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "attack":
            return _cmd_attack(args)
        return _cmd_sweep(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
