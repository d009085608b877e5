"""Delimited output and figure rendering for attack statistics.

CSV is the primary machine-readable product; figures are a rendering of the
same rows. Both are deterministic: floats use shortest round-trip repr and
figures are written with fixed size, dpi and no wall-clock metadata.
"""

from __future__ import annotations

import csv
from typing import Mapping, Sequence, TextIO

from .adversary import STRATEGIES, TrialStats

CSV_COLUMNS = (
    "attack",
    "n",
    "mask_weight",
    "trials",
    "successes",
    "rate",
    "wilson99_low",
    "wilson99_high",
    "v1_fail",
    "v2_fail",
    "v3_fail",
    "seed",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def stats_row(attack: str, n: int, mask_weight: int, stats: TrialStats, seed: int) -> dict[str, str]:
    """One CSV row, all values already rendered as text."""
    return {
        "attack": attack,
        "n": _fmt(n),
        "mask_weight": _fmt(mask_weight),
        "trials": _fmt(stats.trials),
        "successes": _fmt(stats.successes),
        "rate": _fmt(stats.success_rate),
        "wilson99_low": _fmt(stats.wilson99_low),
        "wilson99_high": _fmt(stats.wilson99_high),
        "v1_fail": _fmt(stats.v1_failures),
        "v2_fail": _fmt(stats.v2_failures),
        "v3_fail": _fmt(stats.v3_failures),
        "seed": _fmt(seed),
    }


def write_csv(rows: Sequence[Mapping[str, str]], stream: TextIO) -> None:
    """Header plus one line per row; \\n line endings on every platform."""
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def render_rate_figure(rows: Sequence[Mapping[str, str]], out_path: str) -> None:
    """Success rate vs n per strategy, with the halving reference when it applies.

    Rows are the CSV rows. Strategies whose rate law halves per attacked
    position get a dashed (1/2)^weight reference curve; measured points carry
    Wilson 99% error bars.
    """
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot as plt

    by_attack: dict[str, list[Mapping[str, str]]] = {}
    for row in rows:
        by_attack.setdefault(row["attack"], []).append(row)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    any_zero = False
    for attack, group in by_attack.items():
        group = sorted(group, key=lambda r: int(r["n"]))
        ns = [int(r["n"]) for r in group]
        rates = [float(r["rate"]) for r in group]
        lows = [float(r["wilson99_low"]) for r in group]
        highs = [float(r["wilson99_high"]) for r in group]
        any_zero = any_zero or any(r <= 0.0 for r in rates)
        yerr = [
            [r - lo for r, lo in zip(rates, lows)],
            [hi - r for r, hi in zip(rates, highs)],
        ]
        ax.errorbar(ns, rates, yerr=yerr, marker="o", capsize=3, label=attack)
        profile = STRATEGIES.get(attack)
        if profile is not None and profile.rate_law == "halving":
            refs = [0.5 ** int(r["mask_weight"]) for r in group]
            ax.plot(ns, refs, linestyle="--", color="gray", linewidth=1,
                    label=f"{attack} halving reference")
    if not any_zero:
        ax.set_yscale("log")
    ax.set_xlabel("message length n")
    ax.set_ylabel("success rate")
    ax.set_title("attack success rates")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=144)
    plt.close(fig)
