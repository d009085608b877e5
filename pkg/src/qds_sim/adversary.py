"""Adversary strategies and the Monte Carlo estimator for their success rates.

Each strategy drives a fresh session from a factory, deviates at one point of
the flow and reports whether its goal predicate held. The runner repeats
trials with independently derived generators, so results are bit-identical
for a fixed master seed and invariant under the worker count.

Derived randomness: trial t uses default_rng(SeedSequence((master_seed, t))).
Within a trial the draw order is fixed: channel setup, message bits, any
strategy-private choices, then the quantum sampling of the remaining steps.

Success references (checked by the test suite):

- honest: rate 1
- naive-flip, false-announcement, bob-forge-signature: rate 0, detected
  deterministically at v1 / v2 / v3 respectively
- bob-forge-message: rate 0 with the direct-pair cross-check, rate 1 without
- ambiguous-state with k masked positions: rate (1/2)^k
- masquerade over n positions: rate (1/2)^n
- compensated-flip: rate 1; the checks bind the announcement to the XOR of
  message and parity, not to the message itself, so flipping both halves of
  the pair is never detected. Reports label this strategy as outside the
  analyzed security model.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .protocol import (
    BitString,
    Blame,
    SessionState,
    VerdictReport,
    announce_global,
    as_bits,
    bits_text,
    bob_measure_signature,
    measure_global_signature,
    random_message,
    setup_channels,
    sign_distribute,
    teleport_states,
    transfer_adjudicate,
    verify_v1,
    verify_v2,
    xor_bits,
)
from .qcore import StateVector, _DELTA_MAT, basis_encode

SessionFactory = Callable[[], SessionState]

# Label attached to strategies that succeed by stepping outside what the
# scheme's checks were designed to bind.
OUTSIDE_MODEL_NOTE = "outside the analyzed security model"

# Two-sided 99% normal quantile for Wilson score intervals.
_Z99 = 2.5758293035489004


class AttackKind(Enum):
    HONEST = "honest"
    NAIVE_FLIP = "naive-flip"
    COMPENSATED_FLIP = "compensated-flip"
    AMBIGUOUS_STATE = "ambiguous-state"
    FALSE_ANNOUNCEMENT = "false-announcement"
    BOB_FORGE_SIGNATURE = "bob-forge-signature"
    BOB_FORGE_MESSAGE = "bob-forge-message"
    MASQUERADE = "masquerade"


@dataclass(frozen=True)
class StrategyProfile:
    """Reporting metadata for one strategy."""

    kind: AttackKind
    actor: str
    goal: str
    # Expected success-rate law: "one", "zero", "halving" ((1/2)^mask weight),
    # or "crosscheck" (zero with the cross-check, one without).
    rate_law: str
    predicted_failures: tuple[str, ...]
    note: str = ""


STRATEGIES: dict[str, StrategyProfile] = {
    p.kind.value: p
    for p in (
        StrategyProfile(AttackKind.HONEST, "none", "bob and charlie accept", "one", ()),
        StrategyProfile(
            AttackKind.NAIVE_FLIP,
            "alice",
            "bob accepts a flipped message under the honest pair",
            "zero",
            ("v1",),
        ),
        StrategyProfile(
            AttackKind.COMPENSATED_FLIP,
            "alice",
            "bob and charlie accept a message flipped together with its parity",
            "one",
            (),
            note=OUTSIDE_MODEL_NOTE,
        ),
        StrategyProfile(
            AttackKind.AMBIGUOUS_STATE,
            "alice",
            "bob accepts although masked positions never committed to a message bit",
            "halving",
            ("v2",),
        ),
        StrategyProfile(
            AttackKind.FALSE_ANNOUNCEMENT,
            "alice",
            "bob accepts a forged announcement with a matching claimed pair",
            "zero",
            ("v2",),
        ),
        StrategyProfile(
            AttackKind.BOB_FORGE_SIGNATURE,
            "bob",
            "charlie accepts a triplet with altered signature bits",
            "zero",
            ("v3",),
        ),
        StrategyProfile(
            AttackKind.BOB_FORGE_MESSAGE,
            "bob",
            "charlie accepts a self-consistent forged message pair",
            "crosscheck",
            (),
        ),
        StrategyProfile(
            AttackKind.MASQUERADE,
            "eve",
            "bob accepts an announcement from a party holding no channel",
            "halving",
            ("v2",),
        ),
    )
}


@dataclass(frozen=True)
class AttackSpec:
    """A strategy plus its target mask and options.

    mask lists one 0/1 flag per position (1 = attacked); None targets every
    position. Honest runs ignore the mask; masquerade always covers the whole
    string. crosscheck controls whether Charlie also sees Alice's directly
    disclosed pair (only bob-forge-message is sensitive to it).
    """

    kind: AttackKind
    mask: Optional[BitString] = None
    crosscheck: bool = True

    def resolve_mask(self, n: int) -> BitString:
        """Effective mask for n positions; weight counts attacked positions."""
        if self.kind is AttackKind.HONEST:
            return (0,) * n
        if self.kind is AttackKind.MASQUERADE:
            return (1,) * n
        if self.mask is None:
            return (1,) * n
        mask = as_bits(self.mask, n, "mask")
        if sum(mask) == 0:
            raise ValueError("mask weight 0 is an honest run; use the honest strategy")
        return mask


@dataclass(frozen=True)
class TrialOutcome:
    verdict: VerdictReport
    attack_succeeded: bool


@dataclass(frozen=True)
class TrialStats:
    """Aggregated Monte Carlo results for one (strategy, n, mask) cell."""

    trials: int
    successes: int
    success_rate: float
    wilson99_low: float
    wilson99_high: float
    v1_failures: int
    v2_failures: int
    v3_failures: int

    def __post_init__(self) -> None:
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")
        if not self.wilson99_low - 1e-12 <= self.success_rate <= self.wilson99_high + 1e-12:
            raise ValueError("confidence interval must contain the observed rate")


def wilson_interval(successes: int, trials: int, z: float = _Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (two-sided)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    # the score interval always contains the observed rate; clamping repairs
    # the float rounding that can pull a bound a few ulp past p
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """The documented seed mixing: one independent stream per trial."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def _bob_stage_verdict(v1: tuple[bool, ...], v2: tuple[bool, ...]) -> VerdictReport:
    # Bob is the last stop: either he accepts (nothing to adjudicate yet) or
    # he rejects the claimed signer's submission and never forwards.
    accepted = all(v1) and all(v2)
    return VerdictReport(
        v1_bits=v1,
        v2_bits=v2,
        v3_bits=None,
        bob_accepts=accepted,
        charlie_accepts=False,
        blamed=Blame.NONE if accepted else Blame.ALICE,
    )


def _flip(bits: Sequence[int], mask: Sequence[int]) -> BitString:
    return xor_bits(bits, mask)


# ---- Strategies -------------------------------------------------------------


def honest_trial(make_session: SessionFactory, rng: np.random.Generator) -> TrialOutcome:
    """Reference run: everyone follows the flow, Charlie cross-checks."""
    session = make_session()
    m = random_message(session.n, rng)
    sign_distribute(session, m, rng)
    triplet = (m, session.alice.parity, session.bob.signature)
    report = transfer_adjudicate(session, triplet, (m, session.alice.parity))
    return TrialOutcome(report, report.bob_accepts and report.charlie_accepts)


def attack_naive_flip(
    make_session: SessionFactory, mask: BitString, rng: np.random.Generator
) -> TrialOutcome:
    """Alice presents a flipped message with her honest parity.

    The flipped bits break v1 at exactly the masked positions; v2 never sees
    the claimed pair, so it stays clean.
    """
    session = make_session()
    m = random_message(session.n, rng)
    sign_distribute(session, m, rng)
    v1 = verify_v1(_flip(m, mask), session.alice.parity, session.board)
    v2 = verify_v2(session.board, session.bob.signature, session.bob.charlie_parity)
    verdict = _bob_stage_verdict(v1, v2)
    return TrialOutcome(verdict, verdict.bob_accepts)


def attack_compensated_flip(
    make_session: SessionFactory, mask: BitString, rng: np.random.Generator
) -> TrialOutcome:
    """Alice flips masked message bits and their parities together.

    The XOR the checks bind is unchanged, so v1, v2, v3 and the cross-check
    all pass and both receivers accept the altered message. Succeeds with
    certainty; reported with the outside-the-model label.
    """
    session = make_session()
    m = random_message(session.n, rng)
    sign_distribute(session, m, rng)
    m_alt = _flip(m, mask)
    ap_alt = _flip(session.alice.parity, mask)
    triplet = (m_alt, ap_alt, session.bob.signature)
    report = transfer_adjudicate(session, triplet, (m_alt, ap_alt))
    return TrialOutcome(report, report.bob_accepts and report.charlie_accepts)


def attack_ambiguous_state(
    make_session: SessionFactory, mask: BitString, rng: np.random.Generator
) -> TrialOutcome:
    """Alice teleports |0> at masked positions instead of a delta-encoded bit.

    |0> is unbiased in the delta basis, so Bob's stored bit at a masked
    position is a fair coin independent of every parity. Alice then announces
    whatever matches the pair she intends to claim; each masked position
    passes v2 with probability 1/2.
    """
    session = make_session()
    n = session.n
    m = random_message(n, rng)
    prepared = [
        basis_encode(0) if mask[i] else StateVector._wrap(_DELTA_MAT[m[i]].copy())
        for i in range(n)
    ]
    teleport_states(session, prepared, rng, message=None)
    bob_measure_signature(session, rng)
    claim_m = _flip(m, mask)
    parity = session.alice.parity
    announce_global(session, xor_bits(claim_m, parity))
    v1 = verify_v1(claim_m, parity, session.board)
    v2 = verify_v2(session.board, session.bob.signature, session.bob.charlie_parity)
    verdict = _bob_stage_verdict(v1, v2)
    return TrialOutcome(verdict, verdict.bob_accepts)


def attack_false_announcement(
    make_session: SessionFactory, mask: BitString, rng: np.random.Generator
) -> TrialOutcome:
    """Alice distributes honestly but announces flipped signature bits.

    She claims a message matching her forged announcement, so v1 passes; the
    announcement now contradicts Bob's honestly measured bits at every masked
    position, so v2 fails there with certainty.
    """
    session = make_session()
    m = random_message(session.n, rng)
    prepared = [StateVector._wrap(_DELTA_MAT[b].copy()) for b in m]
    teleport_states(session, prepared, rng, message=m)
    bob_measure_signature(session, rng)
    honest_bits = measure_global_signature(session, rng)
    announce_global(session, _flip(honest_bits, mask))
    v1 = verify_v1(_flip(m, mask), session.alice.parity, session.board)
    v2 = verify_v2(session.board, session.bob.signature, session.bob.charlie_parity)
    verdict = _bob_stage_verdict(v1, v2)
    return TrialOutcome(verdict, verdict.bob_accepts)


def attack_bob_forge_signature(
    make_session: SessionFactory, mask: BitString, rng: np.random.Generator
) -> TrialOutcome:
    """Bob forwards altered signature bits under the honest pair.

    Charlie derives S_b from the announcement and his own parities, so the
    altered bits fail v3 at exactly the masked positions.
    """
    session = make_session()
    m = random_message(session.n, rng)
    sign_distribute(session, m, rng)
    triplet = (m, session.alice.parity, _flip(session.bob.signature, mask))
    report = transfer_adjudicate(session, triplet)
    return TrialOutcome(report, report.charlie_accepts)


def attack_bob_forge_message(
    make_session: SessionFactory,
    mask: BitString,
    rng: np.random.Generator,
    with_alice_crosscheck: bool = True,
) -> TrialOutcome:
    """Bob forwards a flipped message with a parity rebuilt to match the board.

    The forged pair XORs to the announcement, so v1, v2 and v3 all pass: the
    triplet alone cannot expose it. Only Charlie's cross-check against
    Alice's directly disclosed pair catches the substitution.
    """
    session = make_session()
    m = random_message(session.n, rng)
    sign_distribute(session, m, rng)
    m_alt = _flip(m, mask)
    ap_alt = xor_bits(m_alt, session.board.global_sig)
    triplet = (m_alt, ap_alt, session.bob.signature)
    direct = (m, session.alice.parity) if with_alice_crosscheck else None
    report = transfer_adjudicate(session, triplet, direct)
    return TrialOutcome(report, report.charlie_accepts)


def attack_masquerade(make_session: SessionFactory, rng: np.random.Generator) -> TrialOutcome:
    """Eve, holding no channel half, announces a signature and a matching pair.

    Bob's qubits are still halves of swapped pairs, so his delta measurements
    come out uniform and independent of Eve's choices; each position matches
    her announcement against his parity with probability 1/2.
    """
    session = make_session()
    n = session.n
    m_e = random_message(n, rng)
    s_e = random_message(n, rng)
    session.board.announce(s_e, session.phase.name)
    session.emit("eve", "global_signature_announced", {"s_a_g": bits_text(s_e)})
    bob_measure_signature(session, rng)
    v1 = verify_v1(m_e, xor_bits(m_e, s_e), session.board)
    v2 = verify_v2(session.board, session.bob.signature, session.bob.charlie_parity)
    verdict = _bob_stage_verdict(v1, v2)
    return TrialOutcome(verdict, verdict.bob_accepts)


# ---- Runner -----------------------------------------------------------------


def run_attack_trial(spec: AttackSpec, n: int, rng: np.random.Generator) -> TrialOutcome:
    """One trial of the given strategy on a fresh n-position session."""
    mask = spec.resolve_mask(n)
    make_session: SessionFactory = lambda: setup_channels(n, rng)
    kind = spec.kind
    if kind is AttackKind.HONEST:
        return honest_trial(make_session, rng)
    if kind is AttackKind.NAIVE_FLIP:
        return attack_naive_flip(make_session, mask, rng)
    if kind is AttackKind.COMPENSATED_FLIP:
        return attack_compensated_flip(make_session, mask, rng)
    if kind is AttackKind.AMBIGUOUS_STATE:
        return attack_ambiguous_state(make_session, mask, rng)
    if kind is AttackKind.FALSE_ANNOUNCEMENT:
        return attack_false_announcement(make_session, mask, rng)
    if kind is AttackKind.BOB_FORGE_SIGNATURE:
        return attack_bob_forge_signature(make_session, mask, rng)
    if kind is AttackKind.BOB_FORGE_MESSAGE:
        return attack_bob_forge_message(make_session, mask, rng, spec.crosscheck)
    if kind is AttackKind.MASQUERADE:
        return attack_masquerade(make_session, rng)
    raise ValueError(f"unknown attack kind {kind!r}")


def _run_range(spec: AttackSpec, n: int, master_seed: int, start: int, stop: int) -> np.ndarray:
    counts = np.zeros(4, dtype=np.int64)
    for t in range(start, stop):
        outcome = run_attack_trial(spec, n, trial_rng(master_seed, t))
        v = outcome.verdict
        counts[0] += outcome.attack_succeeded
        counts[1] += not all(v.v1_bits)
        counts[2] += not all(v.v2_bits)
        if v.v3_bits is not None:
            counts[3] += not all(v.v3_bits)
    return counts


def monte_carlo(
    spec: AttackSpec, n: int, trials: int, master_seed: int, workers: int = 1
) -> TrialStats:
    """Estimate a strategy's success rate over independent seeded trials.

    Per-trial seeds come from trial_rng, so the result does not depend on
    workers; counts are summed over contiguous trial ranges.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    spec.resolve_mask(n)  # validate the cell before burning any trials
    workers = max(1, min(int(workers), trials))
    if workers == 1:
        counts = _run_range(spec, n, master_seed, 0, trials)
    else:
        bounds = np.linspace(0, trials, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                lambda se: _run_range(spec, n, master_seed, se[0], se[1]),
                zip(bounds[:-1], bounds[1:]),
            )
            counts = sum(parts, np.zeros(4, dtype=np.int64))
    successes = int(counts[0])
    low, high = wilson_interval(successes, trials)
    return TrialStats(
        trials=trials,
        successes=successes,
        success_rate=successes / trials,
        wilson99_low=low,
        wilson99_high=high,
        v1_failures=int(counts[1]),
        v2_failures=int(counts[2]),
        v3_failures=int(counts[3]),
    )
