"""Acceptance gate: one test and one printed pass/fail line per criterion.

Run standalone with `pytest tests/test_acceptance.py -v -s` to see the lines
as they happen. Every criterion is checked at its stated tolerance; the
statistical criteria use fixed master seeds, so reruns are bit-identical.
"""

import itertools
import math
import time

import numpy as np

from qds_sim.adversary import (
    OUTSIDE_MODEL_NOTE,
    STRATEGIES,
    AttackKind,
    AttackSpec,
    monte_carlo,
    run_attack_trial,
    trial_rng,
)
from qds_sim.cli import main
from qds_sim.protocol import (
    Blame,
    oracle_honest,
    random_message,
    run_honest_session,
    setup_channels,
    sign_distribute,
    teleport_states,
    xor_bits,
)
from qds_sim.qcore import (
    Bits2,
    PauliCorrection,
    apply_correction,
    delta_encode,
    equal_up_to_global_phase,
    extract_qubit,
)

ALL_PAIRS = [Bits2(z, x) for z in (0, 1) for x in (0, 1)]


def report_line(num: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    line = f"{status} criterion {num}: {name} ({detail})"
    print(line, flush=True)
    assert ok, line


def test_criterion_1_delta_pauli_algebra():
    # every Pauli frame entry maps the delta alphabet to itself up to phase;
    # identities hold to 1e-12 and the whole check stays under a second
    tol = 1e-12
    start = time.perf_counter()
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    delta = {b: delta_encode(b).amplitudes for b in (0, 1)}
    worst = 0.0
    for b in (0, 1):
        sign = -1 if b else 1
        checks = (
            (sz @ delta[b], delta[b ^ 1]),
            (sx @ delta[b], sign * 1j * delta[b ^ 1]),
            (sz @ sx @ delta[b], sign * 1j * delta[b]),
        )
        for got, want in checks:
            worst = max(worst, float(np.max(np.abs(got - want))))
        worst = max(worst, abs(abs(np.vdot(delta[b], delta[b])) - 1.0))
    worst = max(worst, abs(np.vdot(delta[0], delta[1])))
    for z, x in ALL_PAIRS:
        for b in (0, 1):
            got = apply_correction(delta_encode(b), 0, PauliCorrection(z, x)).amplitudes
            want = np.linalg.matrix_power(sz, z) @ np.linalg.matrix_power(sx, x) @ delta[b]
            worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - start
    ok = worst <= tol and elapsed < 1.0
    report_line(
        1,
        "delta-basis Pauli algebra",
        ok,
        f"max deviation {worst:.2e} <= {tol:.0e}, {elapsed:.2f}s",
    )


def test_criterion_2_swapped_channel_composite():
    # all 16 forced (alice, charlie) outcome pairs for both message bits:
    # Bob's pre-measurement qubit must equal the doubly corrected delta ket
    tol = 1e-10
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    failures = []
    for a, c, m in itertools.product(ALL_PAIRS, ALL_PAIRS, (0, 1)):
        session = setup_channels(1, rng, forced_charlie=[c])
        teleport_states(session, [delta_encode(m)], rng, message=(m,), forced_alice=[a])
        bob = extract_qubit(session.joint_states[0], 3, tol=1e-9)
        want = apply_correction(delta_encode(m), 0, PauliCorrection(*a))
        want = apply_correction(want, 0, PauliCorrection(*c))
        if not equal_up_to_global_phase(bob, want, tol=tol):
            failures.append((tuple(a), tuple(c), m))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 1.0
    report_line(
        2,
        "teleportation over the swapped channel, all 32 forced cases",
        ok,
        f"{32 - len(failures)}/32 match at {tol:.0e}, {elapsed:.2f}s",
    )


def test_criterion_3_honest_completeness():
    start = time.perf_counter()
    sessions = 0
    bad = 0
    for n in range(1, 11):
        for seed in range(100):
            session, verdict = run_honest_session(n, trial_rng(90_000 + n, seed))
            accepted = (
                verdict.bob_accepts
                and verdict.charlie_accepts
                and verdict.blamed is Blame.NONE
                and all(verdict.v1_bits)
                and all(verdict.v2_bits)
                and all(verdict.v3_bits)
            )
            shadow = (
                xor_bits(session.board.global_sig, session.bob.signature)
                == session.charlie.parity
            )
            sessions += 1
            bad += not (accepted and shadow)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 10.0
    report_line(
        3,
        "honest completeness, n = 1..10 x 100 seeds",
        ok,
        f"{sessions - bad}/{sessions} accepted with the parity identity, {elapsed:.1f}s",
    )


def test_criterion_4_oracle_equivalence():
    start = time.perf_counter()
    mismatches = 0
    # exhaustive single position
    rng = np.random.default_rng(1)
    for a, c, m in itertools.product(ALL_PAIRS, ALL_PAIRS, (0, 1)):
        session = setup_channels(1, rng, forced_charlie=[c])
        sign_distribute(session, [m], rng, forced_alice=[a])
        sag, sb = oracle_honest((m,), session.alice.parity, session.charlie.parity)
        mismatches += (session.board.global_sig, session.bob.signature) != (sag, sb)
    # sampled sessions
    trials = 10_000
    for t in range(trials):
        rng = trial_rng(91_000, t)
        session = setup_channels(8, rng)
        m = random_message(8, rng)
        sign_distribute(session, m, rng)
        sag, sb = oracle_honest(m, session.alice.parity, session.charlie.parity)
        mismatches += (session.board.global_sig, session.bob.signature) != (sag, sb)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0
    report_line(
        4,
        "measured records equal the parity oracle",
        ok,
        f"0 mismatches required, got {mismatches} over {trials + 32} sessions, {elapsed:.1f}s",
    )


def test_criterion_5_ambiguous_state_halving():
    start = time.perf_counter()
    cells = []
    ok = True
    for n in (1, 2, 4, 8):
        stats = monte_carlo(AttackSpec(AttackKind.AMBIGUOUS_STATE), n, 100_000, 500 + n)
        ref = 0.5**n
        inside = stats.wilson99_low <= ref <= stats.wilson99_high
        ok = ok and inside
        cells.append(f"n={n}:{stats.success_rate:.5f}~{ref:.5f}:{'in' if inside else 'OUT'}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 120.0
    report_line(
        5,
        "ambiguous-state success halves per position (1e5 trials per n)",
        ok,
        "; ".join(cells) + f", {elapsed:.0f}s < 120s",
    )


def test_criterion_6_deterministic_detection():
    start = time.perf_counter()
    trials = 10_000
    n = 4
    problems = []

    expectations = {
        "naive-flip": "v1",
        "false-announcement": "v2",
        "bob-forge-signature": "v3",
        "bob-forge-message": "crosscheck",
    }
    for name, where in expectations.items():
        stats = monte_carlo(AttackSpec(AttackKind(name)), n, trials, 600)
        if stats.successes != 0:
            problems.append(f"{name} succeeded {stats.successes}x")
        counts = {
            "v1": stats.v1_failures,
            "v2": stats.v2_failures,
            "v3": stats.v3_failures,
        }
        if where == "crosscheck":
            if any(counts.values()):
                problems.append(f"{name} tripped a check it should pass: {counts}")
        else:
            if counts.pop(where) != trials:
                problems.append(f"{name} missed detections at {where}")
            if any(counts.values()):
                problems.append(f"{name} leaked into other checks: {counts}")

    # the cross-check catch must blame the forging receiver every time
    for t in range(300):
        outcome = run_attack_trial(AttackSpec(AttackKind.BOB_FORGE_MESSAGE), n, trial_rng(601, t))
        if outcome.verdict.charlie_accepts or outcome.verdict.blamed is not Blame.BOB:
            problems.append(f"cross-check verdict wrong at trial {t}")
            break
    elapsed = time.perf_counter() - start
    ok = not problems
    report_line(
        6,
        "tampering strategies are caught every time at the predicted check",
        ok,
        (problems[0] if problems else f"4 strategies x {trials} trials, exact attribution")
        + f", {elapsed:.0f}s",
    )


def test_criterion_7_masquerade_halving():
    start = time.perf_counter()
    cells = []
    ok = True
    for n in (1, 4, 8):
        stats = monte_carlo(AttackSpec(AttackKind.MASQUERADE), n, 100_000, 700 + n)
        ref = 0.5**n
        inside = stats.wilson99_low <= ref <= stats.wilson99_high
        ok = ok and inside
        cells.append(f"n={n}:{stats.success_rate:.5f}~{ref:.5f}:{'in' if inside else 'OUT'}")
    elapsed = time.perf_counter() - start
    report_line(
        7,
        "channel-less masquerade succeeds at (1/2)^n (1e5 trials per n)",
        ok,
        "; ".join(cells) + f", {elapsed:.0f}s",
    )


def test_criterion_8_compensated_flip_binding_gap(capsys):
    start = time.perf_counter()
    trials = 10_000
    stats = monte_carlo(AttackSpec(AttackKind.COMPENSATED_FLIP), 4, trials, 800)
    rate_ok = stats.success_rate == 1.0 and stats.successes == trials

    code = main(["attack", "--attack", "compensated-flip", "--n", "4",
                 "--trials", "200", "--seed", "800"])
    out = capsys.readouterr().out
    label_ok = code == 0 and OUTSIDE_MODEL_NOTE in out
    note_ok = STRATEGIES["compensated-flip"].note == OUTSIDE_MODEL_NOTE
    elapsed = time.perf_counter() - start
    ok = rate_ok and label_ok and note_ok
    with capsys.disabled():
        report_line(
            8,
            "pair-consistent message flip always passes and is labeled",
            ok,
            f"rate={stats.success_rate} over {trials} trials, label in report={label_ok}, {elapsed:.0f}s",
        )


def test_criterion_9_cli_byte_determinism(tmp_path, capsys):
    start = time.perf_counter()
    problems = []

    def capture(argv):
        code = main(argv)
        captured = capsys.readouterr()
        if code != 0:
            problems.append(f"exit {code} from {argv}")
        return captured.out

    run_out = [capture(["run", "--n", "4", "--seed", "11"]) for _ in range(2)]
    if run_out[0] != run_out[1]:
        problems.append("run stdout differs between identical invocations")

    atk_out = []
    for tag in ("a", "b"):
        csv_path = tmp_path / f"atk_{tag}.csv"
        png_path = tmp_path / f"atk_{tag}.png"
        capture(["attack", "--attack", "masquerade", "--n", "3", "--trials", "400",
                 "--seed", "9", "--out", str(csv_path), "--plot", str(png_path)])
        atk_out.append((csv_path.read_bytes(), png_path.read_bytes()))
    if atk_out[0] != atk_out[1]:
        problems.append("attack CSV or figure bytes differ between identical invocations")

    sweep_out = []
    for tag in ("a", "b"):
        csv_path = tmp_path / f"sweep_{tag}.csv"
        capture(["sweep", "--attacks", "honest,ambiguous-state", "--n-list", "1,2",
                 "--trials", "150", "--seed", "13", "--out", str(csv_path)])
        sweep_out.append(csv_path.read_bytes())
    if sweep_out[0] != sweep_out[1]:
        problems.append("sweep CSV bytes differ between identical invocations")

    elapsed = time.perf_counter() - start
    ok = not problems
    with capsys.disabled():
        report_line(
            9,
            "repeat invocations are byte-identical (stdout, CSV, figure)",
            ok,
            (problems[0] if problems else "run, attack+plot, sweep compared") + f", {elapsed:.0f}s",
        )
