"""Simulator for a three-party quantum digital signature scheme.

Alice signs an n-bit message through teleportation over entangled channels
that Charlie controls; Bob and Charlie verify with three bitwise checks and
an adjudication step. The adversary module estimates how often dishonest
strategies survive those checks.
"""

from .qcore import (
    ALGEBRA_ATOL,
    DEFAULT_QUBIT_CAP,
    STATE_ATOL,
    BellLabel,
    Bits2,
    ImpossibleOutcomeError,
    PauliCorrection,
    QubitBudgetError,
    StateVector,
    apply_correction,
    basis_encode,
    bsm,
    bsm_postselect,
    delta_encode,
    equal_up_to_global_phase,
    extract_qubit,
    make_bell,
    measure_delta,
    tensor,
)
from .protocol import (
    AliceKey,
    Blame,
    BobRecord,
    CharlieKey,
    Phase,
    ProtocolError,
    PublicBoard,
    SessionState,
    TranscriptRecord,
    VerdictReport,
    announce_global,
    as_bits,
    bits_text,
    bob_measure_signature,
    charlie_compute_sb,
    measure_global_signature,
    oracle_honest,
    pairs_text,
    random_message,
    run_honest_session,
    setup_channels,
    sign_distribute,
    teleport_states,
    transfer_adjudicate,
    verify_v1,
    verify_v2,
    verify_v3,
    xor_bits,
)
from .adversary import (
    STRATEGIES,
    AttackKind,
    AttackSpec,
    StrategyProfile,
    TrialOutcome,
    TrialStats,
    monte_carlo,
    run_attack_trial,
    trial_rng,
    wilson_interval,
)
from .report import CSV_COLUMNS, render_rate_figure, stats_row, write_csv

__version__ = "0.1.0"

__all__ = [
    "ALGEBRA_ATOL",
    "DEFAULT_QUBIT_CAP",
    "STATE_ATOL",
    "BellLabel",
    "Bits2",
    "ImpossibleOutcomeError",
    "PauliCorrection",
    "QubitBudgetError",
    "StateVector",
    "apply_correction",
    "basis_encode",
    "bsm",
    "bsm_postselect",
    "delta_encode",
    "equal_up_to_global_phase",
    "extract_qubit",
    "make_bell",
    "measure_delta",
    "tensor",
    "AliceKey",
    "Blame",
    "BobRecord",
    "CharlieKey",
    "Phase",
    "ProtocolError",
    "PublicBoard",
    "SessionState",
    "TranscriptRecord",
    "VerdictReport",
    "announce_global",
    "as_bits",
    "bits_text",
    "bob_measure_signature",
    "charlie_compute_sb",
    "measure_global_signature",
    "oracle_honest",
    "pairs_text",
    "random_message",
    "run_honest_session",
    "setup_channels",
    "sign_distribute",
    "teleport_states",
    "transfer_adjudicate",
    "verify_v1",
    "verify_v2",
    "verify_v3",
    "xor_bits",
    "STRATEGIES",
    "AttackKind",
    "AttackSpec",
    "StrategyProfile",
    "TrialOutcome",
    "TrialStats",
    "monte_carlo",
    "run_attack_trial",
    "trial_rng",
    "wilson_interval",
    "CSV_COLUMNS",
    "render_rate_figure",
    "stats_row",
    "write_csv",
    "__version__",
]
