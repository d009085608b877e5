"""Exact complex state-vector engine for few-qubit signature sessions.

Conventions used throughout the package:

- qubit 0 is the most significant bit of a basis-state index, so a two-qubit
  basis state |q0 q1> sits at index 2*q0 + q1
- Bell measurement outcomes are reported as correction exponents (z, x):
  Phi+ -> (0,0), Psi+ -> (0,1), Phi- -> (1,0), Psi- -> (1,1); teleporting over
  Phi+ with outcome (z, x) leaves the receiver holding sigma_z^z sigma_x^x
  applied to the sent state (up to global phase), so the outcome pair doubles
  as the Pauli frame entry for that qubit
- a correction (z, x) means sigma_x^x applied first, then sigma_z^z
- the delta basis is delta_0 = (|0> + i|1>)/sqrt(2), delta_1 = (|0> - i|1>)/sqrt(2);
  sigma_z maps delta_b to delta_{b^1}, sigma_x maps delta_b to (-1)^b * i * delta_{b^1},
  so any correction shifts a delta-encoded bit by the exponent parity z^x and
  contributes only a global phase

All randomness is drawn from an injected numpy Generator; the same seed gives
a bit-identical run.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

SQRT_HALF = math.sqrt(0.5)

# Hard cap on tensor width; sessions here never need more than 5 qubits per
# position but the engine stays generic up to this budget.
DEFAULT_QUBIT_CAP = 12

STATE_ATOL = 1e-10    # state-level comparisons (norms, global-phase equality)
ALGEBRA_ATOL = 1e-12  # scalar algebraic identities

# Probabilities at or below this are treated as exactly zero. Legal outcomes
# in the protocol have probability >= 1/16; float noise sits near 1e-34.
_ZERO_PROB = 1e-20


class QubitBudgetError(Exception):
    """Raised when building a tensor product wider than the qubit cap."""


class ImpossibleOutcomeError(Exception):
    """Raised when postselecting a measurement outcome of probability zero."""


class Bits2(NamedTuple):
    """A Bell outcome as correction exponents: z exponent, then x exponent."""

    z_bit: int
    x_bit: int

    @property
    def parity(self) -> int:
        return self.z_bit ^ self.x_bit


class PauliCorrection(NamedTuple):
    """sigma_z^z_exp sigma_x^x_exp with sigma_x acting first."""

    z_exp: int
    x_exp: int


class BellLabel(Enum):
    PHI_PLUS = Bits2(0, 0)
    PSI_PLUS = Bits2(0, 1)
    PHI_MINUS = Bits2(1, 0)
    PSI_MINUS = Bits2(1, 1)

    @property
    def bits(self) -> Bits2:
        return self.value

    @classmethod
    def from_bits(cls, bits: Bits2) -> "BellLabel":
        return _LABEL_BY_INDEX[2 * bits[0] + bits[1]]


_LABEL_BY_INDEX = (
    BellLabel.PHI_PLUS,
    BellLabel.PSI_PLUS,
    BellLabel.PHI_MINUS,
    BellLabel.PSI_MINUS,
)

# Rows are Bell kets ordered by outcome index 2z + x. All entries are real so
# the same matrix serves as kets (rows) and, conjugated, as bras.
_BELL_MAT = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [1, 0, 0, -1],
        [0, 1, -1, 0],
    ],
    dtype=np.complex128,
) * SQRT_HALF

# Rows are delta kets: delta_0, delta_1.
_DELTA_MAT = np.array([[1, 1j], [1, -1j]], dtype=np.complex128) * SQRT_HALF

# Correction matrices indexed by 2z + x: I, X, Z, ZX (x applied first).
_CORR_MATS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[1, 0], [0, -1]],
        [[0, 1], [-1, 0]],
    ],
    dtype=np.complex128,
)


class StateVector:
    """Immutable normalized pure state over k qubits.

    Construction validates shape (a power of two, at least one qubit), finite
    amplitudes and unit norm within STATE_ATOL.
    """

    __slots__ = ("_amps", "_num_qubits")

    def __init__(self, amplitudes) -> None:
        arr = np.array(amplitudes, dtype=np.complex128, copy=True).ravel()
        size = arr.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count must be a power of two >= 2, got {size}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > STATE_ATOL:
            raise ValueError(f"state is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        arr.setflags(write=False)
        self._amps = arr
        self._num_qubits = size.bit_length() - 1

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "StateVector":
        # Trusted path for engine-produced arrays: norm is preserved by
        # construction, so validation is skipped.
        out = object.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        arr.setflags(write=False)
        out._amps = arr
        out._num_qubits = arr.size.bit_length() - 1
        return out

    @property
    def num_qubits(self) -> int:
        return self._num_qubits

    @property
    def amplitudes(self) -> np.ndarray:
        """Read-only amplitude array, basis index major (qubit 0 = MSB)."""
        return self._amps

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self._amps))

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self._num_qubits})"


def _check_qubit(state: StateVector, qubit: int) -> None:
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits}-qubit state")


def _check_pair(state: StateVector, q_i: int, q_j: int) -> None:
    _check_qubit(state, q_i)
    _check_qubit(state, q_j)
    if q_i == q_j:
        raise ValueError("Bell measurement needs two distinct qubits")


# ---- Batched kernels -------------------------------------------------------
# All heavy operations run on (B, 2^k) row stacks so a session can process its
# n positions in one numpy call. Single-state public ops wrap a batch of one.


def _pair_coeffs(rows: np.ndarray, qi: int, qj: int) -> np.ndarray:
    """Bell-basis coefficients of the (qi, qj) pair: (B, 4, rest)."""
    batch, dim = rows.shape
    k = dim.bit_length() - 1
    t = rows.reshape((batch,) + (2,) * k)
    t = np.moveaxis(t, (1 + qi, 1 + qj), (1, 2)).reshape(batch, 4, -1)
    return _BELL_MAT.conj() @ t


def _pair_rebuild(kets: np.ndarray, rest: np.ndarray, k: int, qi: int, qj: int) -> np.ndarray:
    """Reassemble full rows from collapsed pair kets (B, 4) and rest (B, rest)."""
    batch = kets.shape[0]
    out = np.einsum("bp,br->bpr", kets, rest)
    out = out.reshape((batch, 2, 2) + (2,) * (k - 2))
    out = np.moveaxis(out, (1, 2), (1 + qi, 1 + qj))
    return out.reshape(batch, -1)


def _sample_rows(probs: np.ndarray, unifs: np.ndarray) -> np.ndarray:
    # Inverse-CDF sampling per row; strict < keeps zero-probability outcomes
    # unreachable even on exact boundary draws.
    cum = np.cumsum(probs, axis=1)
    idx = (cum < unifs[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def _bsm_rows(rows: np.ndarray, qi: int, qj: int, unifs: np.ndarray):
    """Sampled Bell measurement on each row. Returns (outcome indices, rows)."""
    batch, dim = rows.shape
    k = dim.bit_length() - 1
    coeffs = _pair_coeffs(rows, qi, qj)
    probs = (np.abs(coeffs) ** 2).sum(axis=2)
    idx = _sample_rows(probs, unifs)
    pick = np.arange(batch)
    rest = coeffs[pick, idx] / np.sqrt(probs[pick, idx])[:, None]
    return idx, _pair_rebuild(_BELL_MAT[idx], rest, k, qi, qj)


def _axis_coeffs(rows: np.ndarray, q: int, basis: np.ndarray) -> np.ndarray:
    """Single-qubit basis coefficients: (B, 2, rest)."""
    batch, dim = rows.shape
    k = dim.bit_length() - 1
    t = rows.reshape((batch,) + (2,) * k)
    t = np.moveaxis(t, 1 + q, 1).reshape(batch, 2, -1)
    return basis.conj() @ t


def _axis_rebuild(kets: np.ndarray, rest: np.ndarray, k: int, q: int) -> np.ndarray:
    batch = kets.shape[0]
    out = np.einsum("bp,br->bpr", kets, rest)
    out = out.reshape((batch, 2) + (2,) * (k - 1))
    out = np.moveaxis(out, 1, 1 + q)
    return out.reshape(batch, -1)


def _measure_rows(rows: np.ndarray, q: int, unifs: np.ndarray, basis: np.ndarray):
    """Sampled single-qubit measurement in an orthonormal basis (rows are kets)."""
    batch, dim = rows.shape
    k = dim.bit_length() - 1
    coeffs = _axis_coeffs(rows, q, basis)
    probs = (np.abs(coeffs) ** 2).sum(axis=2)
    idx = _sample_rows(probs, unifs)
    pick = np.arange(batch)
    rest = coeffs[pick, idx] / np.sqrt(probs[pick, idx])[:, None]
    return idx, _axis_rebuild(basis[idx], rest, k, q)


def _apply_rows(rows: np.ndarray, q: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to qubit q of each row."""
    batch, dim = rows.shape
    k = dim.bit_length() - 1
    t = rows.reshape((batch,) + (2,) * k)
    t = np.moveaxis(t, 1 + q, 1).reshape(batch, 2, -1)
    t = mat @ t
    t = t.reshape((batch, 2) + (2,) * (k - 1))
    t = np.moveaxis(t, 1, 1 + q)
    return t.reshape(batch, -1)


# ---- Public operations -----------------------------------------------------


def make_bell(label: BellLabel) -> StateVector:
    """The two-qubit Bell state named by label."""
    idx = 2 * label.bits.z_bit + label.bits.x_bit
    return StateVector._wrap(_BELL_MAT[idx].copy())


def delta_encode(bit: int) -> StateVector:
    """delta_bit as a one-qubit state: (|0> + (-1)^bit * i |1>)/sqrt(2)."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return StateVector._wrap(_DELTA_MAT[bit].copy())


def basis_encode(bit: int) -> StateVector:
    """Computational one-qubit state |bit>."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    amp = np.zeros(2, dtype=np.complex128)
    amp[bit] = 1.0
    return StateVector._wrap(amp)


def tensor(states: Sequence[StateVector], qubit_cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Tensor product of states in order (earlier states take higher bits)."""
    if not states:
        raise ValueError("tensor of an empty sequence is undefined")
    total = sum(s.num_qubits for s in states)
    if total > qubit_cap:
        raise QubitBudgetError(f"tensor of {total} qubits exceeds the cap of {qubit_cap}")
    out = states[0].amplitudes
    for s in states[1:]:
        out = np.kron(out, s.amplitudes)
    return StateVector._wrap(out)


def apply_correction(state: StateVector, qubit: int, corr: PauliCorrection) -> StateVector:
    """Apply sigma_z^z sigma_x^x (x first) to one qubit."""
    _check_qubit(state, qubit)
    z, x = corr
    if z not in (0, 1) or x not in (0, 1):
        raise ValueError(f"correction exponents must be 0 or 1, got {corr!r}")
    mat = _CORR_MATS[2 * z + x]
    out = _apply_rows(state.amplitudes[None, :], qubit, mat)
    return StateVector._wrap(out[0])


def bsm(state: StateVector, q_i: int, q_j: int, rng: np.random.Generator):
    """Bell-state measurement of qubits (q_i, q_j), sampled from the Born rule.

    Returns (outcome, collapsed state). The outcome is a Bits2 (z, x) pair and
    the measured qubits collapse in place onto the matching Bell state; the
    sampled outcome always has positive probability.
    """
    _check_pair(state, q_i, q_j)
    idx, rows = _bsm_rows(state.amplitudes[None, :], q_i, q_j, rng.random(1))
    o = int(idx[0])
    return Bits2(o >> 1, o & 1), StateVector._wrap(rows[0])


def bsm_postselect(state: StateVector, q_i: int, q_j: int, outcome: Bits2):
    """Force a Bell outcome on qubits (q_i, q_j).

    Returns (probability, collapsed state). Raises ImpossibleOutcomeError when
    the requested outcome has probability zero. Test hook for driving each of
    the sixteen forced outcome combinations through a channel.
    """
    _check_pair(state, q_i, q_j)
    z, x = outcome
    if z not in (0, 1) or x not in (0, 1):
        raise ValueError(f"outcome bits must be 0 or 1, got {outcome!r}")
    o = 2 * z + x
    coeffs = _pair_coeffs(state.amplitudes[None, :], q_i, q_j)
    sel = coeffs[0, o]
    prob = float((np.abs(sel) ** 2).sum())
    if prob <= _ZERO_PROB:
        raise ImpossibleOutcomeError(f"outcome {tuple(outcome)} has probability zero")
    rest = (sel / math.sqrt(prob))[None, :]
    rows = _pair_rebuild(_BELL_MAT[o][None, :], rest, state.num_qubits, q_i, q_j)
    return prob, StateVector._wrap(rows[0])


def measure_delta(state: StateVector, qubit: int, rng: np.random.Generator):
    """Measure one qubit in the delta basis. Returns (bit, collapsed state)."""
    _check_qubit(state, qubit)
    idx, rows = _measure_rows(state.amplitudes[None, :], qubit, rng.random(1), _DELTA_MAT)
    return int(idx[0]), StateVector._wrap(rows[0])


def equal_up_to_global_phase(s1: StateVector, s2: StateVector, tol: float = STATE_ATOL) -> bool:
    """True iff s1 = lambda * s2 for some unit scalar lambda, within tol.

    The phase is read off the largest-magnitude amplitude pair, then checked
    against the full vectors.
    """
    if s1.num_qubits != s2.num_qubits:
        raise ValueError("states have different qubit counts")
    overlap = s1.amplitudes * s2.amplitudes.conj()
    k = int(np.argmax(np.abs(overlap)))
    mag = abs(overlap[k])
    if mag == 0.0:
        return False
    lam = overlap[k] / mag
    return float(np.linalg.norm(s1.amplitudes - lam * s2.amplitudes)) <= tol


def extract_qubit(state: StateVector, qubit: int, tol: float = 1e-8) -> StateVector:
    """Factor out one qubit's pure state, up to global phase.

    Valid only when the qubit is unentangled with the rest (checked through
    the purity of its reduced density matrix); raises ValueError otherwise.
    """
    _check_qubit(state, qubit)
    k = state.num_qubits
    if k == 1:
        return StateVector._wrap(state.amplitudes.copy())
    t = state.amplitudes.reshape((2,) * k)
    m = np.moveaxis(t, qubit, 0).reshape(2, -1)
    rho = m @ m.conj().T
    purity = float(np.trace(rho @ rho).real)
    if purity < 1.0 - tol:
        raise ValueError(f"qubit {qubit} is entangled with the rest (purity {purity:.6f})")
    vals, vecs = np.linalg.eigh(rho)
    vec = vecs[:, int(np.argmax(vals))]
    return StateVector._wrap(vec / np.linalg.norm(vec))
