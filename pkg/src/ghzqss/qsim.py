"""Minimal pure-state simulator over labeled qubits.

Every state handled by this package is a real superposition of
computational basis kets (the only gates are H and CNOT, and all
preparations are basis states), so amplitudes are stored as a flat
float64 vector of length 2**n.  Qubits are addressed by string label;
``labels[0]`` is the most significant bit of the basis index.

Operations are functional: each returns a new ``PureState`` and never
mutates its input.  Measurement is the one stochastic operation and
draws a single uniform float from the supplied generator, except when
one outcome carries probability below ``ATOL`` in which case the other
outcome is forced and the generator is not consulted at all.  That rule
is what makes deterministic protocol branches reproducible independent
of how many rng draws happened earlier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# Absolute tolerance for norm checks, degenerate-outcome detection and
# state equality.  Everything in this package is exact up to float64
# rounding, so a loose tolerance would only hide bugs.
ATOL = 1e-12

# Hard cap on register width.  The protocols here never need more than
# 3 carrier + 2 transit + 2 probe + 2 substitute qubits; the cap keeps
# a runaway tensor loop from allocating gigabytes.
MAX_QUBITS = 12


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of a single-qubit measurement in the computational basis.

    ``probability`` is the Born weight the recorded outcome had in the
    pre-measurement state.  Multiplying these records along a branch
    gives the probability of the whole branch.
    """

    qubit: str
    outcome: int
    probability: float


@dataclass(frozen=True)
class PureState:
    """Immutable n-qubit pure state with real amplitudes.

    ``labels`` orders the qubits most-significant first; ``amps`` has
    length ``2**len(labels)`` and unit norm.
    """

    labels: tuple[str, ...]
    amps: np.ndarray

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no qubit labeled {label!r} in state over {self.labels}") from None

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (a view, not a copy)."""
        return self.amps.reshape((2,) * self.num_qubits)


def _make(labels: Sequence[str], amps: np.ndarray) -> PureState:
    """Validate and freeze a state; every public constructor funnels through here."""
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate qubit labels: {labels}")
    if len(labels) > MAX_QUBITS:
        raise ValueError(f"register of {len(labels)} qubits exceeds cap of {MAX_QUBITS}")
    amps = np.asarray(amps, dtype=np.float64).reshape(-1)
    if amps.shape != (2 ** len(labels),):
        raise ValueError(f"amplitude vector of length {amps.size} does not match {len(labels)} qubits")
    norm = float(np.sqrt(np.dot(amps, amps)))
    if abs(norm - 1.0) > ATOL:
        raise ValueError(f"state norm {norm!r} deviates from 1 by more than {ATOL}")
    amps = amps.copy()
    amps.flags.writeable = False
    return PureState(labels, amps)


def _wrap(labels: tuple[str, ...], amps: np.ndarray) -> PureState:
    """Freeze an amplitude buffer the caller owns, skipping validation.

    Only for gate/measurement internals whose outputs satisfy the
    invariants by construction; the validation in ``_make`` on every
    intermediate state would dominate the simulation runtime.
    """
    amps.flags.writeable = False
    return PureState(labels, amps)


def _split(state: PureState, k: int) -> np.ndarray:
    """View of the amplitudes as (before, 2, after) around qubit axis ``k``."""
    n = state.num_qubits
    return state.amps.reshape(1 << k, 2, 1 << (n - k - 1))


def basis_state(assignments: Iterable[tuple[str, int]]) -> PureState:
    """Product basis state from ``(label, bit)`` pairs, first pair most significant."""
    pairs = list(assignments)
    if not pairs:
        raise ValueError("basis_state needs at least one qubit")
    labels = [lab for lab, _ in pairs]
    bits = []
    for lab, bit in pairs:
        if bit not in (0, 1):
            raise ValueError(f"bit for {lab!r} must be 0 or 1, got {bit!r}")
        bits.append(bit)
    index = 0
    for bit in bits:
        index = (index << 1) | bit
    amps = np.zeros(2 ** len(labels))
    amps[index] = 1.0
    return _make(labels, amps)


def state_from_terms(labels: Sequence[str], terms: Mapping[str, float]) -> PureState:
    """Build a state from ``{bitstring: amplitude}`` terms.

    Bitstrings are read in ``labels`` order (most significant first).
    The terms must already be normalized; this helper is used to
    transcribe closed-form states into fixtures, and refusing to
    renormalize catches transcription slips.
    """
    labels = tuple(labels)
    amps = np.zeros(2 ** len(labels))
    for bits, coeff in terms.items():
        if len(bits) != len(labels) or set(bits) - {"0", "1"}:
            raise ValueError(f"bad bitstring {bits!r} for {len(labels)} qubits")
        amps[int(bits, 2)] += float(coeff)
    norm = float(np.sqrt(np.dot(amps, amps)))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"terms have norm {norm!r}; write normalized amplitudes")
    return _make(labels, amps)


def ghz_carrier(labels: Sequence[str] = ("a", "b", "c")) -> PureState:
    """Three-party carrier (|000> + |111>)/sqrt(2)."""
    labels = tuple(labels)
    if len(labels) != 3:
        raise ValueError("carrier has exactly three qubits")
    amps = np.zeros(8)
    amps[0] = amps[7] = 1.0 / np.sqrt(2.0)
    return _make(labels, amps)


def prepare_pair_qbar(q: int, labels: Sequence[str] = ("w1", "w2")) -> PureState:
    """Correlated transit pair (|0,q> + |1,1-q>)/sqrt(2).

    The XOR of the two qubits equals ``q`` in every branch, which is the
    property the entangled encoding relies on.
    """
    if q not in (0, 1):
        raise ValueError(f"payload bit must be 0 or 1, got {q!r}")
    labels = tuple(labels)
    if len(labels) != 2:
        raise ValueError("transit pair has exactly two qubits")
    amps = np.zeros(4)
    amps[0b00 if q == 0 else 0b01] = 1.0 / np.sqrt(2.0)
    amps[0b11 if q == 0 else 0b10] = 1.0 / np.sqrt(2.0)
    return _make(labels, amps)


def apply_h(state: PureState, label: str) -> PureState:
    """Hadamard on one qubit."""
    k = state.axis(label)
    v = _split(state, k)
    s = 1.0 / np.sqrt(2.0)
    out = np.empty_like(state.amps)
    o = out.reshape(v.shape)
    o[:, 0] = (v[:, 0] + v[:, 1]) * s
    o[:, 1] = (v[:, 0] - v[:, 1]) * s
    return _wrap(state.labels, out)


def apply_cnot(state: PureState, control: str, target: str) -> PureState:
    """CNOT with the given control and target labels."""
    if control == target:
        raise ValueError("control and target must differ")
    kc = state.axis(control)
    kt = state.axis(target)
    n = state.num_qubits
    i, j = (kc, kt) if kc < kt else (kt, kc)
    out = state.amps.copy()
    # Five axes: everything before i, qubit i, between, qubit j, after.
    v = out.reshape(1 << i, 2, 1 << (j - i - 1), 2, 1 << (n - j - 1))
    if kc < kt:
        tmp = v[:, 1, :, 0, :].copy()
        v[:, 1, :, 0, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = tmp
    else:
        tmp = v[:, 0, :, 1, :].copy()
        v[:, 0, :, 1, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = tmp
    return _wrap(state.labels, out)


def probability_of_one(state: PureState, label: str) -> float:
    """Born probability that measuring ``label`` yields 1."""
    hi = _split(state, state.axis(label))[:, 1]
    return float(np.einsum("ij,ij->", hi, hi))


def measure(state: PureState, label: str, rng) -> tuple[MeasurementRecord, PureState]:
    """Measure one qubit in the computational basis.

    Returns the record and the renormalized post-measurement state (the
    measured qubit stays in the register, now definite).  ``rng`` needs
    only a ``random()`` method returning a float in [0, 1); it is not
    consulted when one outcome has probability below ``ATOL``.
    """
    p1 = probability_of_one(state, label)
    if p1 < ATOL:
        outcome, prob = 0, 1.0 - p1
    elif 1.0 - p1 < ATOL:
        outcome, prob = 1, p1
    else:
        u = rng.random()
        outcome = 1 if u < p1 else 0
        prob = p1 if outcome == 1 else 1.0 - p1
    k = state.axis(label)
    v = _split(state, k)
    out = np.zeros_like(state.amps)
    o = out.reshape(v.shape)
    o[:, outcome] = v[:, outcome] / np.sqrt(prob)
    return MeasurementRecord(label, outcome, float(prob)), _wrap(state.labels, out)


def tensor(left: PureState, right: PureState) -> PureState:
    """Tensor product; ``right`` qubits become the least significant block."""
    overlap = set(left.labels) & set(right.labels)
    if overlap:
        raise ValueError(f"label collision in tensor: {sorted(overlap)}")
    labels = left.labels + right.labels
    if len(labels) > MAX_QUBITS:
        raise ValueError(f"register of {len(labels)} qubits exceeds cap of {MAX_QUBITS}")
    amps = (left.amps[:, None] * right.amps[None, :]).reshape(-1)
    return _wrap(labels, amps)


def discard(state: PureState, label: str) -> PureState:
    """Drop a qubit whose value is definite (probability 0 or 1 of being 1).

    Discarding a qubit still in superposition, or one entangled with the
    rest of the register, is an error: that would silently turn a pure
    state into a mixture.
    """
    if state.num_qubits == 1:
        raise ValueError("cannot discard the last qubit")
    p1 = probability_of_one(state, label)
    if p1 > ATOL and 1.0 - p1 > ATOL:
        raise ValueError(f"qubit {label!r} is not definite (p1={p1!r}); measure it first")
    value = 1 if p1 > 0.5 else 0
    k = state.axis(label)
    kept = np.array(_split(state, k)[:, value]).reshape(-1)
    kept /= np.sqrt(np.dot(kept, kept))
    labels = state.labels[:k] + state.labels[k + 1 :]
    return _wrap(labels, kept)


def reorder(state: PureState, labels: Sequence[str]) -> PureState:
    """Same state with qubit axes permuted into the given label order."""
    labels = tuple(labels)
    if set(labels) != set(state.labels) or len(labels) != state.num_qubits:
        raise ValueError(f"cannot reorder {state.labels} into {labels}")
    perm = [state.axis(lab) for lab in labels]
    moved = np.ascontiguousarray(np.transpose(state.tensor_view(), perm))
    return _wrap(labels, moved.reshape(-1))


def deviation_up_to_sign(state: PureState, other: PureState) -> float:
    """Max absolute amplitude difference, minimized over a global sign flip.

    The two states must cover the same label set; axis order may differ.
    """
    if set(state.labels) != set(other.labels):
        raise ValueError(f"label sets differ: {state.labels} vs {other.labels}")
    aligned = reorder(other, state.labels)
    d_plus = float(np.max(np.abs(state.amps - aligned.amps)))
    d_minus = float(np.max(np.abs(state.amps + aligned.amps)))
    return min(d_plus, d_minus)


def equal_up_to_sign(state: PureState, other: PureState, atol: float = ATOL) -> bool:
    """True when the states agree up to a global sign within ``atol``."""
    return deviation_up_to_sign(state, other) <= atol
