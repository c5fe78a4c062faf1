"""Dense statevector and density-matrix engine for small qubit registers.

Pure states carry the per-round protocol simulation: the few gates the
protocols need (H, X, S-dagger, CNOT), Pauli measurements implemented by
basis rotation, and multi-qubit Pauli expectation values. Density
matrices carry the noise analysis: partial trace, von Neumann entropy,
and fidelity against a pure reference.

Registers are capped at five qubits and stored dense. Qubit ordering is
little-endian: qubit 0 is the least-significant bit of the amplitude
index, so |q2 q1 q0> = |011> sits at index 3.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 5
NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_SLACK = 1e-10
UNITARY_ATOL = 1e-12

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class GateName(enum.Enum):
    H = "H"
    X = "X"
    S_DAGGER = "S_DAGGER"
    CNOT = "CNOT"


class PauliBasis(enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


_PAULI_MATRICES: dict[PauliBasis, np.ndarray] = {
    PauliBasis.X: _frozen(np.array([[0, 1], [1, 0]], dtype=complex)),
    PauliBasis.Y: _frozen(np.array([[0, -1j], [1j, 0]], dtype=complex)),
    PauliBasis.Z: _frozen(np.array([[1, 0], [0, -1]], dtype=complex)),
}


def pauli_matrix(basis: PauliBasis) -> np.ndarray:
    """Read-only 2x2 matrix for a Pauli observable."""
    return _PAULI_MATRICES[basis]


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``num_qubits`` qubits.

    Amplitudes are stored as an immutable complex array of length
    2**num_qubits; the squared norm must be 1 within ``NORM_ATOL``.
    """

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.num_qubits, int) or not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be an integer in [1, {MAX_QUBITS}]")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got {amps.shape[0]}"
            )
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized: |amps|^2 = {norm_sq!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def probabilities(self) -> np.ndarray:
        """Born probabilities over computational basis states."""
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state: Hermitian, unit-trace, positive semidefinite matrix."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.num_qubits, int) or not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be an integer in [1, {MAX_QUBITS}]")
        d = 2**self.num_qubits
        mat = np.array(self.entries, dtype=complex)
        if mat.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=HERMITIAN_ATOL, rtol=0.0):
            raise ValueError("density matrix is not Hermitian")
        trace = float(np.trace(mat).real)
        if abs(trace - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        # eigvalsh is cheap at these dimensions and catches negative weight early
        smallest = float(np.linalg.eigvalsh(mat)[0])
        if smallest < -PSD_SLACK:
            raise ValueError(f"density matrix has negative eigenvalue {smallest!r}")
        object.__setattr__(self, "entries", _frozen(mat))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits


@dataclass(frozen=True)
class Gate:
    """Named unitary acting on one or two qubits."""

    name: GateName
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape not in ((2, 2), (4, 4)):
            raise ValueError("gate matrix must be 2x2 or 4x4")
        eye = np.eye(mat.shape[0])
        if not np.allclose(mat.conj().T @ mat, eye, atol=UNITARY_ATOL, rtol=0.0):
            raise ValueError(f"gate {self.name.value} is not unitary")
        object.__setattr__(self, "matrix", _frozen(mat))

    @property
    def num_qubits(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2


HADAMARD = Gate(GateName.H, np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2)
PAULI_X_GATE = Gate(GateName.X, _PAULI_MATRICES[PauliBasis.X])
S_DAGGER = Gate(GateName.S_DAGGER, np.array([[1, 0], [0, -1j]], dtype=complex))
# Basis order for two-qubit gates: targets[0] is the high bit of the 4-dim
# index, so rows are |control,target> = 00, 01, 10, 11.
CNOT = Gate(
    GateName.CNOT,
    np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
)

GATES: dict[GateName, Gate] = {
    g.name: g for g in (HADAMARD, PAULI_X_GATE, S_DAGGER, CNOT)
}


def zero_state(num_qubits: int) -> StateVector:
    """|0...0> on the given register size."""
    return basis_state(num_qubits, 0)


def basis_state(num_qubits: int, index: int) -> StateVector:
    """Computational basis state |index> in little-endian convention."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}]")
    dim = 2**num_qubits
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def plus_state() -> StateVector:
    """Single-qubit |+> = (|0> + |1>)/sqrt(2)."""
    return StateVector(1, np.array([_INV_SQRT2, _INV_SQRT2], dtype=complex))


_GHZ_AMPS = np.zeros(8, dtype=complex)
_GHZ_AMPS[0] = _INV_SQRT2
_GHZ_AMPS[7] = _INV_SQRT2
_GHZ_AMPS = _frozen(_GHZ_AMPS)


def make_ghz() -> StateVector:
    """Three-qubit GHZ state (|000> + |111>)/sqrt(2).

    Equivalent to H on qubit 0 followed by CNOT(0 -> 1) and CNOT(1 -> 2)
    applied to |000>.
    """
    return StateVector(3, _GHZ_AMPS)


def _axis(qubit: int, num_qubits: int) -> int:
    # little-endian: tensor axis k of amps.reshape([2]*n) is qubit n-1-k
    return num_qubits - 1 - qubit


def _apply_matrix(
    amps: np.ndarray, matrix: np.ndarray, targets: Sequence[int], num_qubits: int
) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the listed qubits of a raw amplitude array.

    targets[0] corresponds to the most-significant bit of the matrix index.
    """
    k = len(targets)
    axes = [_axis(q, num_qubits) for q in targets]
    tensor = amps.reshape((2,) * num_qubits)
    tensor = np.moveaxis(tensor, axes, range(k))
    flat = tensor.reshape(2**k, -1)
    out = (matrix @ flat).reshape((2,) * num_qubits)
    out = np.moveaxis(out, range(k), axes)
    return np.ascontiguousarray(out).reshape(-1)


def _check_targets(state: StateVector, targets: Sequence[int], arity: int) -> None:
    if len(targets) != arity:
        raise ValueError(f"gate acts on {arity} qubit(s), got targets {list(targets)}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"target qubits must be distinct, got {list(targets)}")
    for q in targets:
        if not 0 <= q < state.num_qubits:
            raise ValueError(
                f"target qubit {q} out of range for {state.num_qubits}-qubit state"
            )


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[int]) -> StateVector:
    """Apply a gate to the given target qubits and return the new state.

    For two-qubit gates targets are ordered: for CNOT, targets[0] is the
    control and targets[1] the target.
    """
    _check_targets(state, targets, gate.num_qubits)
    amps = _apply_matrix(state.amplitudes, gate.matrix, targets, state.num_qubits)
    return StateVector(state.num_qubits, amps)


def apply_pauli(state: StateVector, qubit: int, basis: PauliBasis) -> StateVector:
    """Apply a single Pauli operator (X, Y, or Z) to one qubit."""
    _check_targets(state, [qubit], 1)
    amps = _apply_matrix(state.amplitudes, _PAULI_MATRICES[basis], [qubit], state.num_qubits)
    return StateVector(state.num_qubits, amps)


# Rotations mapping each Pauli eigenbasis onto the computational basis:
# measuring P is rotating by U with U P U^dag = Z, reading out Z, and
# rotating back. For Y the forward rotation is S-dagger then H.
_FORWARD_ROTATION: dict[PauliBasis, np.ndarray] = {
    PauliBasis.X: HADAMARD.matrix,
    PauliBasis.Y: _frozen(HADAMARD.matrix @ S_DAGGER.matrix),
}
_BACKWARD_ROTATION: dict[PauliBasis, np.ndarray] = {
    basis: _frozen(np.asarray(mat.conj().T)) for basis, mat in _FORWARD_ROTATION.items()
}

# caches for the raw measurement path, keyed by register size and qubit;
# these stay tiny because registers are capped at five qubits
_ROTATION_CACHE: dict[tuple[int, int, PauliBasis], tuple[np.ndarray, np.ndarray]] = {}
_MASK_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _embed_one_qubit(matrix: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    full = np.eye(1, dtype=complex)
    for q in range(num_qubits - 1, -1, -1):
        factor = matrix if q == qubit else np.eye(2, dtype=complex)
        full = np.kron(full, factor)
    return full


def _rotation_ops(
    num_qubits: int, qubit: int, basis: PauliBasis
) -> tuple[np.ndarray, np.ndarray]:
    key = (num_qubits, qubit, basis)
    ops = _ROTATION_CACHE.get(key)
    if ops is None:
        forward = _embed_one_qubit(_FORWARD_ROTATION[basis], qubit, num_qubits)
        ops = (_frozen(forward), _frozen(np.asarray(forward.conj().T)))
        _ROTATION_CACHE[key] = ops
    return ops


def _bit_masks(num_qubits: int, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    key = (num_qubits, qubit)
    masks = _MASK_CACHE.get(key)
    if masks is None:
        bits = (np.arange(2**num_qubits) >> qubit) & 1
        masks = (_frozen((bits == 0).astype(float)), _frozen((bits == 1).astype(float)))
        _MASK_CACHE[key] = masks
    return masks


def _measure_pauli_raw(
    amps: np.ndarray, num_qubits: int, qubit: int, basis: PauliBasis,
    rng: np.random.Generator,
) -> tuple[int, np.ndarray]:
    """Measurement core over raw amplitudes; used by the round engines."""
    if basis is not PauliBasis.Z:
        forward, backward = _rotation_ops(num_qubits, qubit, basis)
        amps = forward @ amps
    mask_zero, mask_one = _bit_masks(num_qubits, qubit)
    weights = amps.real**2 + amps.imag**2
    p_plus = float(weights @ mask_zero)
    p_plus = min(max(p_plus, 0.0), 1.0)

    outcome = 1 if rng.random() < p_plus else -1
    mask = mask_zero if outcome == 1 else mask_one
    prob = p_plus if outcome == 1 else 1.0 - p_plus
    amps = amps * (mask / np.sqrt(prob))

    if basis is not PauliBasis.Z:
        amps = backward @ amps
    return outcome, amps


def measure_pauli(
    state: StateVector, qubit: int, basis: PauliBasis, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Projectively measure one qubit in a Pauli basis.

    Returns (outcome, post-measurement state) where outcome is +1 or -1,
    the eigenvalue of the measured Pauli operator. The post-measurement
    state is renormalized and expressed back in the computational frame,
    so repeating the same measurement reproduces the outcome.
    """
    _check_targets(state, [qubit], 1)
    outcome, amps = _measure_pauli_raw(
        state.amplitudes, state.num_qubits, qubit, basis, rng
    )
    return outcome, StateVector(state.num_qubits, amps)


def expectation_pauli_product(state: StateVector, bases: Sequence[PauliBasis]) -> float:
    """Expectation value of a tensor product of Pauli operators.

    ``bases[i]`` is the operator on qubit i; one entry per qubit is
    required. Computed as the Rayleigh quotient <psi|P|psi> / <psi|psi>,
    which keeps stabilizer eigenstates at exactly +-1.0 in floats.
    """
    if len(bases) != state.num_qubits:
        raise ValueError(
            f"need {state.num_qubits} bases, got {len(bases)}"
        )
    amps = state.amplitudes
    transformed = amps
    for qubit, basis in enumerate(bases):
        transformed = _apply_matrix(
            transformed, _PAULI_MATRICES[basis], [qubit], state.num_qubits
        )
    numerator = complex(np.vdot(amps, transformed))
    denominator = float(np.vdot(amps, amps).real)
    value = numerator / denominator
    if abs(value.imag) > 1e-9:
        raise ArithmeticError(f"expectation has non-real value {value!r}")
    return float(value.real)


def density_from_state(state: StateVector) -> DensityMatrix:
    """Rank-one projector |psi><psi| as a density matrix."""
    amps = state.amplitudes
    return DensityMatrix(state.num_qubits, np.outer(amps, amps.conj()))


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out every qubit not listed in ``keep``.

    The kept qubits are relabeled in ascending order of their original
    index: the smallest kept index becomes qubit 0 of the result.
    """
    kept = sorted(set(keep))
    n = rho.num_qubits
    if not kept:
        raise ValueError("must keep at least one qubit")
    for q in kept:
        if not 0 <= q < n:
            raise ValueError(f"kept qubit {q} out of range for {n}-qubit state")
    if len(kept) == n:
        raise ValueError("must trace out at least one qubit")

    letters = "abcdefghijklmnopqrstuvwxyz"
    row = {q: letters[2 * q] for q in range(n)}
    col = {q: letters[2 * q + 1] for q in range(n)}
    for q in range(n):
        if q not in kept:
            col[q] = row[q]  # contract discarded qubits
    spec_in = (
        "".join(row[n - 1 - ax] for ax in range(n))
        + "".join(col[2 * n - 1 - ax] for ax in range(n, 2 * n))
    )
    spec_out = "".join(row[q] for q in reversed(kept)) + "".join(
        col[q] for q in reversed(kept)
    )
    tensor = rho.entries.reshape((2,) * (2 * n))
    reduced = np.einsum(f"{spec_in}->{spec_out}", tensor)
    m = len(kept)
    return DensityMatrix(m, reduced.reshape(2**m, 2**m))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy -sum(lambda log2 lambda) over the eigenvalues of rho.

    Zero eigenvalues contribute nothing; eigenvalues below -PSD_SLACK
    are rejected as non-physical.
    """
    evals = np.linalg.eigvalsh(rho.entries)
    if float(evals[0]) < -PSD_SLACK:
        raise ValueError(f"matrix has negative eigenvalue {float(evals[0])!r}")
    positive = evals[evals > 0.0]
    entropy = float(-np.sum(positive * np.log2(positive)))
    return float(min(max(entropy, 0.0), rho.num_qubits))


def fidelity_pure(state: StateVector, rho: DensityMatrix) -> float:
    """Fidelity sqrt(<psi|rho|psi>) of a mixed state against a pure reference."""
    if state.num_qubits != rho.num_qubits:
        raise ValueError(
            f"dimension mismatch: state has {state.num_qubits} qubits, "
            f"rho has {rho.num_qubits}"
        )
    overlap = float(np.vdot(state.amplitudes, rho.entries @ state.amplitudes).real)
    overlap = min(max(overlap, 0.0), 1.0)
    return float(np.sqrt(overlap))
