"""Dense state-vector / density-matrix engine.

Qubits are labelled 1..n and qubit 1 is the most significant bit of the
computational-basis index, so ``|q1 q2 ... qn>`` reads left to right.
All containers are immutable: arrays are copied on construction and marked
read-only, and every operation returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 10
ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
_LABELS = {"0": KET0, "1": KET1, "+": KET_PLUS, "-": KET_MINUS}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


def _num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
    return n


def check_qubits(qubits: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate 1-based qubit labels against an ``n``-qubit register."""
    qs = tuple(int(q) for q in qubits)
    if len(set(qs)) != len(qs):
        raise ValueError(f"duplicate qubit index in {qs}")
    for q in qs:
        if not 1 <= q <= n:
            raise ValueError(f"qubit index {q} out of range 1..{n}")
    return qs


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of ``n`` qubits."""

    amplitudes: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "n", _num_qubits(amps.size))
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (norm={norm:.12g})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def from_label(cls, label: str) -> "StateVector":
        """Product state from a string over ``0 1 + -``, e.g. ``"+0-+"``."""
        try:
            kets = [_LABELS[c] for c in label]
        except KeyError as exc:
            raise ValueError(f"unknown single-qubit label {exc.args[0]!r}") from None
        return cls(kron(*kets))

    @classmethod
    def product(cls, states: Sequence["StateVector"]) -> "StateVector":
        return cls(kron(*[s.amplitudes for s in states]))

    @classmethod
    def basis(cls, index: int, n: int) -> "StateVector":
        amps = np.zeros(2**n, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian ``2^n x 2^n`` matrix.

    ``deviation=True`` marks an NMR deviation matrix, which is exempt from the
    unit-trace requirement (but still has to be Hermitian).
    """

    matrix: np.ndarray
    deviation: bool = False
    n: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        object.__setattr__(self, "n", _num_qubits(m.shape[0]))
        herm = np.max(np.abs(m - m.conj().T))
        if herm > ATOL:
            raise ValueError(f"density matrix is not Hermitian (deviation {herm:.3g})")
        if not self.deviation:
            tr = np.trace(m).real
            if abs(tr - 1.0) > ATOL:
                raise ValueError(f"density matrix trace is {tr:.12g}, expected 1")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(2**n, dtype=complex) / 2**n)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, tol: float = 1e-8) -> bool:
        """Unit trace and positive semidefinite within ``tol``."""
        return (
            not self.deviation
            and abs(self.trace - 1.0) <= ATOL
            and self.eigenvalues().min() >= -tol
        )

    def replace(self, matrix: np.ndarray) -> "DensityMatrix":
        return DensityMatrix(matrix, deviation=self.deviation)


@dataclass(frozen=True, eq=False)
class QOperator:
    """Operator acting on the ordered qubits ``qubits``.

    The first listed qubit is the most significant factor of ``matrix``.
    When ``unitary`` is set, unitarity is checked on construction.
    """

    matrix: np.ndarray
    qubits: tuple[int, ...]
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        qs = tuple(int(q) for q in self.qubits)
        if len(set(qs)) != len(qs):
            raise ValueError(f"duplicate qubit index in {qs}")
        if any(q < 1 for q in qs):
            raise ValueError(f"qubit indices are 1-based, got {qs}")
        if m.shape != (2 ** len(qs), 2 ** len(qs)):
            raise ValueError(f"matrix shape {m.shape} does not match qubits {qs}")
        if self.unitary:
            err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if err > ATOL:
                raise ValueError(f"operator flagged unitary but U^dag U deviates by {err:.3g}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "qubits", qs)

    @property
    def k(self) -> int:
        return len(self.qubits)

    def dagger(self) -> "QOperator":
        return QOperator(self.matrix.conj().T, self.qubits, self.unitary)

    def is_hermitian(self, tol: float = ATOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def is_unitary(self, tol: float = ATOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


State = Union[StateVector, DensityMatrix]


def kron(*factors: np.ndarray) -> np.ndarray:
    out = np.ones((1,) * np.ndim(factors[0]), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def op(matrix: np.ndarray, *qubits: int, unitary: bool = True) -> QOperator:
    """Shorthand constructor, unitary by default."""
    return QOperator(matrix, qubits, unitary=unitary)


def pauli(label: str, *qubits: int) -> QOperator:
    """Pauli string such as ``pauli("ZZ", 1, 2)``; qubits default to 1..len."""
    qubits = qubits or tuple(range(1, len(label) + 1))
    if len(label) != len(qubits):
        raise ValueError("label length must match the number of qubits")
    return QOperator(kron(*[PAULIS[c] for c in label.upper()]), qubits, unitary=True)


def rotation(axis: str, angle: float) -> np.ndarray:
    """``exp(-i angle sigma_axis / 2)``; a leading ``-`` negates the axis."""
    sign = -1.0 if axis.startswith("-") else 1.0
    sigma = PAULIS[axis.lstrip("+-").upper()]
    half = sign * angle / 2
    return np.cos(half) * I2 - 1j * np.sin(half) * sigma


def _tensor_apply(t: np.ndarray, m: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``m`` (2^k x 2^k) into tensor axes ``axes`` of ``t``."""
    k = len(axes)
    mt = m.reshape((2,) * (2 * k))
    out = np.tensordot(mt, t, axes=(list(range(k, 2 * k)), list(axes)))
    # tensordot puts the k new axes first; move them back into place
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_matrix_vec(vec: np.ndarray, m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    t = vec.reshape((2,) * n)
    return _tensor_apply(t, m, [q - 1 for q in qubits]).reshape(-1)


def apply_matrix_rho(rho: np.ndarray, m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """``m rho m^dag`` restricted to ``qubits``; ``rho`` may carry leading batch axes."""
    lead = rho.shape[:-2]
    b = len(lead)
    t = rho.reshape(lead + (2,) * (2 * n))
    t = _tensor_apply(t, m, [b + q - 1 for q in qubits])
    t = _tensor_apply(t, m.conj(), [b + n + q - 1 for q in qubits])
    return t.reshape(rho.shape)


def left_multiply_rho(rho: np.ndarray, m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    t = rho.reshape((2,) * (2 * n))
    return _tensor_apply(t, m, [q - 1 for q in qubits]).reshape(rho.shape)


def embed_operator(operator: QOperator, total_qubits: int) -> QOperator:
    """Full ``2^n x 2^n`` operator acting as ``operator`` on its qubits."""
    n = int(total_qubits)
    _num_qubits(2**n)
    qs = check_qubits(operator.qubits, n)
    rest = [q for q in range(1, n + 1) if q not in qs]
    full = np.kron(operator.matrix, np.eye(2 ** len(rest)))
    order = [q - 1 for q in qs] + [q - 1 for q in rest]
    perm = np.argsort(order)
    full = full.reshape((2,) * (2 * n)).transpose(list(perm) + [n + p for p in perm])
    return QOperator(full.reshape(2**n, 2**n), tuple(range(1, n + 1)), operator.unitary)


def _require_unitary(u: QOperator) -> None:
    if not (u.unitary or u.is_unitary()):
        raise ValueError("operator is not unitary")


def apply_unitary(state: State, u: QOperator) -> State:
    """``|psi> -> U|psi>`` or ``rho -> U rho U^dag``."""
    _require_unitary(u)
    qs = check_qubits(u.qubits, state.n)
    if isinstance(state, StateVector):
        return StateVector(apply_matrix_vec(state.amplitudes, u.matrix, qs, state.n))
    return state.replace(apply_matrix_rho(state.matrix, u.matrix, qs, state.n))


def apply_sequence(state: State, ops: Iterable[QOperator]) -> State:
    """Apply ``ops`` in iteration order (first element acts first)."""
    for u in ops:
        state = apply_unitary(state, u)
    return state


def as_density(state: State) -> DensityMatrix:
    return state.to_density() if isinstance(state, StateVector) else state


def expectation(state: State, obs: QOperator) -> float:
    """``Tr(rho obs)`` for a Hermitian observable."""
    if not obs.is_hermitian():
        raise ValueError("observable is not Hermitian")
    qs = check_qubits(obs.qubits, state.n)
    if isinstance(state, StateVector):
        val = np.vdot(state.amplitudes, apply_matrix_vec(state.amplitudes, obs.matrix, qs, state.n))
    else:
        val = np.trace(left_multiply_rho(state.matrix, obs.matrix, qs, state.n))
    scale = max(1.0, float(np.max(np.abs(obs.matrix))))
    if abs(val.imag) > ATOL * scale:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)


def partial_trace(rho: State, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (output factor order follows ``keep``)."""
    rho = as_density(rho)
    n = rho.n
    if len(keep) == 0:
        raise ValueError("keep list is empty")
    keep = check_qubits(keep, n)
    t = rho.matrix.reshape((2,) * (2 * n))
    traced = [q for q in range(1, n + 1) if q not in keep]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] for i in range(n)]
    for q in traced:
        col[q - 1] = row[q - 1]
    out = "".join(row[q - 1] for q in keep) + "".join(col[q - 1] for q in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 2 ** len(keep)
    return DensityMatrix(red.reshape(d, d), deviation=rho.deviation)


def bit_of(index: np.ndarray, q: int, n: int) -> np.ndarray:
    """Value of qubit ``q`` (1-based, MSB first) in basis index ``index``."""
    return (np.asarray(index) >> (n - q)) & 1


def dephase_qubit(rho: State, q: int) -> DensityMatrix:
    """Zero every element coupling the ``|0>_q`` and ``|1>_q`` subspaces."""
    rho = as_density(rho)
    (q,) = check_qubits([q], rho.n)
    b = bit_of(np.arange(2**rho.n), q, rho.n)
    mask = b[:, None] == b[None, :]
    return rho.replace(np.where(mask, rho.matrix, 0))


def global_phase_align(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``b`` multiplied by the phase that best aligns it with ``a``."""
    ip = np.vdot(b, a)
    if abs(ip) < 1e-14:
        return b
    return b * (ip / abs(ip))


def phase_invariant_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-abs distance between ``a`` and ``e^{i phi} b`` for the best phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - global_phase_align(a, b))))


def fidelity(a: State, b: State) -> float:
    """Overlap fidelity; at least one argument must be pure unless both are."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return float(abs(a.overlap(b)) ** 2)
    if isinstance(a, DensityMatrix) and isinstance(b, StateVector):
        a, b = b, a
    if isinstance(a, StateVector):
        return float(np.real(np.vdot(a.amplitudes, b.matrix @ a.amplitudes)))
    # mixed-mixed: Uhlmann fidelity as the squared nuclear norm of sqrt(a) sqrt(b)
    return float(np.linalg.norm(_psd_sqrt(a.matrix) @ _psd_sqrt(b.matrix), "nuc") ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.where(w > 1e-12 * max(w.max(), 1e-300), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T
