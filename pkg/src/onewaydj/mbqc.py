"""One-way computation on the four-qubit star graph.

Physical qubits 1 and 2 are measured in the x-y plane. The logical target
ends up on physical qubit 3 and the logical control stays on physical qubit 4.
Pauli feed-forward on qubits 3 and 4 then makes the Deutsch-Jozsa readout
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qcore
from .qcore import (
    P0,
    P1,
    SX,
    SZ,
    DensityMatrix,
    QOperator,
    StateVector,
    apply_matrix_vec,
    apply_unitary,
    embed_operator,
    expectation,
    pauli,
)

DEFAULT_SEED = 20080101

STAR_EDGES = ((1, 2), (2, 3), (4, 2))
TARGET_QUBIT = 3
CONTROL_QUBIT = 4
ORACLES = ("f1", "f2", "f3", "f4")
# (f(0), f(1))
TRUTH_TABLES = {"f1": (0, 0), "f2": (1, 1), "f3": (0, 1), "f4": (1, 0)}


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(j), int(k)) for j, k in self.edges)
        seen = set()
        for j, k in edges:
            if j == k:
                raise ValueError(f"self-loop on vertex {j}")
            qcore.check_qubits((j, k), self.n)
            key = frozenset((j, k))
            if key in seen:
                raise ValueError(f"duplicate edge ({j}, {k})")
            seen.add(key)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def star(cls) -> "Graph":
        return cls(4, STAR_EDGES)


@dataclass(frozen=True)
class MeasurementBasis:
    """``{|alpha+>, |alpha->}`` with ``|alpha+-> = (|0> +- e^{i alpha}|1>)/sqrt 2``."""

    alpha: float

    def __post_init__(self):
        plus, minus = self.ket(0), self.ket(1)
        gram = np.array([[np.vdot(a, b) for b in (plus, minus)] for a in (plus, minus)])
        if np.max(np.abs(gram - np.eye(2))) > 1e-12:
            raise ValueError(f"basis at alpha={self.alpha} is not orthonormal")

    def ket(self, s: int) -> np.ndarray:
        return np.array([1.0, (-1) ** s * np.exp(1j * self.alpha)], dtype=complex) / np.sqrt(2)

    def projector(self, s: int) -> np.ndarray:
        v = self.ket(s)
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class MeasurementRecord:
    qubit: int
    alpha: float
    s: int
    probability: float

    def __post_init__(self):
        if self.s not in (0, 1):
            raise ValueError(f"outcome must be 0 or 1, got {self.s}")
        if not -1e-12 <= self.probability <= 1 + 1e-12:
            raise ValueError(f"probability {self.probability} outside [0, 1]")


@dataclass(frozen=True)
class FeedForwardRule:
    """One row of the measurement / feed-forward table.

    ``FF3 = Z^(z_coeff*s1 + z_const) X^(x_coeff*s2 + x_const)`` on qubit 3 and
    ``FF4 = Z^s1`` on qubit 4, exponents mod 2. ``alpha1`` and ``alpha2`` are
    the measurement angles for qubits 1 and 2.
    """

    oracle: str
    alpha1: float
    alpha2: float
    z_coeff: int
    z_const: int
    x_coeff: int
    x_const: int

    @classmethod
    def for_oracle(cls, f: str) -> "FeedForwardRule":
        try:
            return FEED_FORWARD_TABLE[f]
        except KeyError:
            raise ValueError(f"unknown oracle {f!r}; expected one of {ORACLES}") from None

    def exponents(self, s1: int, s2: int) -> tuple[int, int, int]:
        """``(z3, x3, z4)`` exponents after reduction mod 2."""
        return (
            (self.z_coeff * s1 + self.z_const) % 2,
            (self.x_coeff * s2 + self.x_const) % 2,
            s1 % 2,
        )

    def ff3(self, s1: int, s2: int) -> np.ndarray:
        z, x, _ = self.exponents(s1, s2)
        return np.linalg.matrix_power(SZ, z) @ np.linalg.matrix_power(SX, x)

    def ff4(self, s1: int) -> np.ndarray:
        return np.linalg.matrix_power(SZ, s1 % 2)

    def control_polarity(self) -> tuple[int, int]:
        """``(A, B)``: the qubit-2 value that triggers the X correction and the
        qubit-1 value that triggers the Z correction on qubit 3."""
        a = next(s2 for s2 in (0, 1) if self.exponents(0, s2)[1] == 1)
        b = next(s1 for s1 in (0, 1) if self.exponents(s1, 0)[0] == 1)
        return a, b


FEED_FORWARD_TABLE = {
    "f1": FeedForwardRule("f1", 0.0, 0.0, 1, 0, 1, 1),
    "f2": FeedForwardRule("f2", 0.0, 0.0, 1, 0, 1, 0),
    "f3": FeedForwardRule("f3", np.pi, 0.0, 1, 1, 1, 0),
    "f4": FeedForwardRule("f4", np.pi, 0.0, 1, 1, 1, 1),
}


@dataclass(frozen=True)
class DJOutcome:
    oracle: str
    branch: tuple[int, int]
    verdict: str
    control_qubit_sx: float
    records: tuple[MeasurementRecord, ...]
    state: StateVector = field(repr=False)

    def __post_init__(self):
        want = "constant" if self.control_qubit_sx > 0 else "balanced"
        if abs(abs(self.control_qubit_sx) - 1.0) > 1e-9 or want != self.verdict:
            raise ValueError(
                f"inconsistent outcome: verdict {self.verdict} with <X4>={self.control_qubit_sx}"
            )

    @property
    def probability(self) -> float:
        return float(np.prod([r.probability for r in self.records]))


def controlled_phase(j: int, k: int) -> QOperator:
    """``|0><0|_j (x) Z_k + |1><1|_j (x) I_k``: the phase -1 sits on ``|0>_j|1>_k``."""
    if j == k:
        raise ValueError("controlled_phase needs two distinct qubits")
    m = np.kron(P0, SZ) + np.kron(P1, np.eye(2))
    return QOperator(m, (j, k), unitary=True)


def standard_cz(j: int, k: int) -> QOperator:
    """Conventional CZ (-1 on ``|11>``). ``controlled_phase(j, k) == Z_k CZ``."""
    if j == k:
        raise ValueError("standard_cz needs two distinct qubits")
    return QOperator(np.diag([1, 1, 1, -1]).astype(complex), (j, k), unitary=True)


def build_entangler(g: Graph) -> QOperator:
    """Product of ``controlled_phase`` over the edges, in edge-list order."""
    full = np.eye(2**g.n, dtype=complex)
    for j, k in g.edges:
        full = full @ embed_operator(controlled_phase(j, k), g.n).matrix
    return QOperator(full, tuple(range(1, g.n + 1)), unitary=True)


def prepare_graph_state(inputs: Sequence[StateVector], graph: Optional[Graph] = None) -> StateVector:
    """Entangle a product of single-qubit inputs along ``graph`` (star by default)."""
    graph = graph or Graph.star()
    if len(inputs) != graph.n:
        raise ValueError(f"need {graph.n} input states, got {len(inputs)}")
    for i, s in enumerate(inputs, start=1):
        if not isinstance(s, StateVector) or s.n != 1:
            raise ValueError(f"input {i} must be a single-qubit StateVector")
    return apply_unitary(StateVector.product(inputs), build_entangler(graph))


def graph_state() -> StateVector:
    """The star graph state built from ``|++++>``."""
    return prepare_graph_state([StateVector.from_label("+")] * 4)


def expected_graph_state() -> StateVector:
    """``(|+0-+> + |-1+->)/sqrt 2``, written out independently of the entangler."""
    a = StateVector.from_label("+0-+").amplitudes
    b = StateVector.from_label("-1+-").amplitudes
    return StateVector((a + b) / np.sqrt(2))


def _branch_probability(amps: np.ndarray, q: int, n: int, proj: np.ndarray) -> float:
    out = apply_matrix_vec(amps, proj, (q,), n)
    return float(np.real(np.vdot(out, out)))


def measure_xy(
    state: StateVector,
    q: int,
    basis: MeasurementBasis,
    forced: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[MeasurementRecord, StateVector]:
    """Projective measurement of qubit ``q`` in ``basis``.

    The measured qubit stays in the register, collapsed onto ``|alpha_s>``.
    Without ``forced`` the branch is drawn from ``rng`` (seeded default).
    """
    (q,) = qcore.check_qubits([q], state.n)
    probs = [_branch_probability(state.amplitudes, q, state.n, basis.projector(s)) for s in (0, 1)]
    if forced is None:
        rng = rng if rng is not None else np.random.default_rng(DEFAULT_SEED)
        s = int(rng.random() < probs[1])
    else:
        s = int(forced)
        if s not in (0, 1):
            raise ValueError(f"forced outcome must be 0 or 1, got {forced}")
        if probs[s] <= 1e-12:
            raise ValueError(f"forced outcome s={s} on qubit {q} has zero probability")
    out = apply_matrix_vec(state.amplitudes, basis.projector(s), (q,), state.n)
    p = min(max(probs[s], 0.0), 1.0)
    return MeasurementRecord(q, basis.alpha, s, p), StateVector(out / np.sqrt(probs[s]))


def feed_forward(state: StateVector, rule: FeedForwardRule, s1: int, s2: int) -> StateVector:
    state = apply_unitary(state, QOperator(rule.ff3(s1, s2), (TARGET_QUBIT,), unitary=True))
    return apply_unitary(state, QOperator(rule.ff4(s1), (CONTROL_QUBIT,), unitary=True))


def oracle_unitary(f: str) -> QOperator:
    """Oracle on (control, target) = qubits (1, 2): ``Z_t`` then ``|x,y> -> |x, y^f(x)>``."""
    if f not in TRUTH_TABLES:
        raise ValueError(f"unknown oracle {f!r}; expected one of {ORACLES}")
    table = TRUTH_TABLES[f]
    perm = np.zeros((4, 4), dtype=complex)
    for x in (0, 1):
        for y in (0, 1):
            perm[2 * x + (y ^ table[x]), 2 * x + y] = 1
    return QOperator(perm @ np.kron(np.eye(2), SZ), (1, 2), unitary=True)


def dj_reference(f: str) -> tuple[StateVector, float]:
    """Circuit-model DJ on ``|+>_c|+>_t``: returns the output and ``<X_c>``."""
    out = apply_unitary(StateVector.from_label("++"), oracle_unitary(f))
    return out, expectation(out, pauli("X", 1))


def swap_order(m: np.ndarray) -> np.ndarray:
    """Swap the two tensor factors of a 4x4 matrix."""
    sw = np.eye(4)[[0, 2, 1, 3]]
    return sw @ np.asarray(m) @ sw


def verdict_of(sx: float) -> str:
    return "constant" if sx > 0 else "balanced"


def run_dj(
    f: str,
    branch: Optional[tuple[int, int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> DJOutcome:
    """Graph state, two x-y measurements, feed-forward, ``<X>`` on qubit 4.

    ``branch`` forces ``(s1, s2)``; otherwise outcomes are sampled from ``rng``.
    """
    rule = FeedForwardRule.for_oracle(f)
    rng = rng if rng is not None else np.random.default_rng(DEFAULT_SEED)
    forced1, forced2 = branch if branch is not None else (None, None)
    psi = graph_state()
    rec1, psi = measure_xy(psi, 1, MeasurementBasis(rule.alpha1), forced1, rng)
    rec2, psi = measure_xy(psi, 2, MeasurementBasis(rule.alpha2), forced2, rng)
    psi = feed_forward(psi, rule, rec1.s, rec2.s)
    sx = expectation(psi, pauli("X", CONTROL_QUBIT))
    return DJOutcome(f, (rec1.s, rec2.s), verdict_of(sx), sx, (rec1, rec2), psi)


def output_pair(state: StateVector) -> np.ndarray:
    """State of qubits (3, 4) once qubits 1 and 2 are in a known product state."""
    t = state.amplitudes.reshape(4, 4)
    u, sv, vh = np.linalg.svd(t)
    if sv[1] > 1e-9:
        raise ValueError("qubits (1,2) are entangled with (3,4)")
    return vh[0] * sv[0]


def extract_logical_map(
    alpha1: float,
    alpha2: float,
    s1: int,
    s2: int,
    rule: Optional[FeedForwardRule] = None,
    adaptive: bool = True,
) -> QOperator:
    """Logical two-qubit map realised by one measurement branch.

    Columns run over logical inputs ``|t c>`` (t on physical qubit 1, c on
    physical qubit 4), rows over outputs ``|t c>`` on physical qubits (3, 4).
    With ``adaptive`` the second angle becomes ``(-1)^s1 * alpha2``. With
    ``rule`` the feed-forward corrections for ``(s1, s2)`` are applied.
    The result is rescaled so that it is unitary when the branch is.
    """
    a2 = (-1) ** s1 * alpha2 if adaptive else alpha2
    bra1 = MeasurementBasis(alpha1).ket(s1).conj()
    bra2 = MeasurementBasis(a2).ket(s2).conj()
    entangler = build_entangler(Graph.star()).matrix
    plus = qcore.KET_PLUS
    cols = []
    for idx, (t, c) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        psi = entangler @ qcore.kron(np.eye(2)[t], plus, plus, np.eye(2)[c])
        out = np.einsum("abcd,a,b->cd", psi.reshape(2, 2, 2, 2), bra1, bra2).reshape(4)
        if np.vdot(out, out).real <= 1e-12:
            raise ValueError(f"branch (s1={s1}, s2={s2}) has zero probability for input |{t}{c}>")
        cols.append(out)
    m = np.stack(cols, axis=1)
    m = m / np.sqrt(np.mean(np.sum(np.abs(m) ** 2, axis=0)))
    if rule is not None:
        m = np.kron(rule.ff3(s1, s2), rule.ff4(s1)) @ m
    return QOperator(m, (TARGET_QUBIT, CONTROL_QUBIT))


def stabilizers(g: Graph) -> list[np.ndarray]:
    """``S X_j S^dag`` for every vertex; the graph state is their +1 eigenvector."""
    s = build_entangler(g).matrix
    return [s @ embed_operator(pauli("X", j), g.n).matrix @ s.conj().T for j in range(1, g.n + 1)]


def branch_distribution(f: str) -> dict[tuple[int, int], float]:
    """Joint Born probabilities of ``(s1, s2)`` at the oracle's angles."""
    out = {}
    for s1 in (0, 1):
        for s2 in (0, 1):
            try:
                out[(s1, s2)] = run_dj(f, (s1, s2)).probability
            except ValueError:
                out[(s1, s2)] = 0.0
    return out


def branch_average(f: str, relabel: bool = True) -> DensityMatrix:
    """Probability-weighted mixture of the four projective branches of ``run_dj``.

    With ``relabel`` the measured qubits are rotated from ``|alpha_s>`` into
    ``|s>``, the computational labels the ensemble measurement uses.
    """
    from .nmr import measurement_prerotation

    rule = FeedForwardRule.for_oracle(f)
    rho = np.zeros((16, 16), dtype=complex)
    for s1 in (0, 1):
        for s2 in (0, 1):
            res = run_dj(f, (s1, s2))
            psi = res.state
            if relabel:
                psi = apply_unitary(psi, QOperator(measurement_prerotation(rule.alpha1), (1,), True))
                psi = apply_unitary(psi, QOperator(measurement_prerotation(rule.alpha2), (2,), True))
            rho += res.probability * np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(rho)
