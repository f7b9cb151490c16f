"""Ensemble (density-matrix) simulation of the liquid-state NMR experiment.

Pulses are ideal and instantaneous. Gradients are ideal dephasers: every
molecule in the sample sees a gradient phase ``phi`` that depends on its
position, and the observed state is the average over ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .. import qcore
from ..mbqc import FeedForwardRule, MeasurementBasis, expected_graph_state
from ..qcore import (
    P0,
    P1,
    SX,
    SZ,
    DensityMatrix,
    QOperator,
    StateVector,
    apply_matrix_rho,
    apply_unitary,
    bit_of,
    embed_operator,
    expectation,
    pauli,
    rotation,
)
from .molecule import MoleculeSpec

DEFAULT_GRADIENT_SAMPLES = 256
PREPARATION_TIME = 0.085  # s, whole GHZ preparation
PULSE_TIME = 600e-6  # s, one shaped single-qubit pulse

GHZ_TEXT = ("0110", "1001")
GHZ_CAPTION = ("0101", "1010")


@dataclass(frozen=True, eq=False)
class EnsembleState:
    rho: DensityMatrix
    elapsed_time: float = 0.0

    @property
    def is_deviation(self) -> bool:
        return self.rho.deviation

    @property
    def n(self) -> int:
        return self.rho.n

    def evolve(self, matrix: np.ndarray, dt: float = 0.0) -> "EnsembleState":
        return EnsembleState(self.rho.replace(matrix), self.elapsed_time + dt)


AnyState = Union[EnsembleState, DensityMatrix, StateVector]


def as_ensemble(state: AnyState) -> EnsembleState:
    if isinstance(state, EnsembleState):
        return state
    return EnsembleState(qcore.as_density(state))


def _apply_ops(state: EnsembleState, ops: Sequence[QOperator]) -> EnsembleState:
    rho = state.rho
    for u in ops:
        rho = apply_unitary(rho, u)
    return EnsembleState(rho, state.elapsed_time)


# -- initial state and free evolution ------------------------------------


def pseudopure_init(spec: MoleculeSpec, polarization: float = 1.0, deviation: bool = False) -> EnsembleState:
    """``(1 - eps) I/2^n + eps |0..0><0..0|``.

    With ``deviation=True`` only the traceless part ``eps (|0..0><0..0| - I/2^n)``
    is kept and the state is flagged as a deviation matrix.
    """
    eps = float(polarization)
    if not 0 < eps <= 1:
        raise ValueError(f"polarization must lie in (0, 1], got {polarization}")
    d = 2**spec.n
    ground = np.zeros((d, d), dtype=complex)
    ground[0, 0] = 1
    if deviation:
        return EnsembleState(DensityMatrix(eps * (ground - np.eye(d) / d), deviation=True))
    return EnsembleState(DensityMatrix((1 - eps) * np.eye(d) / d + eps * ground))


def spin_projections(n: int) -> np.ndarray:
    """``m_j`` (+1/2 for ``|0>``) of every basis state, shape ``(2^n, n)``."""
    idx = np.arange(2**n)
    return 0.5 - np.stack([bit_of(idx, q, n) for q in range(1, n + 1)], axis=1)


def energies(spec: MoleculeSpec) -> np.ndarray:
    """Diagonal of ``H0 = sum w_j Iz_j + 2 pi sum_{j<k} J_jk Iz_j Iz_k`` in rad/s."""
    m = spin_projections(spec.n)
    zeeman = m @ spec.omega
    # J is symmetric, so the unrestricted sum counts every pair twice
    coupling = np.pi * np.einsum("aj,jk,ak->a", m, spec.jcoupling, m)
    return zeeman + coupling


def free_evolution(state: AnyState, spec: MoleculeSpec, t: float) -> EnsembleState:
    """``rho -> exp(-i H0 t) rho exp(i H0 t)`` as an elementwise phase."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    state = as_ensemble(state)
    e = energies(spec)
    phase = np.exp(-1j * (e[:, None] - e[None, :]) * t)
    return state.evolve(state.rho.matrix * phase, t)


# -- gates ----------------------------------------------------------------


def zz_gate(j: int, k: int, angle: float = np.pi / 4) -> QOperator:
    """``exp(-i angle Z_j Z_k)``."""
    zz = np.kron(np.diag(SZ), np.diag(SZ))
    return QOperator(np.diag(np.exp(-1j * angle * zz)), (j, k), unitary=True)


def cnot_factors(j: int, k: int) -> list[QOperator]:
    """The five NMR factors of CNOT(j -> k), in application order."""
    if j == k:
        raise ValueError("CNOT needs distinct control and target")
    half = np.pi / 2
    return [
        QOperator(rotation("-z", half), (k,), unitary=True),
        QOperator(rotation("-z", half), (j,), unitary=True),
        QOperator(rotation("-x", half), (k,), unitary=True),
        zz_gate(j, k),
        QOperator(rotation("y", half), (k,), unitary=True),
    ]


def cnot_decomposed(j: int, k: int, spec: Optional[MoleculeSpec] = None) -> QOperator:
    """Product of :func:`cnot_factors` as a 4x4 operator on ``(j, k)``."""
    if spec is not None:
        qcore.check_qubits((j, k), spec.n)
    local = {j: 1, k: 2}
    u = np.eye(4, dtype=complex)
    for f in cnot_factors(j, k):
        u = embed_operator(QOperator(f.matrix, tuple(local[q] for q in f.qubits)), 2).matrix @ u
    return QOperator(u, (j, k), unitary=True)


def canonical_cnot(j: int, k: int) -> QOperator:
    return QOperator(np.kron(P0, np.eye(2)) + np.kron(P1, SX), (j, k), unitary=True)


def pseudo_hadamard(q: int) -> QOperator:
    """``exp(-i pi/4 sigma_y)``."""
    return QOperator(rotation("y", np.pi / 2), (q,), unitary=True)


# -- GHZ and graph state ----------------------------------------------------


def ghz_vector(bits: tuple[str, str] = GHZ_TEXT, phase: complex = 1.0) -> StateVector:
    a = StateVector.basis(int(bits[0], 2), len(bits[0])).amplitudes
    b = StateVector.basis(int(bits[1], 2), len(bits[1])).amplitudes
    return StateVector((a + phase * b) / np.sqrt(2))


def graph_rotations() -> list[QOperator]:
    """``R_-y(pi/2)`` on qubits 1, 3 and 4."""
    return [QOperator(rotation("-y", np.pi / 2), (q,), unitary=True) for q in (1, 3, 4)]


def resolve_ghz() -> tuple[tuple[str, str], complex, float]:
    """Brute-force the GHZ variant that the local rotations carry onto the graph state.

    Tries both bit patterns with relative phases ``1, -1, i, -i`` and returns
    ``(bits, phase, fidelity)`` of the best candidate.
    """
    target = expected_graph_state()
    best = None
    for bits in (GHZ_TEXT, GHZ_CAPTION):
        for phase in (1, -1, 1j, -1j):
            out = qcore.apply_sequence(ghz_vector(bits, phase), graph_rotations())
            fid = qcore.fidelity(out, target)
            if best is None or fid > best[2] + 1e-12:
                best = (bits, phase, fid)
    return best


GHZ = ghz_vector()


def ghz_network() -> list[QOperator]:
    """Pseudo-Hadamard, a CNOT chain, then flips: ``|0000> -> (|0110> + |1001>)/sqrt 2``."""
    ops = [pseudo_hadamard(1)]
    for j, k in ((1, 2), (2, 3), (3, 4)):
        ops += cnot_factors(j, k)
    ops += [QOperator(SX, (2,), unitary=True), QOperator(SX, (3,), unitary=True)]
    return ops


def gate_durations(ops: Sequence[QOperator], time_budget: float) -> np.ndarray:
    """Split ``time_budget`` over ``ops``.

    Every pulse takes :data:`PULSE_TIME`; the remainder is shared equally by
    the J-coupling (two-qubit) gates. Budgets shorter than the pulses alone
    are spread evenly.
    """
    two_qubit = np.array([u.k == 2 for u in ops])
    pulses = PULSE_TIME * np.count_nonzero(~two_qubit)
    if not two_qubit.any() or time_budget <= pulses:
        return np.full(len(ops), time_budget / len(ops))
    return np.where(two_qubit, (time_budget - pulses) / np.count_nonzero(two_qubit), PULSE_TIME)


def _run_network(state: EnsembleState, spec: MoleculeSpec, ops, time_budget: Optional[float]) -> EnsembleState:
    if not time_budget:
        return _apply_ops(state, ops)
    for u, dt in zip(ops, gate_durations(ops, time_budget)):
        state = _apply_ops(state, [u])
        state = relaxation_channel(state, spec, dt)
    return state


def prepare_ghz(
    spec: MoleculeSpec,
    polarization: float = 1.0,
    time_budget: Optional[float] = None,
    state: Optional[AnyState] = None,
) -> EnsembleState:
    """Run :func:`ghz_network` on the pseudopure state (or ``state``).

    ``time_budget`` (seconds) spreads relaxation evenly over the gates.
    """
    if spec.n != 4:
        raise ValueError(f"GHZ preparation needs a 4-spin molecule, got {spec.n}")
    state = pseudopure_init(spec, polarization) if state is None else as_ensemble(state)
    return _run_network(state, spec, ghz_network(), time_budget)


def ghz_to_graph(state: AnyState) -> EnsembleState:
    state = as_ensemble(state)
    if state.n != 4:
        raise ValueError("ghz_to_graph needs a 4-qubit state")
    return _apply_ops(state, graph_rotations())


# -- gradients ------------------------------------------------------------


def _coherence(n: int, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """Weighted ``F_z`` difference between ket and bra of every matrix element."""
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    fz = spin_projections(n) @ w
    return fz[:, None] - fz[None, :]


def gradient_pulse(state: AnyState, spec: MoleculeSpec, phase_scale: float, weights=None) -> EnsembleState:
    """``exp(-i phi F_z)`` with ``F_z = sum_j w_j Iz_j`` (all ``w_j = 1`` by default)."""
    state = as_ensemble(state)
    order = _coherence(state.n, weights)
    return state.evolve(state.rho.matrix * np.exp(-1j * phase_scale * order))


def gradient_average(
    state: AnyState,
    spec: MoleculeSpec,
    samples: Optional[int] = None,
    weights=None,
) -> EnsembleState:
    """Average over the gradient phase across the sample.

    ``samples=None`` zeroes every element of nonzero (weighted) coherence
    order. Otherwise the state is averaged over ``samples`` pulses with
    ``phi = 2 pi k / samples``, which is exact for coherence orders below
    ``samples`` in magnitude.
    """
    state = as_ensemble(state)
    if samples is None:
        order = _coherence(state.n, weights)
        return state.evolve(np.where(np.abs(order) < 1e-9, state.rho.matrix, 0))
    if samples < 1:
        raise ValueError("samples must be >= 1")
    acc = np.zeros_like(state.rho.matrix)
    for k in range(samples):
        acc += gradient_pulse(state, spec, 2 * np.pi * k / samples, weights).rho.matrix
    return state.evolve(acc / samples)


def gradient_crusher(state: AnyState, spec: MoleculeSpec) -> EnsembleState:
    """Keep only zero-quantum coherences."""
    return gradient_average(state, spec)


PZ_SEQUENCES = {
    1: ("G", ("y", 2), ("y", 4), "G", ("y", 3), ("y", 4),
        "G", ("-y", 2), ("-y", 4), "G", ("-y", 3), ("-y", 4)),
    2: (("y", 3), ("y", 4), "G", ("y", 1), ("y", 4), "G",
        ("-y", 3), ("-y", 4), "G", ("-y", 1), ("-y", 4), "G"),
}


def echo_weights(steps, n: int) -> np.ndarray:
    """Net gradient weight per spin once the pi pulses are moved to the end.

    A pi pulse about +-y reverses ``Iz`` of its spin, so every later gradient
    counts with the opposite sign for that spin.
    """
    sign = np.ones(n)
    w = np.zeros(n)
    for step in steps:
        if step == "G":
            w += sign
        else:
            sign[step[1] - 1] *= -1
    return w


def _step_matrix(step) -> np.ndarray:
    return rotation(step[0], np.pi)


def sequence_rotation(steps, n: int) -> np.ndarray:
    """Net rotation of all pi pulses in ``steps`` (full register)."""
    u = np.eye(2**n, dtype=complex)
    for step in steps:
        if step != "G":
            u = embed_operator(QOperator(_step_matrix(step), (step[1],)), n).matrix @ u
    return u


def pz_sequence(
    state: AnyState,
    spec: MoleculeSpec,
    q: int,
    samples: int = DEFAULT_GRADIENT_SAMPLES,
    method: str = "literal",
) -> EnsembleState:
    """Gradient / refocusing sequence that dephases qubit ``q`` only.

    ``literal`` runs the pulse train step by step for ``samples`` gradient
    phases (one phase shared by all gradients of a molecule) and averages.
    ``echo`` uses the equivalent analytic form from :func:`echo_weights`.
    """
    if q not in PZ_SEQUENCES:
        raise ValueError(f"no gradient sequence for qubit {q}; available: {sorted(PZ_SEQUENCES)}")
    state = as_ensemble(state)
    if state.n != 4:
        raise ValueError("the gradient sequences are defined for 4 spins")
    steps = PZ_SEQUENCES[q]
    n = state.n
    if method == "echo":
        out = gradient_average(state, spec, weights=echo_weights(steps, n))
        u = sequence_rotation(steps, n)
        return out.evolve(u @ out.rho.matrix @ u.conj().T)
    if method != "literal":
        raise ValueError(f"unknown method {method!r}")
    phis = 2 * np.pi * np.arange(samples) / samples
    order = _coherence(n)
    batch = np.broadcast_to(state.rho.matrix, (samples,) + state.rho.matrix.shape).copy()
    for step in steps:
        if step == "G":
            batch *= np.exp(-1j * phis[:, None, None] * order[None])
        else:
            batch = apply_matrix_rho(batch, _step_matrix(step), (step[1],), n)
    return state.evolve(batch.mean(axis=0))


# -- measurement mimicry and feed-forward ------------------------------------


def measurement_prerotation(alpha: float, general: bool = False) -> np.ndarray:
    """Single-qubit rotation taking ``|alpha_s>`` to ``|s>`` (up to phase).

    ``alpha = 0`` uses ``R_-y(pi/2)`` and ``alpha = pi`` uses ``R_y(pi/2)``;
    other angles need ``general=True`` and use ``R_-y(pi/2) R_z(-alpha)``.
    """
    a = math.remainder(alpha, 2 * np.pi)
    if abs(a) < 1e-12:
        return rotation("-y", np.pi / 2)
    if abs(abs(a) - np.pi) < 1e-12:
        return rotation("y", np.pi / 2)
    if not general:
        raise ValueError(f"basis angle {alpha} needs the general-angle extension")
    return rotation("-y", np.pi / 2) @ rotation("z", -alpha)


def mimic_measurement(
    state: AnyState,
    spec: MoleculeSpec,
    q: int,
    basis: MeasurementBasis,
    allow_general: bool = False,
    method: str = "literal",
) -> EnsembleState:
    """Rotate qubit ``q`` so that ``basis`` maps onto ``{|0>, |1>}``, then dephase it.

    Afterwards outcome ``s`` is stored in the ``|s><s|_q`` block.
    """
    supported = {1: (0.0, np.pi), 2: (0.0,)}
    if q not in supported:
        raise ValueError(f"measurement mimicry is only available for qubits 1 and 2, got {q}")
    a = math.remainder(basis.alpha, 2 * np.pi)
    if not allow_general and not any(abs(abs(a) - s) < 1e-12 for s in supported[q]):
        raise ValueError(f"basis angle {basis.alpha} on qubit {q} needs allow_general=True")
    state = as_ensemble(state)
    pre = QOperator(measurement_prerotation(basis.alpha, general=allow_general), (q,), unitary=True)
    return pz_sequence(_apply_ops(state, [pre]), spec, q, method=method)


def feed_forward_unitary(rule: FeedForwardRule) -> QOperator:
    """Feed-forward as a unitary controlled by the labels on qubits 1 and 2."""
    u = np.zeros((16, 16), dtype=complex)
    projectors = (P0, P1)
    for s1 in (0, 1):
        for s2 in (0, 1):
            u += qcore.kron(projectors[s1], projectors[s2], rule.ff3(s1, s2), rule.ff4(s1))
    return QOperator(u, (1, 2, 3, 4), unitary=True)


def conditional_feed_forward(state: AnyState, rule: FeedForwardRule) -> EnsembleState:
    """Apply the corrections for every ``(s1, s2)`` block at once.

    Expects qubits 1 and 2 to already carry their outcome labels.
    """
    return _apply_ops(as_ensemble(state), [feed_forward_unitary(rule)])


# -- relaxation -------------------------------------------------------------


def _relax_spin(rho: np.ndarray, q: int, n: int, t1: float, t2: float, t: float) -> np.ndarray:
    gamma = 0.0 if math.isinf(t1) else -math.expm1(-t / t1)
    pure = 1 / t2 - (0.0 if math.isinf(t1) else 1 / (2 * t1))
    coh = math.sqrt(1 - gamma) * math.exp(-t * pure)
    d = 2**n
    shape = (2 ** (q - 1), 2, 2 ** (n - q))
    r = rho.reshape(shape + shape).copy()
    r00 = r[:, 0, :, :, 0, :]
    r11 = r[:, 1, :, :, 1, :].copy()
    r[:, 0, :, :, 0, :] = r00 + gamma * r11
    r[:, 1, :, :, 1, :] = (1 - gamma) * r11
    r[:, 0, :, :, 1, :] *= coh
    r[:, 1, :, :, 0, :] *= coh
    return r.reshape(d, d)


def relaxation_channel(state: AnyState, spec: MoleculeSpec, t: float) -> EnsembleState:
    """Independent amplitude damping (T1, towards ``|0>``) and dephasing (T2) per spin.

    Coherences of spin ``j`` decay as ``exp(-t / T2_j)`` overall.
    """
    if t < 0:
        raise ValueError(f"relaxation time must be non-negative, got {t}")
    state = as_ensemble(state)
    if spec.n != state.n:
        raise ValueError(f"molecule has {spec.n} spins, state has {state.n} qubits")
    for q in range(spec.n):
        if spec.t2[q] > 2 * spec.t1[q]:
            raise ValueError(f"qubit {q + 1}: T2 > 2 T1 is unphysical")
    rho = state.rho.matrix
    for q in range(1, spec.n + 1):
        rho = _relax_spin(rho, q, spec.n, spec.t1[q - 1], spec.t2[q - 1], t)
    return state.evolve(rho, t)


def relaxation_choi(t1: float, t2: float, t: float) -> np.ndarray:
    """Choi matrix of the single-spin relaxation channel."""
    choi = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[a, b] = 1
            choi += np.kron(e, _relax_spin(e, 1, 1, t1, t2, t))
    return choi


# -- the full ensemble algorithm ------------------------------------------


@dataclass(frozen=True)
class EnsembleDJResult:
    oracle: str
    verdict: str
    control_sx: float
    polarity: tuple[int, int]
    polarization: float
    state: EnsembleState


def run_dj_ensemble(
    f: str,
    spec: Optional[MoleculeSpec] = None,
    polarization: float = 1.0,
    time_budget: Optional[float] = None,
    method: str = "literal",
) -> EnsembleDJResult:
    """Pseudopure state, GHZ, crusher, graph rotations, mimicked measurements,
    conditional feed-forward; then ``<X>`` of qubit 4."""
    rule = FeedForwardRule.for_oracle(f)
    spec = spec if spec is not None else MoleculeSpec.uncoupled(4)
    st = prepare_ghz(spec, polarization, time_budget)
    st = gradient_crusher(st, spec)
    st = ghz_to_graph(st)
    st = mimic_measurement(st, spec, 1, MeasurementBasis(rule.alpha1), method=method)
    st = mimic_measurement(st, spec, 2, MeasurementBasis(rule.alpha2), method=method)
    st = conditional_feed_forward(st, rule)
    sx = expectation(st.rho, pauli("X", 4))
    return EnsembleDJResult(
        f, "constant" if sx > 0 else "balanced", sx, rule.control_polarity(), polarization, st
    )


def ghz_density(bits: tuple[str, str] = GHZ_TEXT) -> DensityMatrix:
    """``|GHZ><GHZ|`` built from the bit patterns, so every nonzero entry is exactly 1/2."""
    v = np.zeros(2 ** len(bits[0]))
    v[[int(b, 2) for b in bits]] = 1.0
    return DensityMatrix(np.outer(v, v) / 2)
