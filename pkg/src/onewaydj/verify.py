"""Named invariant checks, run by ``onewaydj --mode verify``.

Every check returns ``(passed, detail)``. Checks are grouped by module and
the group decides the process exit status of the first failure.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from . import mbqc, nmr, qcore
from .qcore import DensityMatrix, QOperator, StateVector

EXIT_CODES = {"qcore": 11, "mbqc": 12, "nmr": 13, "cli": 14}
SEED = 1234


@dataclass(frozen=True)
class CheckResult:
    name: str
    group: str
    passed: bool
    detail: str
    seconds: float


_REGISTRY: list[tuple[str, Callable[[], tuple[bool, str]]]] = []


def check(name: str):
    def deco(fn):
        _REGISTRY.append((name, fn))
        return fn

    return deco


def _random_state(rng, n) -> StateVector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v))


def _random_density(rng, n, rank=None) -> DensityMatrix:
    d = 2**n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def hermitian_basis(n: int) -> list[DensityMatrix]:
    """Complete Hermitian operator basis, flagged as deviation matrices."""
    d = 2**n
    out = []
    for a in range(d):
        for b in range(a, d):
            e = np.zeros((d, d), dtype=complex)
            if a == b:
                e[a, a] = 1
                out.append(DensityMatrix(e, deviation=True))
                continue
            e[a, b] = e[b, a] = 1
            out.append(DensityMatrix(e, deviation=True))
            f = np.zeros((d, d), dtype=complex)
            f[a, b], f[b, a] = -1j, 1j
            out.append(DensityMatrix(f, deviation=True))
    return out


# -- qcore -----------------------------------------------------------------


@check("qcore.unitary_preserves_norm_and_spectrum")
def _():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for n in (1, 2, 3, 4):
        for _ in range(5):
            u = QOperator(unitary_group.rvs(2**n, random_state=rng), tuple(range(1, n + 1)), True)
            psi = _random_state(rng, n)
            worst = max(worst, abs(np.linalg.norm(qcore.apply_unitary(psi, u).amplitudes) - 1))
            rho = _random_density(rng, n)
            ev = qcore.apply_unitary(rho, u).eigenvalues()
            worst = max(worst, float(np.max(np.abs(ev - rho.eigenvalues()))))
    return worst < 1e-10, f"max deviation {worst:.2e}"


@check("qcore.dephase_idempotent")
def _():
    rng = np.random.default_rng(SEED)
    ok = True
    for q in range(1, 5):
        rho = _random_density(rng, 4)
        once = qcore.dephase_qubit(rho, q)
        ok &= np.array_equal(qcore.dephase_qubit(once, q).matrix, once.matrix)
    return bool(ok), "exact equality on 4 random states"


@check("qcore.dephase_equals_phase_average")
def _():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    samples = 64
    for q in range(1, 5):
        rho = _random_density(rng, 4)
        acc = np.zeros_like(rho.matrix)
        for k in range(samples):
            phi = 2 * np.pi * k / samples
            acc += qcore.apply_unitary(rho, QOperator(qcore.rotation("z", phi), (q,), True)).matrix
        worst = max(worst, float(np.max(np.abs(acc / samples - qcore.dephase_qubit(rho, q).matrix))))
    return worst < 1e-8, f"max deviation {worst:.2e} over {samples} phases"


@check("qcore.partial_trace_all_is_identity")
def _():
    rho = _random_density(np.random.default_rng(SEED), 3)
    d = np.max(np.abs(qcore.partial_trace(rho, [1, 2, 3]).matrix - rho.matrix))
    return d < 1e-14, f"deviation {d:.2e}"


@check("qcore.embedded_disjoint_operators_commute")
def _():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for q, r in itertools.permutations(range(1, 5), 2):
        a = qcore.embed_operator(QOperator(unitary_group.rvs(2, random_state=rng), (q,), True), 4).matrix
        b = qcore.embed_operator(QOperator(unitary_group.rvs(2, random_state=rng), (r,), True), 4).matrix
        worst = max(worst, float(np.max(np.abs(a @ b - b @ a))))
    return worst < 1e-12, f"max commutator {worst:.2e}"


# -- mbqc ------------------------------------------------------------------


@check("mbqc.graph_state_anchor")
def _():
    fid = qcore.fidelity(mbqc.graph_state(), mbqc.expected_graph_state())
    return abs(fid - 1) < 1e-10, f"fidelity {fid:.15f}"


@check("mbqc.entangler_factors_commute")
def _():
    mats = [qcore.embed_operator(mbqc.controlled_phase(j, k), 4).matrix for j, k in mbqc.STAR_EDGES]
    worst = max(float(np.max(np.abs(a @ b - b @ a))) for a, b in itertools.combinations(mats, 2))
    return worst == 0.0, f"max commutator {worst:.2e}"


@check("mbqc.dj_branch_determinism")
def _():
    bad = []
    for f in mbqc.ORACLES:
        want = 1.0 if f in ("f1", "f2") else -1.0
        for branch in itertools.product((0, 1), repeat=2):
            res = mbqc.run_dj(f, branch)
            if abs(res.control_qubit_sx - want) > 1e-9:
                bad.append((f, branch, res.control_qubit_sx))
    return not bad, f"{16 - len(bad)}/16 cases correct" + (f"; failures {bad}" if bad else "")


@check("mbqc.uniform_branch_distribution")
def _():
    worst = 0.0
    for f in mbqc.ORACLES:
        dist = mbqc.branch_distribution(f)
        worst = max(worst, max(abs(p - 0.25) for p in dist.values()))
    return worst < 1e-12, f"max |p - 1/4| = {worst:.2e}"


@check("mbqc.graph_state_stabilized")
def _():
    psi = mbqc.graph_state().amplitudes
    worst = max(float(np.max(np.abs(k @ psi - psi))) for k in mbqc.stabilizers(mbqc.Graph.star()))
    return worst < 1e-12, f"max |K psi - psi| = {worst:.2e}"


@check("mbqc.oracles_unitary_and_classified")
def _():
    ok = True
    for f in mbqc.ORACLES:
        ok &= mbqc.oracle_unitary(f).is_unitary()
        _, sx = mbqc.dj_reference(f)
        want = 1.0 if mbqc.TRUTH_TABLES[f][0] == mbqc.TRUTH_TABLES[f][1] else -1.0
        ok &= abs(sx - want) < 1e-12
    return bool(ok), "f1,f2 constant; f3,f4 balanced"


def _grid():
    angles = 2 * np.pi * np.arange(8) / 8
    return itertools.product(angles, angles)


@check("mbqc.logical_map_unitary_on_grid")
def _():
    worst = 0.0
    for a1, a2 in _grid():
        for s1, s2 in itertools.product((0, 1), repeat=2):
            m = mbqc.extract_logical_map(a1, a2, s1, s2).matrix
            worst = max(worst, float(np.max(np.abs(m.conj().T @ m - np.eye(4)))))
    return worst < 1e-10, f"max |M^dag M - I| = {worst:.2e}"


@check("mbqc.logical_map_branch_correctable")
def _():
    worst = 0.0
    for f in mbqc.ORACLES:
        rule = mbqc.FeedForwardRule.for_oracle(f)
        for a1, a2 in _grid():
            ref = mbqc.extract_logical_map(a1, a2, 0, 0, rule).matrix
            for s1, s2 in ((0, 1), (1, 0), (1, 1)):
                m = mbqc.extract_logical_map(a1, a2, s1, s2, rule).matrix
                worst = max(worst, qcore.phase_invariant_distance(ref, m))
    return worst < 1e-10, f"max branch distance {worst:.2e} over 8x8 angles, 4 rules"


def oracle_assignment_report() -> dict[str, dict]:
    """How each table row's corrected logical map relates to each oracle network."""
    plus2 = qcore.kron(qcore.KET_PLUS, qcore.KET_PLUS)
    out = {}
    for f in mbqc.ORACLES:
        rule = mbqc.FeedForwardRule.for_oracle(f)
        m = mbqc.extract_logical_map(rule.alpha1, rule.alpha2, 0, 0, rule).matrix
        row = {}
        for g in mbqc.ORACLES:
            u = mbqc.swap_order(mbqc.oracle_unitary(g).matrix)
            v = u.conj().T @ m
            row[g] = {
                "exact": qcore.phase_invariant_distance(m, u) < 1e-10,
                "on_plus_plus": qcore.phase_invariant_distance(m @ plus2, u @ plus2) < 1e-10,
                "residual_fixes_plus_plus": qcore.phase_invariant_distance(v @ plus2, plus2) < 1e-10,
            }
        out[f] = row
    return out


@check("mbqc.oracle_assignment_consistent")
def _():
    rep = oracle_assignment_report()
    ok = True
    for f in ("f3", "f4"):
        ok &= [g for g in mbqc.ORACLES if rep[f][g]["exact"]] == [f]
    for f in ("f1", "f2"):
        ok &= rep[f][f]["on_plus_plus"] and rep[f][f]["residual_fixes_plus_plus"]
        ok &= not any(rep[f][g]["on_plus_plus"] for g in ("f3", "f4"))
    return bool(ok), "balanced rows match exactly; constant rows match on |+>|+>"


# -- nmr ---------------------------------------------------------------------


@check("nmr.cnot_decomposition")
def _():
    worst = 0.0
    for j, k in itertools.permutations(range(1, 5), 2):
        d = qcore.phase_invariant_distance(nmr.cnot_decomposed(j, k).matrix, nmr.canonical_cnot(j, k).matrix)
        worst = max(worst, d)
    return worst < 1e-10, f"max distance {worst:.2e} over 12 ordered pairs"


def pz_channel_deviation(q: int, method: str = "literal") -> tuple[float, float]:
    """Max deviation from ``dephase_qubit`` on a complete basis, and the max
    change of inputs that carry no coherence on qubit ``q``."""
    spec = nmr.MoleculeSpec.uncoupled(4)
    worst = kept = 0.0
    for e in hermitian_basis(4):
        out = nmr.pz_sequence(e, spec, q, method=method).rho.matrix
        worst = max(worst, float(np.max(np.abs(out - qcore.dephase_qubit(e, q).matrix))))
        if np.array_equal(qcore.dephase_qubit(e, q).matrix, e.matrix):
            kept = max(kept, float(np.max(np.abs(out - e.matrix))))
    return worst, kept


@check("nmr.pz_sequences_dephase_one_qubit")
def _():
    res = {q: pz_channel_deviation(q) for q in (1, 2)}
    worst = max(r[0] for r in res.values())
    kept = max(r[1] for r in res.values())
    return worst < 1e-8 and kept < 1e-12, f"channel deviation {worst:.2e}; refocused coherences changed by {kept:.2e}"


@check("nmr.ensemble_matches_branch_average")
def _():
    worst = 0.0
    for f in mbqc.ORACLES:
        ens = nmr.run_dj_ensemble(f)
        worst = max(worst, float(np.max(np.abs(ens.state.rho.matrix - mbqc.branch_average(f).matrix))))
        q4 = qcore.partial_trace(ens.state.rho, [4]).matrix
        ref = qcore.partial_trace(mbqc.branch_average(f), [4]).matrix
        worst = max(worst, float(np.max(np.abs(q4 - ref))))
    return worst < 1e-9, f"max deviation {worst:.2e}"


@check("nmr.gradient_average_is_projection")
def _():
    rng = np.random.default_rng(SEED)
    spec = nmr.MoleculeSpec.uncoupled(4)
    rho = _random_density(rng, 4)
    once = nmr.gradient_average(rho, spec)
    twice = nmr.gradient_average(once, spec)
    sampled = nmr.gradient_average(rho, spec, samples=256)
    d = float(np.max(np.abs(sampled.rho.matrix - once.rho.matrix)))
    ok = np.array_equal(once.rho.matrix, twice.rho.matrix) and abs(once.rho.trace - 1) < 1e-12
    return bool(ok and d < 1e-8), f"idempotent, trace-preserving; sampled vs analytic {d:.2e}"


@check("nmr.relaxation_cptp")
def _():
    worst_ev = np.inf
    worst_tp = 0.0
    for t1, t2, t in ((12.37, 0.3762, 0.085), (4.89, 0.5067, 1.0), (1.0, 2.0, 0.3), (2.0, 0.1, 5.0)):
        choi = nmr.relaxation_choi(t1, t2, t)
        worst_ev = min(worst_ev, float(np.linalg.eigvalsh(choi).min()))
        # trace preservation: partial trace over the output factor is I
        tp = np.einsum("aibi->ab", choi.reshape(2, 2, 2, 2))
        worst_tp = max(worst_tp, float(np.max(np.abs(tp - np.eye(2)))))
    return worst_ev >= -1e-10 and worst_tp < 1e-12, f"min Choi eigenvalue {worst_ev:.2e}; TP error {worst_tp:.2e}"


@check("nmr.witness_lower_bound")
def _():
    rng = np.random.default_rng(SEED)
    values = [nmr.witness_value(_random_density(rng, 4, rank=r)) for r in (1, 2, 16) for _ in range(20)]
    ghz = nmr.ghz_density().matrix
    for p in (0.5, 0.9, 0.99, 0.999):
        values += [nmr.witness_value(p * ghz + (1 - p) * _random_density(rng, 4).matrix) for _ in range(10)]
    at_ghz = nmr.witness_value(nmr.ghz_density())
    mixed = 0.9 * nmr.ghz_density().matrix + 0.1 * np.eye(16) / 16
    ok = min(values) >= -0.5 - 1e-12 and abs(at_ghz + 0.5) < 1e-12 and nmr.witness_value(mixed) > -0.5
    return ok, f"min over 100 states {min(values):.4f}; GHZ {at_ghz:.12f}"


@check("nmr.metric_scaling")
def _():
    rng = np.random.default_rng(SEED)
    a, b = _random_density(rng, 4).matrix, _random_density(rng, 4).matrix
    ident = nmr.ghz_density().matrix
    lin = abs(
        nmr.correlation_attenuated(ident, 0.3 * a + 0.7 * b)
        - 0.3 * nmr.correlation_attenuated(ident, a)
        - 0.7 * nmr.correlation_attenuated(ident, b)
    )
    inv = max(abs(nmr.fidelity_normalized(ident, s * a) - nmr.fidelity_normalized(ident, a)) for s in (0.1, 0.73, 3.0))
    return lin < 1e-12 and inv < 1e-12, f"linearity error {lin:.2e}; scale invariance error {inv:.2e}"


@check("nmr.free_evolution_commutes_with_gradient")
def _():
    spec = nmr.crotonic_acid()
    rho = _random_density(np.random.default_rng(SEED), 4)
    ab = nmr.gradient_pulse(nmr.free_evolution(rho, spec, 0.0123), spec, 0.77).rho.matrix
    ba = nmr.free_evolution(nmr.gradient_pulse(rho, spec, 0.77), spec, 0.0123).rho.matrix
    d = float(np.max(np.abs(ab - ba)))
    return d < 1e-14, f"max difference {d:.2e}"


@check("nmr.ghz_pipeline")
def _():
    spec = nmr.MoleculeSpec.uncoupled(4)
    ghz = nmr.prepare_ghz(spec)
    f1 = qcore.fidelity(ghz.rho, nmr.GHZ)
    crushed = float(np.max(np.abs(nmr.gradient_crusher(ghz, spec).rho.matrix - ghz.rho.matrix)))
    f2 = qcore.fidelity(nmr.ghz_to_graph(ghz).rho, mbqc.expected_graph_state())
    ok = abs(f1 - 1) < 1e-10 and abs(f2 - 1) < 1e-10 and crushed < 1e-10
    return ok, f"GHZ fidelity {f1:.12f}; graph fidelity {f2:.12f}; crusher change {crushed:.1e}"


@check("nmr.tomography_roundtrip")
def _():
    rho = _random_density(np.random.default_rng(SEED), 4)
    d = float(np.max(np.abs(nmr.tomography_reconstruct(rho).matrix - rho.matrix)))
    return d < 1e-10, f"max error {d:.2e}"


@check("nmr.spectrum_sign_readout")
def _():
    spec = nmr.crotonic_acid()
    ok = True
    for f in mbqc.ORACLES:
        res = nmr.run_dj_ensemble(f, spec)
        data = nmr.synthesize_spectrum(res.state, spec, 4, 4.0, 16384)
        heights = [h for _, h in nmr.resolved_lines(data)]
        want = 1 if res.verdict == "constant" else -1
        ok &= bool(heights) and all(np.sign(h) == want for h in heights)
    return bool(ok), "constant -> positive lines, balanced -> negative lines"


# -- cli ---------------------------------------------------------------------


@check("cli.reproducible_reports")
def _():
    from .cli import RunConfig, run_command

    cfg = RunConfig(mode="tomography", noise=0.01, seed=7)
    a, b = run_command(cfg), run_command(cfg)
    return a.render() == b.render() and a.artifacts == b.artifacts, "same config and seed -> identical bytes"


def run_all(skip: tuple[str, ...] = ()) -> list[CheckResult]:
    out = []
    for name, fn in _REGISTRY:
        if name in skip:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, name.split(".")[0], bool(passed), detail, time.perf_counter() - t0))
    return out


def exit_code(results: list[CheckResult]) -> int:
    for r in results:
        if not r.passed:
            return EXIT_CODES[r.group]
    return 0


def names() -> list[str]:
    return [n for n, _ in _REGISTRY]
