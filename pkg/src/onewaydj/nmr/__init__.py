"""NMR-ensemble realisation of the one-way Deutsch-Jozsa experiment."""

from .dynamics import (
    GHZ,
    GHZ_CAPTION,
    GHZ_TEXT,
    PREPARATION_TIME,
    PULSE_TIME,
    PZ_SEQUENCES,
    EnsembleDJResult,
    EnsembleState,
    as_ensemble,
    canonical_cnot,
    cnot_decomposed,
    cnot_factors,
    conditional_feed_forward,
    echo_weights,
    energies,
    feed_forward_unitary,
    free_evolution,
    gate_durations,
    ghz_density,
    ghz_network,
    ghz_to_graph,
    ghz_vector,
    gradient_average,
    gradient_crusher,
    gradient_pulse,
    graph_rotations,
    measurement_prerotation,
    mimic_measurement,
    prepare_ghz,
    pseudo_hadamard,
    pseudopure_init,
    pz_sequence,
    relaxation_channel,
    relaxation_choi,
    resolve_ghz,
    run_dj_ensemble,
    zz_gate,
)
from .metrics import correlation_attenuated, fidelity_normalized, witness_operator, witness_value
from .molecule import (
    MoleculeSpec,
    MoleculeSpecError,
    crotonic_acid,
    crotonic_acid_path,
    load_molecule_spec,
    parse_molecule_spec,
)
from .spectrum import (
    SpectrumData,
    multiplet,
    reference_state,
    metadata_text,
    resolved_lines,
    spectrum_text,
    synthesize_spectrum,
    write_spectrum,
)
from .tomography import pauli_expectations, reconstruct, tomography_reconstruct


def ghz_correlation(spec: MoleculeSpec, time_budget: float, polarization: float = 1.0) -> float:
    """Attenuated correlation of the prepared (and crushed) GHZ state with the ideal one."""
    state = gradient_crusher(prepare_ghz(spec, polarization, time_budget), spec)
    return correlation_attenuated(ghz_density(), state)
