"""Qudit Hadamard-test and linear-response estimators for two-time spin correlations."""

from .register import (
    LocalOperator,
    QuditState,
    RegisterShape,
    ancilla_zero_probability,
    apply_controlled,
    apply_local,
    basis_state,
    expectation,
    sample_outcomes,
    site_marginal,
)
from .observables import (
    HermitianObservable,
    OperatorString,
    StringDecomposition,
    UnitaryDecomposition,
    decompose,
    decompose_string,
    spectral_norm,
    spin_matrix,
)
from .dynamics import (
    KrylovConvergenceError,
    Propagator,
    SparseHamiltonian,
    build_perturbed,
    build_xxz,
    evolve,
    make_propagator,
)
from .hadamard import (
    CorrelatorEstimate,
    HadamardTask,
    assemble_correlator,
    measure_dynamical_correlator,
    probability_to_correlator,
    run_hadamard_circuit,
    sample_probability,
    variance_model,
)
from .linear_response import (
    LinearResponseConfig,
    effective_shots,
    measure_lr,
    normalized_expectation,
)
from .benchmark import (
    FigureOfMerit,
    QuenchScenario,
    StudyResult,
    StudyRow,
    connected_anticommutator,
    neel_superposition,
    relative_error,
    run_quench_study,
    time_averaged_std,
)

__version__ = "0.1.0"

__all__ = [
    "LocalOperator",
    "QuditState",
    "RegisterShape",
    "ancilla_zero_probability",
    "apply_controlled",
    "apply_local",
    "basis_state",
    "expectation",
    "sample_outcomes",
    "site_marginal",
    "HermitianObservable",
    "OperatorString",
    "StringDecomposition",
    "UnitaryDecomposition",
    "decompose",
    "decompose_string",
    "spectral_norm",
    "spin_matrix",
    "KrylovConvergenceError",
    "Propagator",
    "SparseHamiltonian",
    "build_perturbed",
    "build_xxz",
    "evolve",
    "make_propagator",
    "CorrelatorEstimate",
    "HadamardTask",
    "assemble_correlator",
    "measure_dynamical_correlator",
    "probability_to_correlator",
    "run_hadamard_circuit",
    "sample_probability",
    "variance_model",
    "LinearResponseConfig",
    "effective_shots",
    "measure_lr",
    "normalized_expectation",
    "FigureOfMerit",
    "QuenchScenario",
    "StudyResult",
    "StudyRow",
    "connected_anticommutator",
    "neel_superposition",
    "relative_error",
    "run_quench_study",
    "time_averaged_std",
    "__version__",
]
