"""Quasi-separability classification, finite-copy entanglement distillation
and singlet dynamics in vacuum and thermal baths, for two-qubit states."""

from .classify import FamilyClass, Verdict, classify, classify_family, reweight, separable_witness, verdict
from .dynamics import (
    BathParams,
    integrate_rk4,
    lindblad_rhs,
    published_concurrence_c1,
    published_distilled_forms,
    thermal_coeffs,
    thermal_solution,
    vacuum_solution,
)
from .errors import (
    CrossCheckError,
    DomainError,
    IntegrationQualityError,
    NotPSDError,
    ProtocolFailure,
    QsDistillError,
    ValidationError,
)
from .linalg import TOL, hermitian_eigen, sqrt_psd, tensor
from .protocol import NotTarget, Outcome, Policy, ProtocolConfig, ProtocolResult, predicted_rank2, run_protocol
from .states import (
    BellState,
    DensityMatrix,
    NonDiagonalParams,
    PureStateMixture,
    concurrence,
    fidelity_with_pure,
    from_mixture,
    nondiagonal_state,
    ppt_is_separable,
    rank2_state,
)

__version__ = "0.1.0"
