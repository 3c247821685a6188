"""Hermitian operator Schmidt decompositions and twin observables of bipartite states."""

from .bell import (
    BellMixture,
    MixtureKind,
    bell_diagonal_schmidt,
    bell_state,
    bell_twin_partner,
    classify_mixture,
    mds_normal_form,
    mixture_twins,
    state_from_t,
    sweep,
    t_to_weights,
    weights_to_t,
)
from .errors import (
    DimensionError,
    InputError,
    InvariantError,
    NotAStateError,
    NotATwinError,
    NotPerfectlyCorrelatedError,
    NumericalError,
    PreconditionError,
    StrengthError,
    TwinObsError,
)
from .info import (
    classical_mutual_info,
    joint_distribution,
    lindblad_check,
    perfect_correlation,
    quantum_mutual_info,
    vn_entropy,
)
from .linalg import BipartiteState, eigh, nullspace_real, partial_trace, svd, tensor
from .schmidt import (
    AntilinearMap,
    SchmidtDecomp,
    SchmidtTerm,
    adjoint_involution,
    hermitian_osd,
    hs_inner,
    invariant_basis,
    osd,
    realign,
    weak_twin_osd,
)
from .twins import (
    SeparableDecomp,
    Strength,
    TwinPair,
    biortho_groups,
    classify_twin,
    pure_schmidt,
    pure_twin_partner,
    spectral_pairing,
    strong_twin_mixture,
    termwise_twin_check,
    twin_space,
    verify_twin,
)

__version__ = "0.1.0"
