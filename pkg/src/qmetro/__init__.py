"""Interferometric power, quantum Fisher information and tangle toolkit, with
channel constructors and an NMR state-preparation simulator."""
from .qmat import DensityMatrix, PureState, ValidationError, partial_trace, tensor_product, uhlmann_fidelity
from .metrology import PhaseHamiltonian, Spectrum, ip_closed, ip_oracle, ip_oracle_qudit, m_matrix, qfi, variance
from .entanglement import convex_roof_oracle, ie_pure, ie_two_qubit, tangle_wootters
from .channels import IsotropicParams, KrausChannel, build_isotropic, choi_matrix
from .states import FamilyParams, bell, family_state, random_rank_k_hs

__all__ = [
    "DensityMatrix", "PureState", "ValidationError", "partial_trace", "tensor_product", "uhlmann_fidelity",
    "PhaseHamiltonian", "Spectrum", "ip_closed", "ip_oracle", "ip_oracle_qudit", "m_matrix", "qfi", "variance",
    "convex_roof_oracle", "ie_pure", "ie_two_qubit", "tangle_wootters",
    "IsotropicParams", "KrausChannel", "build_isotropic", "choi_matrix",
    "FamilyParams", "bell", "family_state", "random_rank_k_hs",
]
__version__ = "0.1.0"
