"""Perturbation bounds for symmetric matrices and blockmodel spectral clustering."""
from .errors import *  # noqa: F401,F403
from .linalg import (
    EigenSystem,
    OrthonormalBasis,
    PrincipalAngles,
    SymMatrix,
    align_basis,
    principal_angles,
    quad_form,
    rank_k_reconstruct,
    read_matrix,
    span_h,
    spectral_norm,
    sym_eigen,
    sym_eigvals,
    write_matrix,
)

__version__ = "0.1.0"
