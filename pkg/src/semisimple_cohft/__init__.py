"""Semi-simple cohomological field theories.

Classification data (Frobenius algebra, R-matrix ``E(z)``, nodal series),
the group action on correlator data over moduli of stable curves, and the
reconstruction of higher-genus ancestor correlators from a single
semi-simple point with Euler data.

Modules
-------
core_algebra        scalar backends, matrices, truncated power series
frobenius           Frobenius algebras, idempotent frames, catalogue
tft_closed          closed 2D TFT propagators and sewing
nodal_series        symplectic condition, nodal forms, W_E, ζ, κ-exponents
moduli_oracle       ψ/κ intersection numbers on M̄_{g,n}
correlator_engine   theories, translation, GL twist, Δ-flow, u-deformation
reconstruction      R-matrix recursion, homogeneity, reconstruction pipeline
cli                 batch command line
"""

__version__ = "0.1.0"

from .core_algebra import RATIONAL, ComplexBackend, EndSeries, BiSeries, VecSeries, backend_from_spec
from .frobenius import (
    FrobeniusAlgebra,
    SemisimpleFrame,
    idempotent_decomposition,
    rank_one,
    diagonal_algebra,
    quantum_p1,
    quantum_p2,
)
from .moduli_oracle import wk_intersection, kappa_to_psi
from .correlator_engine import (
    CorrelatorTable,
    trivial_theory,
    translate,
    gl_twist,
    exp_delta,
    build_cohft,
    u_deform,
    quantum_product,
    string_dilaton_check,
)
from .reconstruction import EulerData, HodgeTwist, solve_rmatrix, reconstruct_gw, wdvv_genus0_oracle

__all__ = [
    "__version__",
    "RATIONAL",
    "ComplexBackend",
    "EndSeries",
    "BiSeries",
    "VecSeries",
    "backend_from_spec",
    "FrobeniusAlgebra",
    "SemisimpleFrame",
    "idempotent_decomposition",
    "rank_one",
    "diagonal_algebra",
    "quantum_p1",
    "quantum_p2",
    "wk_intersection",
    "kappa_to_psi",
    "CorrelatorTable",
    "trivial_theory",
    "translate",
    "gl_twist",
    "exp_delta",
    "build_cohft",
    "u_deform",
    "quantum_product",
    "string_dilaton_check",
    "EulerData",
    "HodgeTwist",
    "solve_rmatrix",
    "reconstruct_gw",
    "wdvv_genus0_oracle",
]
