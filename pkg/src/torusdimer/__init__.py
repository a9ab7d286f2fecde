"""Exact dimer statistics on toric quotients of periodic planar graphs."""

from .lattice import (
    Edge,
    FundamentalDomain,
    OrientationReport,
    DomainError,
    OrientationError,
    builtin,
    BUILTIN_NAMES,
    hnf_residues,
    verify_orientation,
    orient,
    double_domain,
    sublattice_domain,
    DOUBLE_MODES,
)
from .kasteleyn import (
    QuotientError,
    build_KE,
    pfaffian,
    pfaffian_log,
    sector_table,
    SectorTable,
    enumerate_matchings,
    winding_distribution_exact,
    double_product,
    fiber_points,
)
from .laurent import LaurentPoly2, DegreeBoundError
from .specialfn import theta, eta, log_abs_eta, xi, log_xi, xi_rs, reduce_tau, g_tau, discrete_gaussian
from .charpoly import (
    CharPoly,
    CharPolyError,
    CriticalityReport,
    NodeReport,
    build_charpoly,
    free_energy,
    ronkin,
    find_nodes,
    root_counts,
    tau_of_hessian,
    ronkin_gradient_prediction,
    CLASS_NON_VANISHING,
    CLASS_SINGLE_REAL,
    CLASS_TWO_REAL,
    CLASS_CONJUGATE,
    CLASS_REAL_ROOT_Q,
)
from .fsc import (
    FscError,
    FscResult,
    WindingLaw,
    ConformalData,
    fsc1,
    fsc1_sector,
    fsc2,
    fsc2_sector,
    fsc2_gaussian,
    fsc3,
    conformal_data,
    predict,
    predict_logZ,
    predict_sector_table,
    sector_table_auto,
    normalized_node_data,
    winding_law,
    winding_distribution_gaussian,
    square_fsc,
    square_tau,
    square_curve_values,
    square_quotient,
    SQUARE_F0,
    kappa,
    ising_weights,
    ising_critical_check,
    ising_log_Z_from_dimers,
    ising_log_Z_transfer,
)

__version__ = "0.1.0"
