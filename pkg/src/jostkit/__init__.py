"""Jost solutions, scattering matrices, and small-energy expansions for the
selfadjoint matrix Schrodinger operator on the half line with general
selfadjoint boundary conditions."""

from .errors import JostkitError
from .star_example import kirchhoff
from .linalg import (
    BlockPartition,
    ZeroEigenData,
    adjoint,
    det,
    inverse,
    partition,
    zero_eigen_structure,
)
from .model import (
    BoundaryCondition,
    PotentialModel,
    load_document,
    load_potential,
    moment_norm,
    serialize,
    validate_boundary,
)
from .scattering import (
    big_j,
    jost_matrix,
    k_matrices_zero,
    s_grid,
    scattering_matrix,
)
from .smallk import (
    SmallKReport,
    classify,
    exceptional_expansion,
    generic_expansion,
    p_expansion_check,
    ratio_expansion,
    smallk_report,
)
from .solve import (
    SolverConfig,
    ZeroEnergyBundle,
    jost_field,
    omega1_pair,
    omega_field,
    p_matrix,
    regular_field,
    wronskian_dagger,
    zero_energy_bundle,
)
from .verify import run_suites

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "BoundaryCondition",
    "JostkitError",
    "PotentialModel",
    "SmallKReport",
    "SolverConfig",
    "ZeroEigenData",
    "ZeroEnergyBundle",
    "adjoint",
    "big_j",
    "classify",
    "det",
    "exceptional_expansion",
    "generic_expansion",
    "inverse",
    "jost_field",
    "jost_matrix",
    "k_matrices_zero",
    "kirchhoff",
    "load_document",
    "load_potential",
    "moment_norm",
    "omega1_pair",
    "omega_field",
    "p_expansion_check",
    "p_matrix",
    "partition",
    "ratio_expansion",
    "regular_field",
    "run_suites",
    "s_grid",
    "scattering_matrix",
    "serialize",
    "smallk_report",
    "validate_boundary",
    "wronskian_dagger",
    "zero_eigen_structure",
    "zero_energy_bundle",
]
