"""Solvers and estimate checks for singular elliptic problems with measure data.

The package discretizes ``-div(A grad u) = f / u^gamma + mu`` (and its
Leray-Lions analogue) on structured grids, solves the regularized problems
along a sequence of regularization indices and checks the a-priori
estimates satisfied by the solutions.
"""

from .grid import Grid, boundary_band, build_grid, compact_subset
from .measure import (
    Density,
    RadonMeasure,
    ScalarField,
    apply_truncations,
    lebesgue_norm,
    marcinkiewicz_quasinorm,
    mollify,
    read_measure_file,
    truncate_datum,
)
from .operators import (
    DiscreteOperator,
    LerayLionsOperator,
    LerayLionsSpec,
    MatrixField,
    apply_leray_lions,
    assemble_leray_lions,
    assemble_linear,
    fundamental_exponent,
)
from .solver import (
    ProblemSpec,
    SolutionSequence,
    SolveParams,
    SolverError,
    solve_approximating,
    solve_linear,
    solve_measure_only,
    solve_p_laplacian_approximating,
    solve_p_laplacian_sequence,
    solve_pure_singular,
    solve_sequence,
    sub_supersolution_iterate,
)
from .analysis import (
    EstimateReport,
    RegularityVerdict,
    boundary_layer,
    comparison_report,
    hopf_lax_check,
    hopf_lax_transform,
    predicted_exponent,
    regularity_classify,
    sobolev_seminorm,
    truncation_energy_scan,
    truncation_residual_mass,
    truncation_residual_scan,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "boundary_band",
    "build_grid",
    "compact_subset",
    "Density",
    "RadonMeasure",
    "ScalarField",
    "apply_truncations",
    "lebesgue_norm",
    "marcinkiewicz_quasinorm",
    "mollify",
    "read_measure_file",
    "truncate_datum",
    "DiscreteOperator",
    "LerayLionsOperator",
    "LerayLionsSpec",
    "MatrixField",
    "apply_leray_lions",
    "assemble_leray_lions",
    "assemble_linear",
    "fundamental_exponent",
    "ProblemSpec",
    "SolutionSequence",
    "SolveParams",
    "SolverError",
    "solve_approximating",
    "solve_linear",
    "solve_measure_only",
    "solve_p_laplacian_approximating",
    "solve_p_laplacian_sequence",
    "solve_pure_singular",
    "solve_sequence",
    "sub_supersolution_iterate",
    "EstimateReport",
    "RegularityVerdict",
    "boundary_layer",
    "comparison_report",
    "hopf_lax_check",
    "hopf_lax_transform",
    "predicted_exponent",
    "regularity_classify",
    "sobolev_seminorm",
    "truncation_energy_scan",
    "truncation_residual_mass",
    "truncation_residual_scan",
]
