"""Deformed Wigner ensembles with a finitely-atomic external source.

Solves the self-consistent equation for the limiting spectral measure of
W = M/sqrt(n) + D, extracts densities, supports, quantiles and bulk index
sets, simulates the matrix ensembles, and runs empirical checks of the
local spectral laws (counting concentration, eigenvector delocalization,
gap bounds, and moment-matching universality of rescaled statistics).
"""

from ._kernels import HAVE_NUMBA
from .bk import BkParameters, bk_branch, bk_density, bk_support, sine_correlation, sine_kernel
from .ensemble import (
    BackendError,
    EnsembleSpec,
    SpectralSample,
    assemble,
    eigendecompose,
    principal_minor,
    sample_spectra,
    sample_spectrum,
    sample_wigner,
)
from .measure import (
    AtomicMeasure,
    DiagonalRealization,
    EntryDistribution,
    make_measure,
    match_order,
    moments,
    parse_atoms,
    realize_diagonal,
    stieltjes_of_atoms,
)
from .stats import (
    RescaledCloud,
    StatsReport,
    TestRecord,
    concentration_report,
    correlation_statistic,
    count_interval,
    delocalization_stats,
    empirical_stieltjes,
    gap_stats,
    interlacing_check,
    pastur_residual,
    rescale_at,
    two_sample_distance,
)
from .stieltjes import (
    BulkIndexSet,
    ConvergenceError,
    DensityProfile,
    StieltjesSolution,
    SupportProfile,
    bulk_indices,
    density,
    semicircle_st,
    solve_pastur,
    solve_pastur_grid,
    solve_pastur_poly,
    support_intervals,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BackendError",
    "BkParameters",
    "BulkIndexSet",
    "ConvergenceError",
    "DensityProfile",
    "DiagonalRealization",
    "EnsembleSpec",
    "EntryDistribution",
    "HAVE_NUMBA",
    "RescaledCloud",
    "SpectralSample",
    "StatsReport",
    "StieltjesSolution",
    "SupportProfile",
    "TestRecord",
    "assemble",
    "bk_branch",
    "bk_density",
    "bk_support",
    "bulk_indices",
    "concentration_report",
    "correlation_statistic",
    "count_interval",
    "delocalization_stats",
    "density",
    "eigendecompose",
    "empirical_stieltjes",
    "gap_stats",
    "interlacing_check",
    "make_measure",
    "match_order",
    "moments",
    "parse_atoms",
    "pastur_residual",
    "principal_minor",
    "realize_diagonal",
    "rescale_at",
    "sample_spectra",
    "sample_spectrum",
    "sample_wigner",
    "semicircle_st",
    "sine_correlation",
    "sine_kernel",
    "solve_pastur",
    "solve_pastur_grid",
    "solve_pastur_poly",
    "stieltjes_of_atoms",
    "support_intervals",
    "two_sample_distance",
]
