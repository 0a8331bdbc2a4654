"""Ulam networks of the dissipative kicked typical map and their Google-matrix analysis."""

__version__ = "0.1.0"

from .typical_map import (
    MapState,
    PhaseSet,
    LyapunovResult,
    BifurcationSample,
    BifurcationWindow,
    step,
    iterate_period,
    phase_set_t10,
    phase_set_t20,
    lyapunov_entropy,
    ks_entropy_theory,
    dimension_estimate,
    bifurcation_scan,
    save_phase_set,
    load_phase_set,
)
from .ulam_net import (
    CellGrid,
    UlamMatrix,
    LinkStats,
    PowerLawFit,
    build_ulam_matrix,
    normalize_adjacency,
    link_stats,
    fit_power_law,
    cell_of,
    cell_center,
    export_matrix,
    import_matrix,
)
from .rank import (
    GoogleOperator,
    RankVector,
    DecayFit,
    ScanResult,
    ScanRow,
    ContractionResult,
    pagerank,
    participation_ratio,
    fit_pagerank_decay,
    delocalization_scan,
    k_scan_xi,
    contraction_factor,
)
from .spectrum import (
    SpectrumResult,
    WeylFit,
    GapRow,
    materialize_dense,
    eigendecompose,
    decompose_google,
    spectral_density,
    slow_mode_count,
    fit_weyl,
    weyl_scan,
    gap_scan,
    eigenvector_pars,
)

__all__ = [
    "__version__",
    "MapState",
    "PhaseSet",
    "LyapunovResult",
    "BifurcationSample",
    "BifurcationWindow",
    "step",
    "iterate_period",
    "phase_set_t10",
    "phase_set_t20",
    "lyapunov_entropy",
    "ks_entropy_theory",
    "dimension_estimate",
    "bifurcation_scan",
    "save_phase_set",
    "load_phase_set",
    "CellGrid",
    "UlamMatrix",
    "LinkStats",
    "PowerLawFit",
    "build_ulam_matrix",
    "normalize_adjacency",
    "link_stats",
    "fit_power_law",
    "cell_of",
    "cell_center",
    "export_matrix",
    "import_matrix",
    "GoogleOperator",
    "RankVector",
    "DecayFit",
    "ScanResult",
    "ScanRow",
    "ContractionResult",
    "pagerank",
    "participation_ratio",
    "fit_pagerank_decay",
    "delocalization_scan",
    "k_scan_xi",
    "contraction_factor",
    "SpectrumResult",
    "WeylFit",
    "GapRow",
    "materialize_dense",
    "eigendecompose",
    "decompose_google",
    "spectral_density",
    "slow_mode_count",
    "fit_weyl",
    "weyl_scan",
    "gap_scan",
    "eigenvector_pars",
]
