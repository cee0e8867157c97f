"""Persistence rank functions of spatial point patterns.

Pipeline: point patterns -> ball filtrations on the Delaunay complex ->
persistence diagrams -> grid-discretized rank functions in a weighted
Hilbert space -> functional PCA and a Monte-Carlo test of complete
spatial randomness.
"""

from .errors import (
    ConditioningTimeout,
    ConfigError,
    DegenerateInput,
    DuplicatePoints,
    EmptyInput,
    GridMismatch,
    RankfieldError,
    TooFewFunctions,
    TooLarge,
)
from .geometry import (
    FilteredComplex,
    PointPattern,
    alpha_filtration,
    cech_oracle,
    delaunay,
    minimum_enclosing_ball,
    read_points,
    unit_window,
)
from .persistence import PersistenceDiagram, compute_persistence, read_diagram
from .rankspace import (
    DEFAULT_GRID_2D,
    DEFAULT_GRID_3D,
    Grid,
    RankFunction,
    WeightFunction,
    distance,
    inner_product,
    mean,
    monotonicity_defect,
    rank_from_diagram,
    read_rank,
)
from .fpca import PCAModel, fit, jacobi_eigh, load_pca_model, project, save_pca_model
from .pointproc import (
    ProcessSpec,
    derive_seed,
    gen_baddeley_silverman,
    gen_binomial,
    gen_matern,
    gen_poisson,
    gen_strauss,
    sample,
)
from .csr import (
    CSRModel,
    PowerTable,
    TestResult,
    fit_csr,
    load_csr_model,
    pattern_diagram,
    power_study,
    save_csr_model,
    test_pattern,
    test_rank_function,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningTimeout", "ConfigError", "DegenerateInput", "DuplicatePoints",
    "EmptyInput", "GridMismatch", "RankfieldError", "TooFewFunctions", "TooLarge",
    "FilteredComplex", "PointPattern", "alpha_filtration", "cech_oracle", "delaunay",
    "minimum_enclosing_ball", "read_points", "unit_window",
    "PersistenceDiagram", "compute_persistence", "read_diagram",
    "DEFAULT_GRID_2D", "DEFAULT_GRID_3D", "Grid", "RankFunction", "WeightFunction",
    "distance", "inner_product", "mean", "monotonicity_defect", "rank_from_diagram",
    "read_rank",
    "PCAModel", "fit", "jacobi_eigh", "load_pca_model", "project", "save_pca_model",
    "ProcessSpec", "derive_seed", "gen_baddeley_silverman", "gen_binomial",
    "gen_matern", "gen_poisson", "gen_strauss", "sample",
    "CSRModel", "PowerTable", "TestResult", "fit_csr", "load_csr_model",
    "pattern_diagram", "power_study", "save_csr_model", "test_pattern",
    "test_rank_function",
]
