"""Empty simplices of random point sets: degrees, clustered-subset counts,
covariograms and the Monte Carlo experiments that connect them."""
from ._backend import BACKEND
from .bodies import (
    Ball,
    Box,
    ConvexBody,
    Ellipsoid,
    HPolytope,
    SamplingError,
    Seed,
    body_volume,
    grid_cell_counts,
    membership,
    parse_body,
    sample_uniform,
    shadow_area,
    volume,
)
from .covariogram import (
    covariogram,
    covariogram_box_exact,
    covariogram_disc_exact,
    covariogram_exact,
    covariogram_mc,
    directional_variation,
    perimeter_via_covariogram,
    right_derivative_at_zero,
)
from .degree import (
    DegreeReport,
    ExactCapExceeded,
    SubsetDegree,
    count_empty_simplices,
    degree_at_most,
    degree_lower_bound_local,
    degree_of_set_exact,
    degree_of_subset,
    is_empty_simplex,
)
from .experiments import EXPERIMENTS, ExperimentConfig, ResultRow, run_experiment, write_csv
from .functionals import clustered_subsets, f_t_k, n_t
from .geometry import (
    DegenerateSimplexError,
    PointSet,
    contains_strictly,
    general_position,
    orientation,
    simplex_volume,
)

__version__ = "0.1.0"
