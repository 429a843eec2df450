"""Random convex lattice polygonal lines: measures, sampling, exact
enumeration, and numerical verification of their limit behaviour."""

from .errors import (
    BudgetExhaustedError,
    CapExceededError,
    ConvexlinesError,
    DomainError,
    EncodingError,
    InvalidArgumentError,
    ParseError,
    ResourceError,
)
from .lattice import Direction, coprime_directions, mobius_sieve, slope_compare
from .geometry import (
    PlanarPolyline,
    PolygonalLine,
    from_multiplicities,
    hausdorff_distance,
    lattice_point_count,
    limit_shape,
    scaled_profile,
    tangential_distance,
    tangential_distance_to_limit,
)
from .measure import (
    KAPPA,
    GCParams,
    calibrate,
    covariance,
    covariance_asymptotic,
    expected_endpoint,
    gaussian_density,
    log_partition,
    select_window,
)
from .enumerator import (
    build_weight_table,
    conditioned_point_mean,
    count_lines,
    dump_weight_table,
    enumerate_lines,
    exact_conditional,
    exact_endpoint_prob,
    load_weight_table,
    sample_exact_conditioned,
    tv_distance,
)
from .sampler import (
    RngStream,
    SampleBatch,
    SampleMeta,
    expected_tries_asymptotic,
    sample_conditioned,
    sample_conditioned_batch,
    sample_conditioned_dp,
    sample_conditioned_miscalibrated,
    sample_conditioned_mixture,
    sample_free,
    sample_free_endpoints,
)
from .formats import read_samples, render_svg, sample_record, write_samples, write_svg
from .verify import Report, ReportRow, default_config, run_check

__version__ = "0.1.0"

__all__ = [
    "BudgetExhaustedError",
    "CapExceededError",
    "ConvexlinesError",
    "Direction",
    "DomainError",
    "EncodingError",
    "GCParams",
    "InvalidArgumentError",
    "KAPPA",
    "ParseError",
    "PlanarPolyline",
    "PolygonalLine",
    "Report",
    "ReportRow",
    "ResourceError",
    "RngStream",
    "SampleBatch",
    "SampleMeta",
    "build_weight_table",
    "calibrate",
    "conditioned_point_mean",
    "coprime_directions",
    "count_lines",
    "covariance",
    "covariance_asymptotic",
    "default_config",
    "dump_weight_table",
    "enumerate_lines",
    "exact_conditional",
    "exact_endpoint_prob",
    "expected_endpoint",
    "expected_tries_asymptotic",
    "from_multiplicities",
    "gaussian_density",
    "hausdorff_distance",
    "lattice_point_count",
    "limit_shape",
    "load_weight_table",
    "log_partition",
    "mobius_sieve",
    "read_samples",
    "render_svg",
    "run_check",
    "sample_conditioned",
    "sample_conditioned_batch",
    "sample_conditioned_dp",
    "sample_conditioned_miscalibrated",
    "sample_conditioned_mixture",
    "sample_exact_conditioned",
    "sample_free",
    "sample_free_endpoints",
    "sample_record",
    "scaled_profile",
    "select_window",
    "slope_compare",
    "tangential_distance",
    "tangential_distance_to_limit",
    "tv_distance",
    "write_samples",
    "write_svg",
]
