"""Moment-estimator extreme value index and extreme quantile estimation, with
elliptical extreme quantile regions and a Monte Carlo laboratory."""

__version__ = "0.1.0"

from .errors import MomentEvtError  # noqa: E402
from .linalg import (  # noqa: E402
    SpdMatrix,
    det_normalize,
    determinant,
    jacobi_eigen,
    mahalanobis_norm,
    operator_norm,
    spd_inverse,
    spd_sqrt,
)
from .models import (  # noqa: E402
    conditional_tail_sample,
    elliptical_sample,
    model_bounded,
    model_exponential,
    model_frechet,
    model_pareto,
    sample,
    second_order_oracle,
    sphere_sample,
)
from .regions import (  # noqa: E402
    EllipticalModel,
    LocationScatter,
    QuantileRegion,
    affine_transform_region,
    estimate_location_scatter,
    estimate_region,
    max_region,
    region_contains,
    residuals,
    sym_diff_probability,
    true_region,
)
from .univariate import (  # noqa: E402
    OrderedSample,
    QuantileQuery,
    TailEstimates,
    check_decay_conditions,
    extreme_quantile,
    log_moments,
    moment_estimates,
    order_sample,
    q_gamma,
    q_gamma_asymptotic,
)
