"""Elliptical extreme quantile regions.

A region is the closed complement of an ellipsoid,
``{x : ||x - center||_shape >= radius}`` with ``||u||_A = sqrt(u^T A^{-1} u)``
and ``det(shape) = 1``. The estimator plugs location/scatter estimates into the
Mahalanobis residuals and extrapolates their tail with the moment-based
quantile estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DeterminantNotOne,
    DimensionMismatch,
    InvalidArgument,
    InvalidP,
    NotPositiveDefinite,
    SingularCovariance,
    SingularTransform,
    TooFewObservations,
)
from .linalg import (
    SpdMatrix,
    as_spd,
    det_normalize,
    determinant,
    mahalanobis_norm,
    operator_norm,
    spd_inverse,
    spd_sqrt,
)
from .models import ENDPOINT_MASS, TailModel, conditional_tail_sample, sphere_sample
from .univariate import QuantileQuery, extreme_quantile, order_sample

__all__ = [
    "LocationScatter",
    "QuantileRegion",
    "EllipticalModel",
    "SymDiffEstimate",
    "estimate_location_scatter",
    "residuals",
    "estimate_region",
    "max_region",
    "true_region",
    "region_contains",
    "affine_transform_region",
    "sym_diff_probability",
]

DET_TOL = 1e-8


def _unit_det(shape: SpdMatrix, what: str) -> SpdMatrix:
    det = determinant(shape)
    if abs(det - 1.0) > DET_TOL:
        raise DeterminantNotOne(f"{what} must have unit determinant, got {det!r}")
    return shape


@dataclass(frozen=True)
class LocationScatter:
    mu_hat: NDArray[np.float64]
    sigma_hat: SpdMatrix

    def __post_init__(self):
        object.__setattr__(self, "mu_hat", np.asarray(self.mu_hat, dtype=np.float64))
        object.__setattr__(self, "sigma_hat", _unit_det(as_spd(self.sigma_hat), "sigma_hat"))
        if self.mu_hat.shape != (self.sigma_hat.dim,):
            raise DimensionMismatch("location and scatter dimensions disagree")

    @property
    def dim(self) -> int:
        return self.sigma_hat.dim


@dataclass(frozen=True)
class QuantileRegion:
    """``{x : ||x - center||_shape >= radius}``."""

    center: NDArray[np.float64]
    shape: SpdMatrix
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "shape", _unit_det(as_spd(self.shape), "region shape"))
        object.__setattr__(self, "radius", float(self.radius))
        if self.center.shape != (self.shape.dim,):
            raise DimensionMismatch("center and shape dimensions disagree")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidArgument(f"radius must be positive and finite, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.shape.dim


@dataclass(frozen=True)
class EllipticalModel:
    """``X = mu + R Sigma^{1/2} S`` with ``det(Sigma) = 1``."""

    mu: NDArray[np.float64]
    sigma: SpdMatrix
    generator: TailModel

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma", _unit_det(as_spd(self.sigma), "sigma"))
        if self.mu.shape != (self.sigma.dim,):
            raise DimensionMismatch("mu and sigma dimensions disagree")

    @property
    def dim(self) -> int:
        return self.sigma.dim


def _data(data: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"data must be an (n, d) array, got shape {x.shape}")
    return x


def estimate_location_scatter(data: ArrayLike) -> LocationScatter:
    """Sample mean and determinant-normalized sample covariance (``n - 1`` divisor)."""
    x = _data(data)
    n, d = x.shape
    if n <= d:
        raise TooFewObservations(f"need n > d, got n={n}, d={d}")
    mu = x.mean(axis=0)
    centered = x - mu
    cov = centered.T @ centered / (n - 1)
    try:
        sigma = det_normalize(SpdMatrix(0.5 * (cov + cov.T)))
    except NotPositiveDefinite as exc:
        raise SingularCovariance(str(exc)) from None
    return LocationScatter(mu, sigma)


ScatterEstimator = Callable[[NDArray[np.float64]], LocationScatter]


def residuals(data: ArrayLike, ls: LocationScatter) -> NDArray[np.float64]:
    """Mahalanobis residuals ``||X_i - mu_hat||_{sigma_hat}``."""
    x = _data(data)
    if x.shape[1] != ls.dim:
        raise DimensionMismatch(f"data has dimension {x.shape[1]}, estimates have {ls.dim}")
    return mahalanobis_norm(x, ls.mu_hat, ls.sigma_hat)


def estimate_region(
    data: ArrayLike,
    k: int,
    p: float,
    estimator: ScatterEstimator = estimate_location_scatter,
) -> QuantileRegion:
    """Extreme quantile region estimate from data, tail count ``k`` and probability ``p``.

    ``estimator`` is the location/scatter procedure; any affine equivariant,
    root-n consistent estimator returning a :class:`LocationScatter` fits.
    """
    x = _data(data)
    ls = estimator(x)
    r_hat = order_sample(residuals(x, ls))
    radius = extreme_quantile(r_hat, QuantileQuery(k=k, p=p, n=r_hat.n))
    return QuantileRegion(ls.mu_hat, ls.sigma_hat, radius)


def max_region(
    data: ArrayLike, estimator: ScatterEstimator = estimate_location_scatter
) -> QuantileRegion:
    """Region whose radius is the largest residual; intended for ``gamma <= -1/2``."""
    x = _data(data)
    ls = estimator(x)
    return QuantileRegion(ls.mu_hat, ls.sigma_hat, float(np.max(residuals(x, ls))))


def true_region(model: EllipticalModel, p: float) -> QuantileRegion:
    """The exact region ``{||x - mu||_Sigma >= U_R(1/p)}``.

    Only valid where the generator density is decreasing beyond the radius,
    i.e. ``p <= generator.region_p_max``.
    """
    if not (0.0 < p <= model.generator.region_p_max) or p >= 1.0:
        raise InvalidP(
            f"p={p} outside (0, {model.generator.region_p_max:.4g}] for {model.generator!r}"
        )
    return QuantileRegion(model.mu, model.sigma, float(model.generator.quantile(1.0 / p)))


def region_contains(region: QuantileRegion, x: ArrayLike):
    """Membership in the closed region; vectorized over rows of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (region.dim,):
        raise DimensionMismatch(f"point dimension {x.shape[-1:]} vs region dimension {region.dim}")
    norms = mahalanobis_norm(x, region.center, region.shape)
    return bool(norms >= region.radius) if x.ndim == 1 else norms >= region.radius


def affine_transform_region(region: QuantileRegion, a: ArrayLike, b: ArrayLike) -> QuantileRegion:
    """Image ``{A x + b : x in region}``, re-expressed with a unit-determinant shape."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = region.dim
    if a.shape != (d, d) or b.shape != (d,):
        raise DimensionMismatch(f"transform shapes {a.shape}, {b.shape} do not match dimension {d}")
    mapped = a @ region.shape.values @ a.T
    try:
        mapped = SpdMatrix(0.5 * (mapped + mapped.T))
    except NotPositiveDefinite:
        raise SingularTransform("transform matrix is singular") from None
    # ||u||_{M / c} = sqrt(c) ||u||_M with c = det(M)^(1/d)
    log_c = float(np.mean(np.log(mapped.eigen.eigenvalues)))
    return QuantileRegion(
        a @ region.center + b, det_normalize(mapped), region.radius * math.exp(0.5 * log_c)
    )


@dataclass(frozen=True)
class SymDiffEstimate:
    probability: float
    std_error: float
    threshold: float
    threshold_mass: float


def _min_true_radius(region: QuantileRegion, model: EllipticalModel) -> float:
    """Lower bound on ``||x - mu||_Sigma`` over the region.

    For x in the region, ``radius <= ||x - c||_S <= lam ||x - c||_Sigma`` with
    ``lam = ||S^{-1/2} Sigma^{1/2}||``, and the triangle inequality moves the
    centre to ``mu``.
    """
    link = spd_inverse(spd_sqrt(region.shape)).values @ spd_sqrt(model.sigma).values
    lam = operator_norm(link)
    offset = mahalanobis_norm(region.center, model.mu, model.sigma)
    return region.radius / lam - offset


def sym_diff_probability(
    region_a: QuantileRegion,
    region_b: QuantileRegion,
    truth: EllipticalModel,
    n_mc: int,
    rng: np.random.Generator,
) -> SymDiffEstimate:
    """Estimate ``P(X in A symmetric-difference B)`` under the true elliptical law.

    Conditional Monte Carlo on the generating variate: both regions lie inside
    ``{R >= r0}`` where ``r0`` is the smaller of their guaranteed minimum true
    radii, so sampling ``R | R > r0`` and reweighting by ``P(R > r0)`` is
    unbiased while concentrating draws where the regions live.
    """
    if n_mc < 1000:
        raise InvalidArgument(f"n_mc must be at least 1000, got {n_mc}")
    if region_a.dim != truth.dim or region_b.dim != truth.dim:
        raise DimensionMismatch("regions and model dimensions disagree")
    gen = truth.generator
    r0 = min(_min_true_radius(region_a, truth), _min_true_radius(region_b, truth))
    r0 = max(r0, gen.support_min)
    mass = float(gen.survival(r0))
    if mass <= ENDPOINT_MASS:
        # both regions sit beyond (numerically) all of the generator's mass
        return SymDiffEstimate(0.0, 0.0, r0, 0.0)
    radii = conditional_tail_sample(gen, r0, n_mc, rng)
    directions = sphere_sample(truth.dim, n_mc, rng)
    x = truth.mu + (radii[:, None] * directions) @ spd_sqrt(truth.sigma).values
    xor = region_contains(region_a, x) ^ region_contains(region_b, x)
    frac = float(np.mean(xor))
    return SymDiffEstimate(
        probability=mass * frac,
        std_error=mass * math.sqrt(frac * (1.0 - frac) / n_mc),
        threshold=r0,
        threshold_mass=mass,
    )

