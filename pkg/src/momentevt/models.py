"""Reference tail models with closed-form quantile, CDF and extreme-value parameters.

Each model exposes its tail quantile function ``U(t) = F^{-1}(1 - 1/t)``, the
CDF and survival function, the scale function ``a(t)`` and the second-order
auxiliary ``A(t)``. Models whose tail quantile is an exact first-order
expansion carry ``rho = -inf`` and ``A = 0``.

Samplers take a :class:`numpy.random.Generator` and are deterministic given
its state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DeterminantNotOne,
    InvalidParameter,
    ThresholdAtEndpoint,
    UnknownModel,
)
from .linalg import SpdMatrix, as_spd, determinant, spd_sqrt

__all__ = [
    "TailModel",
    "Pareto",
    "Frechet",
    "Exponential",
    "Bounded",
    "SecondOrderOracle",
    "model_pareto",
    "model_frechet",
    "model_exponential",
    "model_bounded",
    "make_model",
    "MODEL_FACTORIES",
    "sample",
    "conditional_tail_sample",
    "second_order_oracle",
    "sphere_sample",
    "elliptical_sample",
    "richardson_limit",
]

U_MIN = 2.0**-53
U_MAX = 1.0 - 2.0**-53
ENDPOINT_MASS = 1e-15


def _arr(x: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(x, dtype=np.float64)


def _out(v: NDArray, like: ArrayLike):
    return float(v) if np.ndim(like) == 0 else v


class TailModel:
    """Base class for reference distributions of a positive random variable."""

    name: str
    gamma: float
    rho: float
    right_endpoint: float
    support_min: float

    @property
    def exact(self) -> bool:
        return self.rho == -math.inf

    @property
    def region_p_max(self) -> float:
        """Largest ``p`` for which the density of the model is decreasing beyond ``U(1/p)``."""
        return 1.0

    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def quantile(self, t: ArrayLike):
        """Tail quantile function ``U(t)`` for ``t > 1``."""
        raise NotImplementedError

    def cdf(self, x: ArrayLike):
        raise NotImplementedError

    def survival(self, x: ArrayLike):
        raise NotImplementedError

    def scale(self, t: ArrayLike):
        """First-order scale function ``a(t)``."""
        raise NotImplementedError

    def second_order(self, t: ArrayLike):
        """Second-order auxiliary function ``A(t)``; identically zero for exact models."""
        return _out(np.zeros_like(_arr(t)), t)

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True, repr=False)
class Pareto(TailModel):
    """Standard Pareto, ``F(x) = 1 - x^(-alpha)`` on ``[1, inf)``."""

    alpha: float

    name = "pareto"
    rho = -math.inf
    right_endpoint = math.inf
    support_min = 1.0

    def __post_init__(self):
        _positive("alpha", self.alpha)

    @property
    def gamma(self) -> float:
        return 1.0 / self.alpha

    def params(self):
        return {"alpha": self.alpha}

    def quantile(self, t):
        return _out(_arr(t) ** self.gamma, t)

    def survival(self, x):
        x = _arr(x)
        return _out(np.where(x <= 1.0, 1.0, np.maximum(x, 1.0) ** -self.alpha), x)

    def cdf(self, x):
        x = _arr(x)
        return _out(np.where(x <= 1.0, 0.0, -np.expm1(-self.alpha * np.log(np.maximum(x, 1.0)))), x)

    def scale(self, t):
        return _out(self.gamma * _arr(t) ** self.gamma, t)


def _neg_log1m(x: NDArray) -> NDArray:
    """``-ln(1 - x)`` for ``0 < x < 1``."""
    return -np.log1p(-x)


def _neg_log1m_minus_x(x: NDArray) -> NDArray:
    """``-ln(1 - x) - x``, accurate for small ``x``."""
    x = _arr(x)
    small = x < 1e-3
    xs = np.where(small, x, 0.0)
    series = np.zeros_like(xs)
    for m in range(8, 1, -1):
        series = xs**m / m + series
    direct = -np.log1p(-np.where(small, 0.5, x)) - np.where(small, 0.5, x)
    return np.where(small, series, direct)


@dataclass(frozen=True, repr=False)
class Frechet(TailModel):
    """Frechet law ``F(x) = exp(-x^(-alpha))`` on ``(0, inf)``; ``gamma = 1/alpha``, ``rho = -1``.

    ``a(t) = t U'(t)`` and ``A(t) = t U''(t)/U'(t) - gamma + 1``, both in closed form.
    """

    alpha: float

    name = "frechet"
    rho = -1.0
    right_endpoint = math.inf
    support_min = 0.0

    def __post_init__(self):
        _positive("alpha", self.alpha)

    @property
    def gamma(self) -> float:
        return 1.0 / self.alpha

    @property
    def region_p_max(self) -> float:
        # density mode sits at x = (alpha / (alpha + 1))^(1/alpha)
        return -math.expm1(-1.0 - 1.0 / self.alpha)

    def params(self):
        return {"alpha": self.alpha}

    def quantile(self, t):
        t_ = _arr(t)
        return _out(_neg_log1m(1.0 / t_) ** -self.gamma, t)

    def cdf(self, x):
        x_ = _arr(x)
        with np.errstate(divide="ignore"):
            v = np.where(x_ > 0, np.exp(-np.where(x_ > 0, x_, 1.0) ** -self.alpha), 0.0)
        return _out(v, x)

    def survival(self, x):
        x_ = _arr(x)
        v = np.where(x_ > 0, -np.expm1(-np.where(x_ > 0, x_, 1.0) ** -self.alpha), 1.0)
        return _out(v, x)

    def scale(self, t):
        t_ = _arr(t)
        log_term = _neg_log1m(1.0 / t_)
        u = log_term**-self.gamma
        return _out(self.gamma * u / (log_term * (t_ - 1.0)), t)

    def second_order(self, t):
        t_ = _arr(t)
        x = 1.0 / t_
        # w = L(t) (t - 1) with L(t) = -ln(1 - 1/t); 1 - w = 1/t - r (t - 1), r = L - 1/t
        r = _neg_log1m_minus_x(x)
        one_minus_w = x - r * (t_ - 1.0)
        w = 1.0 - one_minus_w
        return _out((self.gamma + 1.0) * one_minus_w / w - 1.0 / (t_ - 1.0), t)


@dataclass(frozen=True, repr=False)
class Exponential(TailModel):
    """Exponential law with the given rate; ``gamma = 0``, exact first order."""

    rate: float

    name = "exponential"
    gamma = 0.0
    rho = -math.inf
    right_endpoint = math.inf
    support_min = 0.0

    def __post_init__(self):
        _positive("rate", self.rate)

    def params(self):
        return {"rate": self.rate}

    def quantile(self, t):
        return _out(np.log(_arr(t)) / self.rate, t)

    def cdf(self, x):
        x_ = _arr(x)
        return _out(np.where(x_ > 0, -np.expm1(-self.rate * np.maximum(x_, 0.0)), 0.0), x)

    def survival(self, x):
        x_ = _arr(x)
        return _out(np.where(x_ > 0, np.exp(-self.rate * np.maximum(x_, 0.0)), 1.0), x)

    def scale(self, t):
        return _out(np.full_like(_arr(t), 1.0 / self.rate), t)


@dataclass(frozen=True, repr=False)
class Bounded(TailModel):
    """Short-tailed law with ``U(t) = endpoint - t^gamma`` exactly (``gamma < 0``).

    ``F(x) = 1 - (endpoint - x)^(-1/gamma)`` on ``(endpoint - 1, endpoint)``.
    """

    endpoint: float
    gamma: float

    name = "bounded"
    rho = -math.inf

    def __post_init__(self):
        if not (math.isfinite(self.endpoint) and self.endpoint > 1):
            raise InvalidParameter(f"endpoint must exceed 1, got {self.endpoint!r}")
        if not (math.isfinite(self.gamma) and self.gamma < 0):
            raise InvalidParameter(f"gamma must be negative, got {self.gamma!r}")

    @property
    def right_endpoint(self) -> float:
        return float(self.endpoint)

    @property
    def support_min(self) -> float:
        return float(self.endpoint) - 1.0

    @property
    def region_p_max(self) -> float:
        # density (-1/gamma)(endpoint - x)^(-1/gamma - 1) is decreasing iff gamma > -1
        return 1.0 if self.gamma > -1.0 else 0.0

    def params(self):
        return {"endpoint": self.endpoint, "gamma": self.gamma}

    def quantile(self, t):
        return _out(self.endpoint - _arr(t) ** self.gamma, t)

    def survival(self, x):
        gap = np.clip(self.endpoint - _arr(x), 0.0, 1.0)
        return _out(gap ** (-1.0 / self.gamma), x)

    def cdf(self, x):
        gap = np.clip(self.endpoint - _arr(x), 0.0, 1.0)
        return _out(1.0 - gap ** (-1.0 / self.gamma), x)

    def scale(self, t):
        return _out(-self.gamma * _arr(t) ** self.gamma, t)


def model_pareto(alpha: float) -> Pareto:
    return Pareto(float(alpha))


def model_frechet(alpha: float) -> Frechet:
    return Frechet(float(alpha))


def model_exponential(rate: float) -> Exponential:
    return Exponential(float(rate))


def model_bounded(endpoint: float, gamma: float) -> Bounded:
    return Bounded(float(endpoint), float(gamma))


MODEL_FACTORIES: dict[str, Callable[..., TailModel]] = {
    "pareto": model_pareto,
    "frechet": model_frechet,
    "exponential": model_exponential,
    "bounded": model_bounded,
}


def make_model(name: str, **params: float) -> TailModel:
    try:
        factory = MODEL_FACTORIES[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; choose from {sorted(MODEL_FACTORIES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise InvalidParameter(f"bad parameters for {name}: {exc}") from None


# -- sampling -----------------------------------------------------------------


def sample(model: TailModel, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Inverse-transform draws ``U(1/(1-u))`` with ``u`` clamped away from 0 and 1."""
    u = np.clip(rng.random(int(n)), U_MIN, U_MAX)
    return np.asarray(model.quantile(1.0 / (1.0 - u)), dtype=np.float64)


def conditional_tail_sample(
    model: TailModel, threshold: float, n: int, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Draws from the law of ``X`` given ``X > threshold``.

    Uses the quantile at level ``F(threshold) + u (1 - F(threshold))``, computed
    through the survival function so that thresholds deep in the tail keep
    full precision.
    """
    tail_mass = float(model.survival(threshold))
    if tail_mass <= ENDPOINT_MASS:
        raise ThresholdAtEndpoint(
            f"threshold {threshold} leaves tail mass {tail_mass:.3e} for {model!r}"
        )
    u = np.clip(rng.random(int(n)), U_MIN, U_MAX)
    return np.asarray(model.quantile(1.0 / ((1.0 - u) * tail_mass)), dtype=np.float64)


def sphere_sample(d: int, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``n`` points uniform on the unit sphere in ``R^d`` (normalized Gaussians)."""
    if d < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {d}")
    z = rng.standard_normal((int(n), int(d)))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def elliptical_sample(
    mu: ArrayLike,
    sigma: ArrayLike | SpdMatrix,
    generator: TailModel,
    n: int,
    rng: np.random.Generator,
    return_radii: bool = False,
):
    """Draw ``X_i = mu + R_i Sigma^{1/2} S_i``.

    The radii are drawn first, then the sphere directions, from the same
    generator. With ``return_radii`` the generating variates are returned too.
    """
    sigma = as_spd(sigma)
    mu = np.asarray(mu, dtype=np.float64)
    det = determinant(sigma)
    if abs(det - 1.0) > 1e-8:
        raise DeterminantNotOne(f"scatter matrix must have unit determinant, got {det!r}")
    if mu.shape != (sigma.dim,):
        raise InvalidParameter(f"location has shape {mu.shape}, expected ({sigma.dim},)")
    radii = sample(generator, n, rng)
    directions = sphere_sample(sigma.dim, n, rng)
    x = mu + (radii[:, None] * directions) @ spd_sqrt(sigma).values
    return (x, radii) if return_radii else x


# -- second-order oracle ------------------------------------------------------


def richardson_limit(f: Callable[[float], float], ts=tuple(10.0**e for e in range(4, 11))) -> float:
    """Extrapolate ``lim f(t)`` from a geometric grid with an Aitken delta-squared step.

    Assumes ``f(t) = l + c t^beta`` asymptotically, which makes the terms on a
    geometric grid a geometric sequence in ``l``.
    """
    v = [float(f(t)) for t in ts]
    f0, f1, f2 = v[-3:]
    d1, d2 = f1 - f0, f2 - f1
    denom = d2 - d1
    if denom == 0.0 or abs(d2) <= 1e-15 * max(1.0, abs(f2)):
        return f2
    return f2 - d2 * d2 / denom


@dataclass(frozen=True)
class SecondOrderOracle:
    """Scale ``a``, second-order auxiliary ``A``, log-scale auxiliary ``Q`` and ``rho'``."""

    a_fn: Callable
    A_fn: Callable
    Q_fn: Callable
    rho_prime: float
    case: str
    l_limit: float | None = None


def second_order_oracle(model: TailModel) -> SecondOrderOracle:
    """Select ``Q(t)`` and ``rho'`` from the case table linking the second-order
    conditions of ``U`` and ``ln U``."""
    if not isinstance(model, (Pareto, Frechet, Exponential, Bounded)):
        raise UnknownModel(f"no declared second-order data for {model!r}")
    g, r = model.gamma, model.rho
    g_plus = max(g, 0.0)
    a_fn, A_fn = model.scale, model.second_order

    def q_log_ratio(t):
        return g_plus - np.asarray(a_fn(t)) / np.asarray(model.quantile(t))

    def q_scaled_A(t):
        factor = 1.0 if r == -math.inf else r / (g + r)
        return factor * np.asarray(A_fn(t))

    if g == r or (g > 0 and r == 0):
        raise UnknownModel(f"Q is undetermined for gamma={g}, rho={r}")
    if g < r <= 0:
        return SecondOrderOracle(a_fn, A_fn, A_fn, r, "gamma<rho<=0")
    if r < g <= 0:
        return SecondOrderOracle(a_fn, A_fn, q_log_ratio, g, "rho<gamma<=0")
    # gamma > 0 from here on
    if g < -r:
        l = richardson_limit(lambda t: float(model.quantile(t)) - float(a_fn(t)) / g)
        tol = 1e-6 * max(1.0, abs(float(model.quantile(1e4)) - float(a_fn(1e4)) / g))
        if abs(l) > tol:
            return SecondOrderOracle(a_fn, A_fn, q_log_ratio, -g, "0<gamma<-rho, l!=0", l)
        return SecondOrderOracle(a_fn, A_fn, q_scaled_A, r, "0<gamma<-rho, l=0", l)
    if g == -r:
        return SecondOrderOracle(a_fn, A_fn, q_log_ratio, r, "gamma=-rho")
    return SecondOrderOracle(a_fn, A_fn, q_scaled_A, r, "gamma>-rho>0")
