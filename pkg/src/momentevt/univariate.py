"""Moment estimator of the extreme value index and the matching extreme quantile estimator.

Order statistics follow the 1-indexed convention ``Y_{1,n} <= ... <= Y_{n,n}``;
public functions take the tail count ``k`` and translate internally, so the
intermediate order statistic ``Y_{n-k,n}`` is ``values[n - k - 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DegenerateTail,
    InvalidArgument,
    InvalidK,
    InvalidQuery,
    InvalidSchedule,
    NonPositiveObservation,
    TooFewObservations,
)

__all__ = [
    "OrderedSample",
    "LogMoments",
    "TailEstimates",
    "QuantileQuery",
    "DecayReport",
    "order_sample",
    "log_moments",
    "moment_estimates",
    "extreme_quantile",
    "q_gamma",
    "q_gamma_asymptotic",
    "check_decay_conditions",
]

ZERO_GAMMA = 1e-9


@dataclass(frozen=True)
class OrderedSample:
    """Strictly positive observations sorted ascending."""

    values: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def order_statistic(self, j: int) -> float:
        """``Y_{j,n}`` for 1 <= j <= n."""
        if not 1 <= j <= self.n:
            raise IndexError(f"order statistic index {j} outside 1..{self.n}")
        return float(self.values[j - 1])

    def scaled(self, c: float) -> OrderedSample:
        if not c > 0:
            raise InvalidArgument("scale factor must be positive")
        v = self.values * c
        v.setflags(write=False)
        return OrderedSample(v)


@dataclass(frozen=True)
class LogMoments:
    m1: float
    m2: float
    k: int


@dataclass(frozen=True)
class TailEstimates:
    gamma_plus: float
    gamma_minus: float
    gamma_m: float
    sigma_m: float
    k: int
    n: int
    threshold: float = field(repr=False)
    """The intermediate order statistic ``Y_{n-k,n}``."""


@dataclass(frozen=True)
class QuantileQuery:
    """Tail count ``k`` and target tail probability ``p`` for a sample of size ``n``.

    ``p = k/n`` (so ``d_n = 1``) is accepted and reproduces ``Y_{n-k,n}``.
    """

    k: int
    p: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and 1 <= self.k < self.n):
            raise InvalidQuery(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if not (0.0 < self.p < 1.0):
            raise InvalidQuery(f"p must lie in (0, 1), got {self.p}")
        if self.d_n < 1.0:
            raise InvalidQuery(f"p={self.p} exceeds k/n={self.k / self.n}")

    @property
    def d_n(self) -> float:
        return self.k / (self.n * self.p)


def order_sample(raw: ArrayLike) -> OrderedSample:
    """Sort raw observations ascending (stable) after validating positivity."""
    x = np.array(raw, dtype=np.float64).ravel()
    if x.size < 2:
        raise TooFewObservations(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise InvalidArgument(f"observation {bad} is not finite: {x[bad]!r}")
    nonpos = np.flatnonzero(x <= 0)
    if nonpos.size:
        i = int(nonpos[0])
        raise NonPositiveObservation(i, float(x[i]))
    x.sort(kind="stable")
    x.setflags(write=False)
    return OrderedSample(x)


def _as_ordered(s: OrderedSample | ArrayLike) -> OrderedSample:
    return s if isinstance(s, OrderedSample) else order_sample(s)


def _check_k(k: int, n: int) -> None:
    if not (isinstance(k, (int, np.integer)) and 1 <= k < n):
        raise InvalidK(f"need integer 1 <= k < n, got k={k!r}, n={n}")


def _log_spacings(s: OrderedSample, k: int) -> tuple[NDArray[np.float64], float]:
    n = s.n
    _check_k(k, n)
    threshold = float(s.values[n - k - 1])
    top = s.values[n - k :]
    # log1p of the relative excess stays accurate for tiny spacings
    return np.log1p((top - threshold) / threshold), threshold


def log_moments(s: OrderedSample | ArrayLike, k: int) -> LogMoments:
    """First and second mean log-excesses over ``Y_{n-k,n}`` of the top ``k`` values."""
    s = _as_ordered(s)
    spacings, _ = _log_spacings(s, k)
    return LogMoments(
        m1=float(np.mean(spacings)), m2=float(np.mean(spacings * spacings)), k=int(k)
    )


def moment_estimates(s: OrderedSample | ArrayLike, k: int) -> TailEstimates:
    """Hill part, negative part, moment estimator and scale estimate from the top ``k``.

    Raises DegenerateTail when ``M2 = 0`` or when all ``k`` log-spacings are
    equal (``M1^2 = M2``), where the negative part is undefined.
    """
    s = _as_ordered(s)
    spacings, threshold = _log_spacings(s, k)
    m1 = float(np.mean(spacings))
    m2 = float(np.mean(spacings * spacings))
    if m2 <= 0.0:
        raise DegenerateTail(f"top {k + 1} order statistics are all equal")
    denom = 1.0 - m1 * m1 / m2
    if denom <= 0.0:
        raise DegenerateTail(f"all {k} log-spacings are equal; negative part undefined")
    gamma_minus = 1.0 - 0.5 / denom
    return TailEstimates(
        gamma_plus=m1,
        gamma_minus=gamma_minus,
        gamma_m=m1 + gamma_minus,
        sigma_m=threshold * m1 * (1.0 - gamma_minus),
        k=int(k),
        n=s.n,
        threshold=threshold,
    )


def _extrapolation_factor(gamma: float, d: float) -> float:
    """``(d^gamma - 1) / gamma`` with its ``ln d`` limit near zero."""
    log_d = math.log(d)
    if abs(gamma) < ZERO_GAMMA:
        return log_d
    return math.expm1(gamma * log_d) / gamma


def extreme_quantile(
    s: OrderedSample | ArrayLike,
    q: QuantileQuery,
    estimates: TailEstimates | None = None,
) -> float:
    """Estimate the ``(1 - p)``-quantile by extrapolating from ``Y_{n-k,n}``.

    ``estimates`` may be passed to reuse a previous :func:`moment_estimates`
    call on the same sample and ``k``.
    """
    s = _as_ordered(s)
    if q.n != s.n:
        raise InvalidQuery(f"query is for n={q.n} but the sample has n={s.n}")
    est = estimates if estimates is not None else moment_estimates(s, q.k)
    if est.k != q.k or est.n != s.n:
        raise InvalidQuery("estimates were computed for a different k or n")
    if q.d_n == 1.0:
        return est.threshold
    return est.threshold + est.sigma_m * _extrapolation_factor(est.gamma_m, q.d_n)


def _q_series(x: float) -> float:
    # (x e^x - e^x + 1) / x^2 = sum_{m>=2} x^{m-2} (m-1) / m!
    total, term_fact, xm = 0.0, 2.0, 1.0
    for m in range(2, 20):
        total += xm * (m - 1) / term_fact
        xm *= x
        term_fact *= m + 1
    return total


def q_gamma(gamma: float, t: float) -> float:
    """``integral_1^t s^(gamma-1) ln s ds`` in closed form.

    Written as ``(ln t)^2 g(gamma ln t)`` with ``g(x) = (x e^x - e^x + 1)/x^2``,
    which is evaluated by its power series for small ``|x|`` to avoid the
    cancellation the textbook form suffers near ``gamma = 0``.
    """
    if not t >= 1.0:
        raise InvalidArgument(f"t must be >= 1, got {t}")
    log_t = math.log(t)
    if abs(gamma) < ZERO_GAMMA:
        return 0.5 * log_t * log_t
    x = gamma * log_t
    if abs(x) < 0.1:
        return log_t * log_t * _q_series(x)
    return (t**gamma * log_t) / gamma - math.expm1(x) / (gamma * gamma)


def q_gamma_asymptotic(gamma: float, t: float) -> float:
    """Leading-order behaviour of :func:`q_gamma` as ``t`` grows."""
    if not t > 1.0:
        raise InvalidArgument(f"t must be > 1, got {t}")
    log_t = math.log(t)
    if abs(gamma) < ZERO_GAMMA:
        return 0.5 * log_t * log_t
    if gamma > 0:
        return t**gamma * log_t / gamma
    return 1.0 / (gamma * gamma)


@dataclass(frozen=True)
class DecayReport:
    case: str
    sequence: tuple[float, ...]
    decaying: bool
    slope: float = math.nan
    note: str = (
        "finite-schedule diagnostic: fitted log-log slope of the sequence against n; "
        "it cannot certify a limit"
    )


# margin absorbs the integer rounding of k_n
DECAY_SLOPE = -0.01


def check_decay_conditions(
    gamma: float,
    schedule: Sequence[tuple[float, float, float]],
    delta: float | None = None,
) -> DecayReport:
    """Evaluate the sufficient condition for ``sqrt(k) z_n -> 0`` along a schedule.

    ``schedule`` holds ``(n, k_n, h_n)`` triples with increasing ``n``. The
    sequence checked is ``sqrt(k) h`` for ``gamma > 0``,
    ``sqrt(k) h (n/k)^delta`` for ``gamma = 0`` (``delta > 0`` required) and
    ``sqrt(k) h (n/k)^(-gamma)`` for ``gamma < 0``.
    """
    rows = [tuple(float(v) for v in row) for row in schedule]
    if len(rows) < 2:
        raise InvalidSchedule("schedule needs at least two points")
    ns = [r[0] for r in rows]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidSchedule("schedule must be strictly increasing in n")
    for n, k, h in rows:
        if not (0 < k < n) or h < 0:
            raise InvalidSchedule(f"invalid schedule entry (n={n}, k={k}, h={h})")
    if rows[-1][1] / rows[-1][0] >= rows[0][1] / rows[0][0]:
        raise InvalidSchedule("k_n / n does not decrease along the schedule")

    if abs(gamma) < ZERO_GAMMA:
        if delta is None or not delta > 0:
            raise InvalidSchedule("gamma = 0 needs a caller-supplied delta > 0")
        case, power = "gamma=0", delta
    elif gamma > 0:
        case, power = "gamma>0", 0.0
    else:
        case, power = "gamma<0", -gamma
    seq = tuple(math.sqrt(k) * h * (n / k) ** power for n, k, h in rows)
    if min(seq) <= 0.0:
        # h = 0 somewhere: no perturbation, nothing to decay
        return DecayReport(case=case, sequence=seq, decaying=True, slope=-math.inf)
    slope = float(np.polyfit(np.log(ns), np.log(seq), 1)[0])
    return DecayReport(case=case, sequence=seq, decaying=slope < DECAY_SLOPE, slope=slope)
