"""Small symmetric positive definite linear algebra.

Everything here is built on a cyclic Jacobi eigensolver. Matrices are at most
a few tens of rows in every use case, so the O(d^3) sweeps are cheap and the
solver keeps symmetric inputs exactly symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
    NotSymmetric,
)

__all__ = [
    "EigenDecomposition",
    "SpdMatrix",
    "as_spd",
    "jacobi_eigen",
    "spd_sqrt",
    "spd_inverse",
    "determinant",
    "det_normalize",
    "mahalanobis_norm",
    "operator_norm",
]

SYMMETRY_RTOL = 1e-12
PD_RTOL = 1e-12
OFFDIAG_RTOL = 1e-13
MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    def reconstruct(self) -> NDArray[np.float64]:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _square(a: ArrayLike) -> NDArray[np.float64]:
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    return m


def _is_symmetric(m: NDArray[np.float64]) -> bool:
    scale = np.abs(m).max()
    return bool(np.abs(m - m.T).max() <= SYMMETRY_RTOL * scale)


def _jacobi_sweeps(a: NDArray[np.float64]) -> EigenDecomposition:
    a = a.copy()
    d = a.shape[0]
    v = np.eye(d)
    tol = OFFDIAG_RTOL * np.abs(np.diag(a)).sum()

    def off_max() -> float:
        if d == 1:
            return 0.0
        return float(np.abs(a[~np.eye(d, dtype=bool)]).max())

    sweeps = 0
    while off_max() > tol:
        if sweeps == MAX_SWEEPS:
            raise NoConvergence(
                f"Jacobi sweeps did not converge after {MAX_SWEEPS} sweeps "
                f"(off-diagonal {off_max():.3e} > {tol:.3e})"
            )
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with the (p, q) plane rotation
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=v[:, order])


def jacobi_eigen(a: ArrayLike | SpdMatrix) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrized as ``(A + A^T) / 2`` after the symmetry check.
    Positive definiteness is not required here.
    """
    if isinstance(a, SpdMatrix):
        return a.eigen
    m = _square(a)
    if not _is_symmetric(m):
        raise NotSymmetric("matrix is not symmetric within relative tolerance 1e-12")
    return _jacobi_sweeps(0.5 * (m + m.T))


class SpdMatrix:
    """Immutable symmetric positive definite matrix.

    Construction validates symmetry and positive definiteness (all eigenvalues
    above ``1e-12`` times the largest) and keeps the eigendecomposition, which
    every derived operation reuses.
    """

    __slots__ = ("values", "eigen")

    values: NDArray[np.float64]
    eigen: EigenDecomposition

    def __init__(self, entries: ArrayLike):
        m = _square(entries)
        if not _is_symmetric(m):
            raise NotSymmetric("matrix is not symmetric within relative tolerance 1e-12")
        m = 0.5 * (m + m.T)
        eig = _jacobi_sweeps(m)
        lam = eig.eigenvalues
        if lam[0] <= 0.0 or lam[-1] <= PD_RTOL * lam[0]:
            raise NotPositiveDefinite(f"eigenvalues {lam} are not all positive")
        m.setflags(write=False)
        object.__setattr__(self, "values", m)
        object.__setattr__(self, "eigen", eig)

    @classmethod
    def _from_eigen(cls, eigenvalues: NDArray, eigenvectors: NDArray) -> SpdMatrix:
        order = np.argsort(-eigenvalues, kind="stable")
        lam = np.asarray(eigenvalues, dtype=np.float64)[order]
        vec = np.asarray(eigenvectors, dtype=np.float64)[:, order]
        if lam[0] <= 0.0 or lam[-1] <= PD_RTOL * lam[0]:
            raise NotPositiveDefinite(f"eigenvalues {lam} are not all positive")
        m = (vec * lam) @ vec.T
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        obj = cls.__new__(cls)
        object.__setattr__(obj, "values", m)
        object.__setattr__(obj, "eigen", EigenDecomposition(lam, vec))
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("SpdMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        out = np.array(self.values, dtype=dtype)
        return out

    def __repr__(self) -> str:
        return f"SpdMatrix({self.values.tolist()!r})"

    def __reduce__(self):
        return (SpdMatrix, (self.values.tolist(),))

    def whitener(self) -> NDArray[np.float64]:
        """Matrix ``W`` with ``W W^T = A^{-1}``; row vectors map as ``u @ W``."""
        v = self.eigen.eigenvectors
        return v / np.sqrt(self.eigen.eigenvalues)


def as_spd(a: ArrayLike | SpdMatrix) -> SpdMatrix:
    return a if isinstance(a, SpdMatrix) else SpdMatrix(a)


def spd_sqrt(a: ArrayLike | SpdMatrix) -> SpdMatrix:
    """The unique symmetric positive definite ``S`` with ``S @ S == A``."""
    a = as_spd(a)
    return SpdMatrix._from_eigen(np.sqrt(a.eigen.eigenvalues), a.eigen.eigenvectors)


def spd_inverse(a: ArrayLike | SpdMatrix) -> SpdMatrix:
    a = as_spd(a)
    return SpdMatrix._from_eigen(1.0 / a.eigen.eigenvalues, a.eigen.eigenvectors)


def determinant(a: ArrayLike | SpdMatrix) -> float:
    return float(np.prod(as_spd(a).eigen.eigenvalues))


def det_normalize(a: ArrayLike | SpdMatrix) -> SpdMatrix:
    """Rescale ``A`` to unit determinant: ``A / det(A)^(1/d)``."""
    a = as_spd(a)
    lam = a.eigen.eigenvalues
    # geometric mean in log space keeps large d from overflowing
    scale = np.exp(np.mean(np.log(lam)))
    return SpdMatrix._from_eigen(lam / scale, a.eigen.eigenvectors)


def mahalanobis_norm(
    x: ArrayLike, center: ArrayLike, shape: ArrayLike | SpdMatrix
) -> float | NDArray[np.float64]:
    """``sqrt((x - c)^T shape^{-1} (x - c))``.

    ``x`` may be a single d-vector (returns a float) or an ``(n, d)`` array of
    row vectors (returns an array of n norms).
    """
    shape = as_spd(shape)
    x = np.asarray(x, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    d = shape.dim
    if center.shape != (d,) or x.shape[-1:] != (d,) or x.ndim > 2:
        raise DimensionMismatch(
            f"x {x.shape}, center {center.shape} and shape ({d}, {d}) do not agree"
        )
    z = (x - center) @ shape.whitener()
    norms = np.sqrt(np.einsum("...i,...i->...", z, z))
    return float(norms) if x.ndim == 1 else norms


def operator_norm(a: ArrayLike | SpdMatrix) -> float:
    """Induced 2-norm (largest singular value)."""
    if isinstance(a, SpdMatrix):
        return float(a.eigen.eigenvalues[0])
    m = _square(a)
    if _is_symmetric(m):
        return float(np.abs(jacobi_eigen(m).eigenvalues).max())
    gram = m.T @ m
    return float(np.sqrt(max(jacobi_eigen(0.5 * (gram + gram.T)).eigenvalues[0], 0.0)))
