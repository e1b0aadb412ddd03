"""Estimated null space of the Fisher information matrix.

The span of the eigenvectors below the cutoff is the estimated constancy
space of the limiting conditional model.  The cutoff can be supplied by
the caller or selected automatically from the spectral gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSymmetric
from .expfam import FisherInfo

# Relative floor below which eigenvalues are treated as pure round-off.
EIG_FLOOR = 1e-8
# Eigenvalues this far below the largest are candidates for the null block.
NULL_CANDIDATE = 1e-4


@dataclass(frozen=True)
class NullBasis:
    """Eigenvalues (nonincreasing), the cutoff used, and an orthonormal basis
    of the eigenvectors below it."""

    eigenvalues: np.ndarray
    threshold: float
    basis: np.ndarray  # p x j, orthonormal columns

    @property
    def j(self) -> int:
        return self.basis.shape[1]


def symmetric_eigen(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.

    Returns (eigenvalues, Q) with A = Q diag(w) Q.T.  Raises NotSymmetric
    when the input is not symmetric to 1e-10 relative.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric("input must be a square matrix")
    scale = np.abs(A).max() if A.size else 0.0
    if not np.allclose(A, A.T, atol=1e-10 * (1.0 + scale), rtol=0.0):
        raise NotSymmetric("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(w)[::-1]
    return w[order], Q[:, order]


def select_epsilon(eigenvalues: np.ndarray, scale: float | None = None) -> float:
    """Spectral-gap heuristic for the null-space cutoff.

    Eigenvalues must be nonincreasing.  If the whole spectrum sits at the
    round-off floor the matrix is treated as fully degenerate.  Otherwise
    the cutoff is the geometric mean across the largest relative gap whose
    lower eigenvalue is far below the top of the spectrum; if no such gap
    exists the cutoff is the floor itself and nothing is flagged null.

    ``scale``, when given, is an external reference for the size the matrix
    would have away from the boundary (e.g. the Fisher norm at the fitter's
    starting point).  A completely collapsed spectrum can only be recognized
    against such a reference: relative to itself even a matrix that has
    shrunk by ten orders of magnitude still shows a "largest" eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    lam_max = max(float(lam[0]), 0.0)
    full_floor = EIG_FLOOR * (1.0 + max(lam_max, scale or 0.0))
    if lam_max < full_floor:
        return 2.0 * full_floor
    floor = EIG_FLOOR * (1.0 + lam_max)
    clamped = np.maximum(lam, floor)
    best_ratio = 0.0
    best_k = None
    for k in range(len(lam) - 1):
        if lam[k + 1] < NULL_CANDIDATE * lam_max:
            ratio = clamped[k] / clamped[k + 1]
            if ratio > best_ratio:
                best_ratio = ratio
                best_k = k
    if best_k is None:
        return floor
    return float(np.sqrt(clamped[best_k] * clamped[best_k + 1]))


def null_basis(F: FisherInfo, epsilon: float | None = None, scale: float | None = None) -> NullBasis:
    """Orthonormal basis of the eigenvectors of F with eigenvalue below the cutoff."""
    w, Q = symmetric_eigen(F.matrix)
    eps = select_epsilon(w, scale) if epsilon is None else float(epsilon)
    null = w < eps
    basis = Q[:, null]
    if basis.shape[1] > 1:
        # eigh already returns orthonormal vectors; re-orthonormalize to
        # guard against clustered-eigenvalue drift
        basis, _ = np.linalg.qr(basis)
    return NullBasis(eigenvalues=w, threshold=eps, basis=basis)


def subspace_distance(V1, V2) -> float:
    """Spectral-norm distance between the orthogonal projectors of two subspaces.

    0 for equal subspaces; 1 when some direction of one subspace is
    orthogonal to all of the other.
    """
    V1 = np.atleast_2d(np.asarray(V1, dtype=float))
    V2 = np.atleast_2d(np.asarray(V2, dtype=float))
    if V1.shape[0] != V2.shape[0]:
        raise ValueError("subspaces live in different ambient dimensions")
    P1 = V1 @ V1.T
    P2 = V2 @ V2.T
    return float(np.linalg.norm(P1 - P2, 2))
