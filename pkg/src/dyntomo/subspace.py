"""Numerical rank and subspace arithmetic.

Every subspace is carried as an orthonormal basis. Rank decisions use a
relative singular-value threshold: a singular value counts when it exceeds
``tol * sigma_max``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-10
ORTHONORMAL_TOL = 1e-10


class DimensionError(ValueError):
    """Operands live in incompatible spaces."""


def check_tol(tol: float) -> float:
    tol = float(tol)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"relative rank threshold must lie in (0, 1), got {tol!r}")
    return tol


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return `M` as a 2-D float array, rejecting NaN and infinity."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A[np.newaxis, :]
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def machine_tol(shape) -> float:
    """Rank threshold at rounding level, ``max(shape) * eps``, for Krylov-type stacks."""
    return max(shape) * np.finfo(float).eps


def _rank_from_singular_values(s: np.ndarray, tol: float) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def numerical_rank(M, tol: float = DEFAULT_TOL) -> int:
    """Count singular values above ``tol * sigma_max``; zero for the zero matrix."""
    A = as_matrix(M)
    if A.size == 0:
        raise DimensionError("rank of an empty matrix is undefined")
    s = np.linalg.svd(A, compute_uv=False)
    return _rank_from_singular_values(s, check_tol(tol))


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^n given by an orthonormal basis (columns).

    The trivial subspace has a basis with zero columns.
    """

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.array(self.basis, dtype=float, copy=True)
        if B.ndim != 2 or B.shape[0] != self.ambient_dim:
            raise DimensionError(
                f"basis shape {B.shape} does not match ambient dimension {self.ambient_dim}"
            )
        if B.shape[1] > self.ambient_dim:
            raise DimensionError("more basis vectors than the ambient dimension")
        if not np.all(np.isfinite(B)):
            raise ValueError("basis contains non-finite entries")
        k = B.shape[1]
        if k and np.max(np.abs(B.T @ B - np.eye(k))) > ORTHONORMAL_TOL:
            raise ValueError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def trivial(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0)))

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    @classmethod
    def span(cls, vectors, tol: float = DEFAULT_TOL) -> "Subspace":
        """Orthonormalized column span of `vectors` (an n x k array)."""
        V = as_matrix(vectors, "vectors")
        return Subspace(V.shape[0], _orth(V, check_tol(tol)))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, v, atol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.basis @ (self.basis.T @ v))) <= atol

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def _orth(V: np.ndarray, tol: float, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the columns of V.

    Singular values count when above ``tol * max(sigma_max, scale)``; pass
    `scale` when V = L @ Q for orthonormal Q, so that columns L annihilates
    up to rounding are dropped rather than judged against their own size.
    """
    n = V.shape[0]
    if V.shape[1] == 0:
        return np.zeros((n, 0))
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    ref = max(s[0], scale or 0.0)
    if ref == 0.0:
        return np.zeros((n, 0))
    return U[:, :int(np.count_nonzero(s > tol * ref))]


def _same_ambient(S1: Subspace, S2: Subspace) -> int:
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: {S1.ambient_dim} vs {S2.ambient_dim}"
        )
    return S1.ambient_dim


def null_space(M, tol: float = DEFAULT_TOL) -> Subspace:
    """Null space of M; its dimension is ``cols - numerical_rank(M, tol)``."""
    A = as_matrix(M)
    tol = check_tol(tol)
    n = A.shape[1]
    if A.shape[0] == 0:
        return Subspace.full(n)
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    r = _rank_from_singular_values(s, tol)
    return Subspace(n, Vt[r:].T)


def image(L, S: Subspace, tol: float = DEFAULT_TOL) -> Subspace:
    """Orthonormalized span of ``L @ basis(S)``."""
    L = as_matrix(L, "operator")
    if L.shape != (S.ambient_dim, S.ambient_dim):
        raise DimensionError(
            f"operator of shape {L.shape} cannot act on R^{S.ambient_dim}"
        )
    scale = float(np.linalg.norm(L, 2)) if L.size else 0.0
    return Subspace(S.ambient_dim, _orth(L @ S.basis, check_tol(tol), scale))


def orth_complement(S: Subspace) -> Subspace:
    n = S.ambient_dim
    if S.dim == 0:
        return Subspace.full(n)
    if S.dim == n:
        return Subspace.trivial(n)
    # trailing left singular vectors of an orthonormal basis span the complement
    U, _, _ = np.linalg.svd(S.basis, full_matrices=True)
    return Subspace(n, U[:, S.dim:])


def intersect(S1: Subspace, S2: Subspace, tol: float = DEFAULT_TOL) -> Subspace:
    """Intersection computed as ``span(S1^perp, S2^perp)^perp``."""
    n = _same_ambient(S1, S2)
    tol = check_tol(tol)
    C = np.hstack([orth_complement(S1).basis, orth_complement(S2).basis])
    if C.shape[1] == 0:
        return Subspace.full(n)
    U, s, _ = np.linalg.svd(C, full_matrices=True)
    r = _rank_from_singular_values(s, tol)
    return Subspace(n, U[:, r:])


def transverse_dim(d1: int, d2: int, n: int) -> int:
    """Dimension of a transverse intersection of a d1- and a d2-dim subspace of R^n."""
    return max(d1 + d2 - n, 0)


def is_transverse(S1: Subspace, S2: Subspace, tol: float = DEFAULT_TOL) -> bool:
    n = _same_ambient(S1, S2)
    return intersect(S1, S2, tol).dim == transverse_dim(S1.dim, S2.dim, n)


def subspace_distance(S1: Subspace, S2: Subspace) -> float:
    """Largest principal-angle sine between S1 and its projection onto S2.

    Zero exactly when S1 is contained in S2, so the measure is not symmetric.
    """
    _same_ambient(S1, S2)
    if S1.dim == 0:
        return 0.0
    residual = S1.basis - S2.basis @ (S2.basis.T @ S1.basis)
    return float(min(np.linalg.norm(residual, 2), 1.0))


def same_span(S1: Subspace, S2: Subspace, atol: float = 1e-8) -> bool:
    return (
        S1.dim == S2.dim
        and subspace_distance(S1, S2) <= atol
        and subspace_distance(S2, S1) <= atol
    )
