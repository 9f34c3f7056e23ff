# Geometric kernel: orthonormal bases of score subspaces, sine distance and
# principal angles of a direction to a subspace, one-dimensional flag means,
# and deflation ("peeling" a direction out of a subspace).
#
# Conventions
# -----------
# - Ambient space is R^n (sample space); a subspace is stored as an n x r
#   matrix with orthonormal columns. r = 0 encodes the zero subspace {0}.
# - d(w, B)^2 = 1 - ||B^T w||^2 = sin^2(theta), theta = acute angle between
#   the unit direction w and span(B).
# - Singular/eigen vectors are sign-fixed: the entry of largest magnitude is
#   made positive, ties broken by lowest index.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-10  # entrywise tolerance on B^T B - I before a QR re-pass


class NothingToPeel(ValueError):
    """Deflation was asked to peel a direction orthogonal to the subspace."""


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximal index, which gives the tie rule.
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """An n x r matrix with orthonormal columns spanning a score subspace."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float)
        if cols.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        n, r = cols.shape
        if n < 1:
            raise ValueError("ambient dimension must be at least 1")
        if r > n:
            raise ValueError(f"subspace dimension {r} exceeds ambient dimension {n}")
        if r > 0:
            gram = cols.T @ cols
            if np.max(np.abs(gram - np.eye(r))) > ORTHONORMAL_TOL:
                cols, _ = np.linalg.qr(cols)
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def r(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T


@dataclass(frozen=True, eq=False)
class UnitDirection:
    """A unit-norm vector in R^n."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("direction must live in R^n with n >= 1")
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        if abs(nrm - 1.0) > 1e-12:
            v = v / nrm
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @property
    def n(self) -> int:
        return self.vector.size


def orthonormalize(raw: np.ndarray, tol: float = 1e-12) -> OrthonormalBasis:
    """Orthonormal basis of the column space of ``raw``.

    Columns whose singular value is <= tol times the largest singular value
    are dropped. An all-zero input yields the r = 0 basis.
    """
    A = np.asarray(raw, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1:
        raise ValueError("input must be an n x m array with n >= 1")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    n = A.shape[0]
    if A.shape[1] == 0 or not np.any(A):
        return OrthonormalBasis(np.zeros((n, 0)))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    keep = s > tol * s[0]
    cols = U[:, keep]
    if cols.shape[1] == 0:
        return OrthonormalBasis(np.zeros((n, 0)))
    cols = np.column_stack([_fix_sign(c) for c in cols.T])
    return OrthonormalBasis(cols)


def sine_distance(w: UnitDirection, B: OrthonormalBasis) -> float:
    """sqrt(1 - ||B^T w||^2), clamped to [0, 1]; equals 1 for the zero subspace."""
    if w.n != B.n:
        raise ValueError(f"ambient dimensions differ: {w.n} vs {B.n}")
    if B.r == 0:
        return 1.0
    c = B.columns.T @ w.vector
    s2 = 1.0 - float(c @ c)
    return float(np.sqrt(min(max(s2, 0.0), 1.0)))


def principal_angle(w: UnitDirection, B: OrthonormalBasis) -> float:
    """Acute angle (radians) between a direction and a subspace: arcsin of sine_distance."""
    return float(np.arcsin(sine_distance(w, B)))


def flag_mean_direction(bases) -> UnitDirection:
    """One-dimensional flag mean of a collection of subspaces.

    Returns the first left singular vector of the column-wise concatenation
    of the bases, i.e. the unit w maximizing w^T (sum_k B_k B_k^T) w, which
    minimizes the summed squared sine distances to the subspaces. The sign
    is fixed so the entry of largest magnitude is positive.
    """
    blocks = [b.columns for b in bases]
    if not blocks:
        raise ValueError("flag mean of an empty collection is undefined")
    n = blocks[0].shape[0]
    for cols in blocks:
        if cols.shape[0] != n:
            raise ValueError("all bases must share the ambient dimension")
        if cols.shape[1] == 0:
            raise ValueError("flag mean is undefined for a zero subspace")
    H = np.hstack(blocks)
    U, _, _ = np.linalg.svd(H, full_matrices=False)
    return UnitDirection(_fix_sign(U[:, 0]))


def _flag_mean_refined(blocks, tie_rtol: float = 1e-6):
    """Flag mean on raw column blocks with deterministic tie refinement.

    When the top singular value of the concatenation is (numerically)
    repeated, the top singular subspace is narrowed by maximizing alignment
    with each input subspace in turn, so that the returned direction
    concentrates on a single intersection pattern instead of an arbitrary
    mixture. Returns (direction, degenerate_flag).
    """
    H = np.hstack(blocks)
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    tied = int(np.sum(s >= s[0] * (1.0 - tie_rtol))) if s.size else 0
    if tied <= 1:
        return _fix_sign(U[:, 0]), False
    T = U[:, :tied]
    for cols in blocks:
        if T.shape[1] == 1:
            break
        G = T.T @ cols
        vals, vecs = np.linalg.eigh(G @ G.T)
        keep = vals >= vals[-1] - 1e-9
        T = T @ vecs[:, keep]
    return _fix_sign(T[:, 0]), True


def deflate(B: OrthonormalBasis, w: UnitDirection) -> OrthonormalBasis:
    """Remove from span(B) the direction closest to w.

    Returns the orthogonal complement, within span(B), of the normalized
    projection of w onto span(B). The result has dimension r - 1 and is
    orthogonal to w. Raises NothingToPeel when w is orthogonal to span(B).
    """
    if w.n != B.n:
        raise ValueError(f"ambient dimensions differ: {w.n} vs {B.n}")
    if B.r == 0:
        raise NothingToPeel("cannot deflate the zero subspace")
    c = B.columns.T @ w.vector
    nc = float(np.linalg.norm(c))
    if nc <= 1e-12:
        raise NothingToPeel("direction is orthogonal to the subspace")
    Q, _ = np.linalg.qr((c / nc).reshape(-1, 1), mode="complete")
    return OrthonormalBasis(B.columns @ Q[:, 1:])
