"""Small complex linear-algebra kernels.

Every function accepts single matrices; ``acute_angle``, ``chordal_distance``
and ``min_eigenvalue_hermitian`` also broadcast over leading batch axes, which
the Monte Carlo paths rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis stored column-wise in an ``ambient_dim x dim`` array."""

    columns: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return int(self.columns.shape[0])

    @property
    def dim(self) -> int:
        return int(self.columns.shape[1])

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or min(A.shape) < 1:
        raise DomainError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    return A


def null_space_basis(A, tol: float = DEFAULT_TOL) -> SubspaceBasis:
    """Orthonormal basis of ``{x : A x = 0}``.

    Singular values at or below ``tol * sigma_max`` count as zero. Columns are
    ordered by ascending singular value, so directions beyond the row count
    (exact zeros) come first in their natural index order.

    Parameters
    ----------
    A : array_like
        Complex matrix of shape ``(m, n)``.
    tol : float
        Relative rank threshold.

    Returns
    -------
    SubspaceBasis
        Basis of shape ``(n, n - rank)``; may have dimension 0.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    A = _as_matrix(A)
    m, n = A.shape
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    # singular value attached to each right singular vector; rows past m are 0
    sv = np.zeros(n)
    sv[: s.size] = s
    null = sv <= tol * smax
    idx = np.flatnonzero(null)
    # ascending singular value, stable on ties so the natural order survives
    idx = idx[np.argsort(sv[idx], kind="stable")]
    return SubspaceBasis(vh[idx].conj().T)


def left_null_basis(H, tol: float = DEFAULT_TOL) -> SubspaceBasis:
    """Orthonormal basis of the orthogonal complement of the column space of ``H``.

    This is the left null space ``{v : v^H H = 0}``; for a tall channel it
    lives in the receive space, which is where reference directions live.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    H = _as_matrix(H)
    m, n = H.shape
    if m <= n:
        raise DomainError(f"left_null_basis expects a tall matrix, got {H.shape}")
    u, s, _ = np.linalg.svd(H, full_matrices=True)
    smax = s[0] if s.size else 0.0
    sv = np.zeros(m)
    sv[: s.size] = s
    idx = np.flatnonzero(sv <= tol * smax)
    idx = idx[np.argsort(sv[idx], kind="stable")]
    return SubspaceBasis(u[:, idx])


def acute_angle(a, b) -> np.ndarray | float:
    """Acute angle in radians between complex vectors along the last axis.

    Uses ``atan2(|perp|, |a^H b|)`` on normalized vectors, which stays accurate
    for nearly parallel inputs where ``arccos`` would lose half the digits.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na == 0) or np.any(nb == 0):
        raise DomainError("acute_angle of a zero vector")
    u = a / na[..., None]
    w = b / nb[..., None]
    inner = np.sum(w.conj() * u, axis=-1)
    perp = np.linalg.norm(u - inner[..., None] * w, axis=-1)
    out = np.arctan2(perp, np.abs(inner))
    return float(out) if out.ndim == 0 else out


def chordal_distance(A, B) -> np.ndarray | float:
    """Chordal distance ``sqrt(dim - tr(A A^H B B^H))`` between equal-dim subspaces.

    ``A`` and ``B`` are SubspaceBasis objects or arrays of orthonormal columns,
    optionally with matching leading batch axes.
    """
    A = A.columns if isinstance(A, SubspaceBasis) else np.asarray(A, dtype=complex)
    B = B.columns if isinstance(B, SubspaceBasis) else np.asarray(B, dtype=complex)
    if A.shape[-2:] != B.shape[-2:]:
        raise DomainError(f"subspace shapes differ: {A.shape[-2:]} vs {B.shape[-2:]}")
    dim = A.shape[-1]
    overlap = np.sum(np.abs(np.swapaxes(A, -1, -2).conj() @ B) ** 2, axis=(-2, -1))
    out = np.sqrt(np.clip(dim - overlap, 0.0, dim))
    return float(out) if out.ndim == 0 else out


def min_eigenvalue_hermitian(G, tol: float = DEFAULT_TOL) -> np.ndarray | float:
    """Smallest eigenvalue of a Hermitian PSD matrix (or a stack of them)."""
    G = np.asarray(G, dtype=complex)
    if G.ndim < 2 or G.shape[-1] != G.shape[-2]:
        raise DomainError(f"expected square matrices, got {G.shape}")
    scale = np.maximum(1.0, np.max(np.abs(G), axis=(-2, -1)))
    asym = np.max(np.abs(G - np.swapaxes(G, -1, -2).conj()), axis=(-2, -1))
    if np.any(asym > tol * scale):
        raise DomainError("matrix is not Hermitian within tolerance")
    out = np.linalg.eigvalsh(G)[..., 0]
    return float(out) if out.ndim == 0 else out


def haar_unitary(n: int, seed: int) -> np.ndarray:
    """Haar-distributed ``n x n`` unitary, deterministic in ``seed``.

    QR of a complex Gaussian matrix with the phases of ``diag(R)`` folded back
    into ``Q``, which makes the distribution exactly Haar.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
