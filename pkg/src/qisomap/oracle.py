"""Classical Isomap: double centring, Jacobi eigensolver, embedding.

This is the reference every quantum stage is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricInput, ConvergenceFailure, InsufficientPositiveSpectrum


@dataclass(frozen=True)
class EmbeddingResult:
    """``Z`` (N x d), the eigenvalues used, and the explained ratio ``eta``."""

    Z: np.ndarray
    eigenvalues: np.ndarray
    eta: float

    @property
    def d(self) -> int:
        return self.Z.shape[1]


def row_means(D, square: bool = True):
    """Row means, column means and grand mean of ``D`` (squared first by default)."""
    D = np.asarray(D, dtype=float)
    S = D * D if square else D
    rows = S.mean(axis=1)
    cols = S.mean(axis=0)
    return rows, cols, float(S.mean())


def center_distances(D, square: bool = True, tol: float = 1e-12) -> np.ndarray:
    """Gram matrix ``k_ij = -1/2 (s_ij - s_i* - s_*j + s_**)``.

    ``s`` is the squared distance when ``square`` is true (classical MDS), or
    the distance itself otherwise.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise AsymmetricInput("distance matrix must be square")
    scale = max(1.0, float(np.abs(D[np.isfinite(D)]).max(initial=0.0)))
    if not np.all(np.isfinite(D)) or np.abs(D - D.T).max(initial=0.0) > tol * scale:
        raise AsymmetricInput("distance matrix must be finite and symmetric")
    S = D * D if square else D
    rows, cols, total = row_means(D, square)
    K = -0.5 * (S - rows[:, None] - cols[None, :] + total)
    return 0.5 * (K + K.T)


def jacobi_eigh(A, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi rotations for a real symmetric matrix.

    Returns eigenvalues in descending order and eigenvectors as columns.  Each
    eigenvector's largest-magnitude component is made nonnegative.
    """
    a = np.array(A, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.abs(a - a.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(a).max(initial=0.0)):
        raise AsymmetricInput("Jacobi needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], fix_signs(v[:, order])


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is nonnegative."""
    V = np.array(V, dtype=float)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


eigendecompose = jacobi_eigh


def embed(eigvals, eigvecs, d: int) -> EmbeddingResult:
    """Coordinates ``v_c * sqrt(lambda_c)`` for the ``d`` largest eigenvalues."""
    eigvals = np.asarray(eigvals, dtype=float)
    eigvecs = np.asarray(eigvecs, dtype=float)
    n = eigvecs.shape[0]
    if d == 0:
        return EmbeddingResult(np.zeros((n, 0)), np.zeros(0), 0.0)
    if int(np.sum(eigvals > 0)) < d:
        raise InsufficientPositiveSpectrum(
            f"asked for {d} dimensions, only {int(np.sum(eigvals > 0))} positive eigenvalues"
        )
    lam = eigvals[:d]
    Z = eigvecs[:, :d] * np.sqrt(lam)
    total = float(np.sum(eigvals ** 2))
    eta = float(np.sum(lam ** 2) / total) if total > 0 else 0.0
    return EmbeddingResult(Z, lam.copy(), eta)


def classical_isomap_from_geodesics(D, d: int, square: bool = True) -> tuple[np.ndarray, EmbeddingResult]:
    K = center_distances(D, square)
    w, V = jacobi_eigh(K)
    return K, embed(w, V, d)


def pairwise_distances(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    diff = Z[:, None, :] - Z[None, :, :]
    return np.sqrt(np.maximum((diff ** 2).sum(-1), 0.0))


def procrustes_error(Z, Z_ref) -> float:
    """Frobenius residual of ``Z`` after the best orthogonal map onto ``Z_ref``."""
    Z = np.asarray(Z, dtype=float)
    Z_ref = np.asarray(Z_ref, dtype=float)
    if Z.shape != Z_ref.shape:
        raise ValueError(f"shape mismatch {Z.shape} vs {Z_ref.shape}")
    if Z.size == 0:
        return 0.0
    U, _, Vt = np.linalg.svd(Z.T @ Z_ref)
    return float(np.linalg.norm(Z @ (U @ Vt) - Z_ref))


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b / denom) if denom > 0 else 0.0


def distance_correlation(D, Z) -> float:
    """Pearson correlation of geodesic vs embedded distances over pairs ``i < j``."""
    D = np.asarray(D, dtype=float)
    iu = np.triu_indices(D.shape[0], 1)
    return pearson(D[iu], pairwise_distances(Z)[iu])
