"""Dense Hermitian linear algebra helpers.

Eigenvalues come from LAPACK (``numpy.linalg.eigh``); everything here works on
plain complex ``ndarray`` values so certificates stay in the complex domain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERM_TOL = 1e-12
PSD_TOL = 1e-8
RANK_TOL = 1e-8


class LinAlgFailure(RuntimeError):
    pass


class NotHermitian(ValueError):
    pass


class IndefiniteMatrix(ValueError):
    pass


def hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Validate and symmetrize: returns ``(A + A*)/2``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
    dev = np.abs(a - a.conj().T).max() if a.size else 0.0
    if dev > tol * scale:
        raise NotHermitian(f"matrix is not Hermitian (max |A - A*| = {dev:.3e})")
    return (a + a.conj().T) / 2


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigensolver did not converge: {exc}") from exc
    return w, v


def eigvalsh(a) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(np.asarray(a))
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigensolver did not converge: {exc}") from exc


def lambda_min(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(eigvalsh(a)[0])


def psd_check(a, tol: float = PSD_TOL) -> tuple[bool, float]:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    lam = lambda_min(a)
    return lam >= -tol, lam


@dataclass
class PsdFactor:
    rank: int
    B: np.ndarray
    residual: float


def psd_factor(a, rank_tol: float = RANK_TOL) -> PsdFactor:
    """Eigen-based factor ``A = B B*`` keeping eigenvalues above ``rank_tol``.

    Columns come out in order of decreasing eigenvalue.
    """
    a = np.asarray(a, dtype=complex)
    w, v = hermitian_eig(a)
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    if w.size and w[0] < -rank_tol * scale:
        raise IndefiniteMatrix(f"matrix is indefinite (lambda_min = {w[0]:.3e})")
    order = [i for i in np.argsort(-w, kind="stable") if w[i] > rank_tol * scale]
    w, v = w[order], v[:, order]
    B = v * np.sqrt(w)
    # fix the phase so the largest entry of each column is real positive
    for j in range(B.shape[1]):
        k = np.argmax(np.abs(B[:, j]))
        B[:, j] *= np.exp(-1j * np.angle(B[k, j]))
    residual = float(np.abs(a - B @ B.conj().T).max()) if a.size else 0.0
    return PsdFactor(int(B.shape[1]), B, residual)


def real_embedding(a) -> np.ndarray:
    """``h(A) = [[Re A, -Im A], [Im A, Re A]]``."""
    a = np.asarray(a, dtype=complex)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def real_embedding_inverse(y) -> np.ndarray:
    """Complex matrix ``X`` with ``<h(A), Y> = 2 Re Tr(A* X)`` for every ``A``.

    For ``Y = h(X)`` this recovers ``X`` exactly; for an arbitrary symmetric
    ``Y`` it is the averaged projection, which preserves positivity.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0] // 2
    y11, y12, y21, y22 = y[:n, :n], y[:n, n:], y[n:, :n], y[n:, n:]
    return (y11 + y22) / 2 + 1j * (y21 - y12) / 2


def matrix_to_json(a) -> dict:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]),
            "real": a.real.tolist(), "imag": a.imag.tolist()}


def matrix_from_json(d) -> np.ndarray:
    re = np.asarray(d["real"], dtype=float)
    im = np.asarray(d.get("imag", np.zeros_like(re)), dtype=float)
    a = re + 1j * im
    rows, cols = int(d.get("rows", a.shape[0])), int(d.get("cols", a.shape[1] if a.ndim == 2 else 1))
    return a.reshape(rows, cols)
