"""Dense complex linear algebra with a single relative tolerance policy.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``;
:func:`as_matrix` is the one validation gate every public entry point uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidMatrix, NotHermitian, ShapeError


@dataclass(frozen=True)
class Tolerance:
    """Tolerance policy shared by every module.

    All values are relative: ranks are judged against the largest singular
    value, commutators against the product of Frobenius norms, and
    reconstructions against the norm of the reconstructed operator.
    ``unitarity_tol`` is absolute because unitaries have a fixed scale.
    """

    unitarity_tol: float = 1e-9
    rank_rel_tol: float = 1e-9
    commute_tol: float = 1e-9
    eig_cluster_tol: float = 1e-7
    reconstruct_tol: float = 1e-9

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value >= 0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")


DEFAULT_TOL = Tolerance()


def as_matrix(M, name: str = "matrix", square: bool = False) -> np.ndarray:
    """Validate ``M`` and return it as a finite 2-D complex128 array.

    Parameters
    ----------
    M : array-like
        Anything ``numpy.asarray`` accepts.
    name : str
        Used in error messages.
    square : bool
        Additionally require a square matrix.
    """
    try:
        arr = np.asarray(M, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise InvalidMatrix(f"{name}: cannot convert to a complex matrix ({exc})") from None
    if arr.ndim != 2 or 0 in arr.shape:
        raise ShapeError(f"{name}: expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name}: contains NaN or Inf")
    if square and arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{name}: expected a square matrix, got shape {arr.shape}")
    return arr


def _tol(tol: Tolerance | None) -> Tolerance:
    return DEFAULT_TOL if tol is None else tol


def dagger(M) -> np.ndarray:
    return as_matrix(M).conj().T


def kron(M, N) -> np.ndarray:
    """Tensor product; the row index of ``kron(M, N)`` is ``i * rows(N) + k``."""
    return np.kron(as_matrix(M, "M"), as_matrix(N, "N"))


def kron_all(ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def fro(M) -> float:
    return float(np.linalg.norm(M))


class SVDResult(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray  # M = u @ diag(s) @ v^dagger


def svd(M) -> SVDResult:
    """Full SVD with singular values in non-increasing order.

    Returns ``(u, s, v)`` with ``M = u[:, :k] @ diag(s) @ v[:, :k].conj().T``,
    ``k = min(M.shape)``; ``u`` and ``v`` are square unitaries.
    """
    M = as_matrix(M)
    u, s, vh = np.linalg.svd(M, full_matrices=True)
    return SVDResult(u, s, vh.conj().T)


def numerical_rank(M, tol: Tolerance | None = None) -> int:
    """Number of singular values above ``rank_rel_tol * s_max``; 0 for zero."""
    s = np.linalg.svd(as_matrix(M), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > _tol(tol).rank_rel_tol * s[0]))


class RankReport(NamedTuple):
    rank: int
    # relative singular values just above and just below the cut (0 if absent)
    above: float
    below: float


def rank_report(M, tol: Tolerance | None = None) -> RankReport:
    """Numerical rank plus the relative singular-value gap around the cut."""
    s = np.linalg.svd(as_matrix(M), compute_uv=False)
    if s[0] == 0.0:
        return RankReport(0, 0.0, 0.0)
    rel = s / s[0]
    r = int(np.count_nonzero(rel > _tol(tol).rank_rel_tol))
    above = float(rel[r - 1]) if r > 0 else 0.0
    below = float(rel[r]) if r < rel.size else 0.0
    return RankReport(r, above, below)


def is_hermitian(H, tol: Tolerance | None = None) -> bool:
    H = as_matrix(H, square=True)
    scale = max(fro(H), np.finfo(float).tiny)
    return fro(H - H.conj().T) <= _tol(tol).commute_tol * scale


def eig_hermitian(H, tol: Tolerance | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``H = W diag(lam) W^dagger`` of a Hermitian matrix.

    Eigenvalues are returned in ascending order.
    """
    H = as_matrix(H, "H", square=True)
    if not is_hermitian(H, tol):
        raise NotHermitian("eig_hermitian: input is not Hermitian within commute_tol")
    lam, W = np.linalg.eigh((H + H.conj().T) / 2)
    return lam, W


def normality_residual(M) -> float:
    """``||M M^dag - M^dag M||_F / ||M||_F^2`` (0 for the zero matrix)."""
    M = as_matrix(M, square=True)
    n2 = fro(M) ** 2
    if n2 == 0.0:
        return 0.0
    Md = M.conj().T
    return fro(M @ Md - Md @ M) / n2


def commutator_residual(M, N) -> float:
    """``||MN - NM||_F / (||M||_F ||N||_F)`` (0 if either is zero)."""
    M = as_matrix(M, "M", square=True)
    N = as_matrix(N, "N", square=True)
    if M.shape != N.shape:
        raise ShapeError(f"commutes: shapes {M.shape} and {N.shape} differ")
    scale = fro(M) * fro(N)
    if scale == 0.0:
        return 0.0
    return fro(M @ N - N @ M) / scale


def is_normal(M, tol: Tolerance | None = None) -> bool:
    return normality_residual(M) <= _tol(tol).commute_tol


def commutes(M, N, tol: Tolerance | None = None) -> bool:
    return commutator_residual(M, N) <= _tol(tol).commute_tol


def unitarity_residual(M) -> float:
    M = as_matrix(M, square=True)
    return fro(M @ M.conj().T - np.eye(M.shape[0]))


def is_unitary(M, tol: Tolerance | None = None) -> bool:
    return unitarity_residual(M) <= _tol(tol).unitarity_tol


def complete_unitary(rows) -> np.ndarray:
    """Unitary whose leading rows are the given orthonormal rows."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.complex128))
    k, n = rows.shape
    # QR of [rows^dag | I] keeps the span of the given rows first
    q, r = np.linalg.qr(np.hstack([rows.conj().T, np.eye(n)]))
    q = q[:, :n]
    # undo the sign/phase QR puts on the leading columns
    phases = np.diag(r)[:k]
    q[:, :k] = q[:, :k] * (phases / np.abs(phases))
    return q.conj().T


def clusters(values, tol: float) -> list[np.ndarray]:
    """Group sorted real ``values`` into runs whose neighbours differ by <= tol."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    prev = None
    for idx in order:
        if prev is None or values[idx] - prev > tol:
            groups.append([])
        groups[-1].append(int(idx))
        prev = values[idx]
    return [np.array(g) for g in groups]
