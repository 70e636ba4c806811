"""Operator Schmidt decomposition of bipartite operators.

Index convention: the basis state ``|i>_A |k>_B`` (zero based) sits at row
``i * d_B + k``, the same ordering ``numpy.kron`` produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotUnitary, ShapeError
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, fro, unitarity_residual

_PHASE_FLOOR = 1e-8


def check_dims(M, d_A: int, d_B: int, name: str = "operator") -> np.ndarray:
    """Validate that ``M`` is a square operator on a ``d_A x d_B`` system."""
    if int(d_A) != d_A or int(d_B) != d_B or d_A < 1 or d_B < 1:
        raise ShapeError(f"{name}: local dimensions must be positive integers, got {d_A}, {d_B}")
    M = as_matrix(M, name, square=True)
    if M.shape[0] != d_A * d_B:
        raise ShapeError(f"{name}: shape {M.shape} does not match d_A*d_B = {d_A * d_B}")
    return M


@dataclass(frozen=True)
class BipartiteUnitary:
    """A unitary on ``C^{d_A} (x) C^{d_B}``, validated on construction."""

    d_A: int
    d_B: int
    matrix: np.ndarray = field(repr=False)
    tol: Tolerance = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        M = check_dims(self.matrix, self.d_A, self.d_B, "BipartiteUnitary")
        res = unitarity_residual(M)
        if res > self.tol.unitarity_tol:
            raise NotUnitary(f"matrix is not unitary (||UU^dag - I||_F = {res:.3e})")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    def swapped(self) -> "BipartiteUnitary":
        """The same gate with the roles of A and B exchanged."""
        return BipartiteUnitary(self.d_B, self.d_A, swap_parties(self.matrix, self.d_A, self.d_B), self.tol)


def as_bipartite(U, d_A: int | None = None, d_B: int | None = None, tol: Tolerance | None = None) -> BipartiteUnitary:
    if isinstance(U, BipartiteUnitary):
        return U
    if d_A is None or d_B is None:
        raise ShapeError("local dimensions d_A, d_B are required for a raw matrix")
    return BipartiteUnitary(d_A, d_B, U, DEFAULT_TOL if tol is None else tol)


def swap_parties(M, d_A: int, d_B: int) -> np.ndarray:
    """Conjugate by SWAP: the operator on ``B (x) A`` equal to ``M`` on ``A (x) B``."""
    M = check_dims(M, d_A, d_B)
    return M.reshape(d_A, d_B, d_A, d_B).transpose(1, 0, 3, 2).reshape(d_A * d_B, d_A * d_B)


def realign(M, d_A: int, d_B: int) -> np.ndarray:
    """Realignment ``R[(i,j),(k,l)] = M[(i,k),(j,l)]``.

    ``kron(A, B)`` maps to ``outer(A.ravel(), B.ravel())`` so the operator
    Schmidt rank equals the matrix rank of the result.
    """
    M = check_dims(M, d_A, d_B)
    return M.reshape(d_A, d_B, d_A, d_B).transpose(0, 2, 1, 3).reshape(d_A * d_A, d_B * d_B)


def unrealign(R, d_A: int, d_B: int) -> np.ndarray:
    """Inverse of :func:`realign`."""
    R = as_matrix(R, "realigned")
    if R.shape != (d_A * d_A, d_B * d_B):
        raise ShapeError(f"realigned matrix has shape {R.shape}, expected {(d_A * d_A, d_B * d_B)}")
    return R.reshape(d_A, d_A, d_B, d_B).transpose(0, 2, 1, 3).reshape(d_A * d_B, d_A * d_B)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``M = sum_r coefficients[r] * kron(a_ops[r], b_ops[r])``.

    ``a_ops`` and ``b_ops`` are each orthonormal under the Hilbert-Schmidt
    inner product.
    """

    coefficients: np.ndarray
    a_ops: tuple
    b_ops: tuple
    d_A: int
    d_B: int

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.d_A * self.d_B,) * 2, dtype=np.complex128)
        for c, a, b in zip(self.coefficients, self.a_ops, self.b_ops):
            out += c * np.kron(a, b)
        return out

    def factors(self, side: str, weighted: bool = False) -> list:
        """Operator factors on ``side`` ('A' or 'B'), optionally scaled by the coefficients."""
        ops = self.a_ops if side == "A" else self.b_ops
        if weighted:
            return [c * op for c, op in zip(self.coefficients, ops)]
        return list(ops)


def _matrix_of(M):
    return M.matrix if isinstance(M, BipartiteUnitary) else M


def schmidt_decompose(M, d_A: int | None = None, d_B: int | None = None, tol: Tolerance | None = None) -> SchmidtDecomposition:
    """Orthogonal operator Schmidt decomposition via the SVD of the realignment.

    ``M`` need not be unitary. Coefficients below ``rank_rel_tol`` times the
    largest one are dropped. Each ``a_ops[r]`` is phased so that its first
    entry of modulus above 1e-8 is real positive; the compensating phase is
    carried by ``b_ops[r]``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    if isinstance(M, BipartiteUnitary):
        d_A, d_B = M.d_A, M.d_B
    M = check_dims(_matrix_of(M), d_A, d_B)
    u, s, vh = np.linalg.svd(realign(M, d_A, d_B), full_matrices=False)
    if s[0] == 0.0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > tol.rank_rel_tol * s[0]))
    a_ops, b_ops = [], []
    for r in range(keep):
        a = u[:, r].copy()
        b = vh[r, :].copy()
        lead = np.flatnonzero(np.abs(a) > _PHASE_FLOOR)[0]
        phase = a[lead] / abs(a[lead])
        a /= phase
        b *= phase
        a_ops.append(a.reshape(d_A, d_A))
        b_ops.append(b.reshape(d_B, d_B))
    return SchmidtDecomposition(s[:keep].copy(), tuple(a_ops), tuple(b_ops), d_A, d_B)


def schmidt_rank(M, d_A: int | None = None, d_B: int | None = None, tol: Tolerance | None = None) -> int:
    """Operator Schmidt rank; 1 exactly for product operators."""
    return schmidt_decompose(M, d_A, d_B, tol).rank


def schmidt_coefficients(M, d_A: int | None = None, d_B: int | None = None) -> np.ndarray:
    """All singular values of the realignment, untruncated, descending."""
    if isinstance(M, BipartiteUnitary):
        d_A, d_B = M.d_A, M.d_B
    return np.linalg.svd(realign(_matrix_of(M), d_A, d_B), compute_uv=False)


def reconstruction_residual(dec: SchmidtDecomposition, M) -> float:
    M = as_matrix(_matrix_of(M))
    return fro(dec.reconstruct() - M) / max(fro(M), np.finfo(float).tiny)
