"""Seeded random instance generators.

Everything takes ``rng``, either a ``numpy.random.Generator`` or a seed;
nothing touches global random state.
"""

from __future__ import annotations

import numpy as np

from .schmidt import BipartiteUnitary

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def ginibre(rows: int, cols: int, rng=None) -> np.ndarray:
    """Complex Gaussian matrix with unit-variance entries."""
    rng = as_rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix with phase fix)."""
    q, r = np.linalg.qr(ginibre(d, d, rng))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_partition(n: int, m: int, rng=None) -> list[list[int]]:
    """Split ``range(n)`` into ``m`` non-empty groups at random."""
    rng = as_rng(rng)
    if not 1 <= m <= n:
        raise ValueError(f"cannot split {n} items into {m} non-empty groups")
    labels = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
    labels = rng.permutation(labels)
    return [sorted(np.flatnonzero(labels == g).tolist()) for g in range(m)]


def projector(indices, d: int) -> np.ndarray:
    P = np.zeros((d, d), dtype=np.complex128)
    P[list(indices), list(indices)] = 1.0
    return P


def controlled_unitary(groups, vs, d_ctrl: int, side: str = "A") -> np.ndarray:
    """``sum_g P_g (x) v_g`` (side A) or ``sum_g v_g (x) P_g`` (side B)."""
    d_t = vs[0].shape[0]
    out = np.zeros((d_ctrl * d_t,) * 2, dtype=np.complex128)
    for idx, v in zip(groups, vs):
        P = projector(idx, d_ctrl)
        out += np.kron(P, v) if side == "A" else np.kron(v, P)
    return out


def local_scramble(M, d_A: int, d_B: int, rng=None) -> np.ndarray:
    """``(W1 (x) W2) M (W3 (x) W4)`` with Haar-random local unitaries."""
    rng = as_rng(rng)
    left = np.kron(haar_unitary(d_A, rng), haar_unitary(d_B, rng))
    right = np.kron(haar_unitary(d_A, rng), haar_unitary(d_B, rng))
    return left @ M @ right


def random_qubit_span_unitary(rng=None) -> np.ndarray:
    """Random unitary in span{I, sigma_x, sigma_z}.

    ``exp(i theta) (i a I + b X + c Z)`` with ``(a, b, c)`` a real unit vector
    is unitary because X and Z anticommute.
    """
    rng = as_rng(rng)
    a, b, c = rng.standard_normal(3)
    n = np.sqrt(a * a + b * b + c * c)
    return np.exp(2j * np.pi * rng.random()) * (1j * a * np.eye(2) + b * PAULI_X + c * PAULI_Z) / n


def rank3_two_by_d(d_B: int, rng=None, scramble: bool = True) -> BipartiteUnitary:
    """Schmidt-rank-3 unitary on ``2 x d_B``.

    ``sum_k U_k (x) |k><k|`` with every ``U_k`` drawn from the fixed
    three-dimensional span{I, X, Z}, then conjugated by random local
    unitaries.
    """
    rng = as_rng(rng)
    vs = [random_qubit_span_unitary(rng) for _ in range(d_B)]
    M = controlled_unitary([[k] for k in range(d_B)], vs, d_B, side="B")
    if scramble:
        M = local_scramble(M, 2, d_B, rng)
    return BipartiteUnitary(2, d_B, M)


def rank3_three_by_d(d_B: int, rng=None, kind: str | None = None, scramble: bool = True) -> BipartiteUnitary:
    """Schmidt-rank-3 unitary on ``3 x d_B``.

    ``kind`` selects the construction (random if ``None``):

    ``"A"``
        ``sum_{k<3} |k><k| (x) V_k`` with Haar ``V_k``.
    ``"B"``
        ``sum_{i<3} W_i (x) P_i`` with Haar 3x3 ``W_i`` and a random
        three-part partition ``P_i`` of the B basis.
    ``"B_block"``
        as ``"B"`` but ``W_i = U_i (+) 1`` with Haar 2x2 ``U_i``; generically
        not controlled from A.
    """
    rng = as_rng(rng)
    if kind is None:
        kind = ("A", "B", "B_block")[int(rng.integers(0, 3))]
    if kind == "A":
        vs = [haar_unitary(d_B, rng) for _ in range(3)]
        M = controlled_unitary([[0], [1], [2]], vs, 3, side="A")
    elif kind in ("B", "B_block"):
        groups = random_partition(d_B, 3, rng)
        if kind == "B":
            ws = [haar_unitary(3, rng) for _ in range(3)]
        else:
            ws = []
            for _ in range(3):
                w = np.zeros((3, 3), dtype=np.complex128)
                w[:2, :2] = haar_unitary(2, rng)
                w[2, 2] = 1.0
                ws.append(w)
        M = controlled_unitary(groups, ws, d_B, side="B")
    else:
        raise ValueError(f"unknown construction kind {kind!r}")
    if scramble:
        M = local_scramble(M, 3, d_B, rng)
    return BipartiteUnitary(3, d_B, M)
