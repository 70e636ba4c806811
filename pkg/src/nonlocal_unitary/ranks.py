"""Partial transpose and the rank inequality for Kronecker sums.

For ``M = sum_{i<K} R_i (x) S_i`` the question is whether

    rank(sum_i R_i (x) S_i^T) <= K * rank(sum_i R_i (x) S_i).

It is trivially an equality for ``K = 1``, known for ``K = 2``, and open in
general. For unitaries with ``d_A <= 3`` and Schmidt rank at most 3 it
reduces to ``rank(U^Gamma) == rank(U)``, which holds because such gates are
controlled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controlled import check_controlled
from .errors import ShapeError, TheoremViolationReport, UnsupportedShape
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, rank_report
from .sampling import as_rng, ginibre
from .schmidt import as_bipartite, check_dims, schmidt_rank


@dataclass(frozen=True)
class KroneckerSum:
    """``sum_i r_ops[i] (x) s_ops[i]``."""

    r_ops: tuple = field(repr=False)
    s_ops: tuple = field(repr=False)

    def __post_init__(self):
        r = tuple(as_matrix(op, f"r_ops[{i}]") for i, op in enumerate(self.r_ops))
        s = tuple(as_matrix(op, f"s_ops[{i}]") for i, op in enumerate(self.s_ops))
        if not r or len(r) != len(s):
            raise ShapeError("r_ops and s_ops must be non-empty and of equal length")
        if len({op.shape for op in r}) != 1 or len({op.shape for op in s}) != 1:
            raise ShapeError("shapes must be uniform within r_ops and within s_ops")
        object.__setattr__(self, "r_ops", r)
        object.__setattr__(self, "s_ops", s)

    @property
    def K(self) -> int:
        return len(self.r_ops)

    def matrix(self, transpose: str | None = None) -> np.ndarray:
        """The sum, optionally with every ``R_i`` (``"R"``) or ``S_i`` (``"S"``) transposed."""
        out = 0
        for R, S in zip(self.r_ops, self.s_ops):
            R = R.T if transpose == "R" else R
            S = S.T if transpose == "S" else S
            out = out + np.kron(R, S)
        return out


def partial_transpose(M, d_A: int, d_B: int, side: str = "B") -> np.ndarray:
    """Transpose the ``side`` factor: ``kron(X, Y) -> kron(X, Y^T)`` for side B."""
    M = as_matrix(M, square=True)
    check_dims(M, d_A, d_B)
    T = M.reshape(d_A, d_B, d_A, d_B)
    if side == "B":
        T = T.transpose(0, 3, 2, 1)
    elif side == "A":
        T = T.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return T.reshape(d_A * d_B, d_A * d_B)


@dataclass(frozen=True)
class RankInequalityReport:
    K: int
    lhs_rank: int
    rhs_rank: int
    holds: bool
    # rank(sum R_i^T (x) S_i) agrees with lhs_rank
    symmetric_ok: bool
    # relative singular values just above / below the rank cut, per side
    lhs_gap: tuple
    rhs_gap: tuple

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "lhs_rank": self.lhs_rank,
            "rhs_rank": self.rhs_rank,
            "holds": self.holds,
            "symmetric_ok": self.symmetric_ok,
            "lhs_gap": list(self.lhs_gap),
            "rhs_gap": list(self.rhs_gap),
        }


def check_rank_inequality(ks: KroneckerSum, tol: Tolerance | None = None) -> RankInequalityReport:
    """Compare ``rank(sum R_i (x) S_i^T)`` with ``K * rank(sum R_i (x) S_i)``.

    A violation is reported through ``holds = False``, never raised.
    """
    tol = DEFAULT_TOL if tol is None else tol
    lhs = rank_report(ks.matrix("S"), tol)
    rhs = rank_report(ks.matrix(), tol)
    sym = rank_report(ks.matrix("R"), tol)
    return RankInequalityReport(
        K=ks.K,
        lhs_rank=lhs.rank,
        rhs_rank=rhs.rank,
        holds=lhs.rank <= ks.K * rhs.rank,
        symmetric_ok=sym.rank == lhs.rank,
        lhs_gap=(lhs.above, lhs.below),
        rhs_gap=(rhs.above, rhs.below),
    )


def _low_rank(rows: int, cols: int, rng) -> np.ndarray:
    r = int(rng.integers(1, min(rows, cols) + 1))
    return ginibre(rows, r, rng) @ ginibre(r, cols, rng)


def random_kronecker_sum(K: int, rng=None, sizes=(2, 6)) -> KroneckerSum:
    """Random instance: ``m1, n1, m2, n2`` uniform in ``sizes`` (inclusive) and
    each ``R_i``, ``S_i`` a complex Gaussian product of random rank."""
    rng = as_rng(rng)
    lo, hi = sizes
    m1, n1, m2, n2 = (int(x) for x in rng.integers(lo, hi + 1, 4))
    r_ops = [_low_rank(m1, n1, rng) for _ in range(K)]
    s_ops = [_low_rank(m2, n2, rng) for _ in range(K)]
    return KroneckerSum(r_ops, s_ops)


@dataclass(frozen=True)
class UnitaryRankReport:
    rank_pt: int
    rank_u: int
    equal: bool
    side: str | None
    schmidt_rank: int
    experimental: bool

    def to_dict(self) -> dict:
        return dict(vars(self))


def verify_rank3_unitary_equality(U, tol: Tolerance | None = None, seed=None, experimental: bool = False, d_A=None, d_B=None) -> UnitaryRankReport:
    """Check ``rank(U^Gamma) == rank(U)`` for a gate of Schmidt rank at most 3.

    With ``d_A <= 3`` the gate must be controlled from some side and the
    equality must hold; either failure raises
    :class:`TheoremViolationReport`. ``experimental=True`` admits
    ``d_A > 3`` and only reports. ``seed`` is accepted for interface symmetry;
    the check itself is deterministic.
    """
    tol = DEFAULT_TOL if tol is None else tol
    U = as_bipartite(U, d_A, d_B, tol)
    sr = schmidt_rank(U, tol=tol)
    if sr > 3:
        raise UnsupportedShape(f"Schmidt rank {sr} exceeds 3")
    if U.d_A > 3 and not experimental:
        raise UnsupportedShape(f"d_A = {U.d_A} > 3 needs experimental=True")
    side = None
    for s in ("A", "B"):
        if check_controlled(U, s, tol).is_controlled:
            side = s
            break
    rank_pt = rank_report(partial_transpose(U.matrix, U.d_A, U.d_B), tol).rank
    rank_u = U.dim
    report = UnitaryRankReport(rank_pt, rank_u, rank_pt == rank_u, side, sr, experimental)
    if not experimental:
        if side is None:
            raise TheoremViolationReport(f"Schmidt-rank-{sr} gate on {U.d_A}x{U.d_B} is not controlled from either side")
        if not report.equal:
            raise TheoremViolationReport(f"rank(U^Gamma) = {rank_pt} differs from rank(U) = {rank_u}")
    return report
