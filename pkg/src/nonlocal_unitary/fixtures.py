"""Gallery of worked-example gates with their known structural facts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sampling import PAULI_X, PAULI_Y, PAULI_Z, controlled_unitary
from .schmidt import BipartiteUnitary

I2 = np.eye(2, dtype=np.complex128)


def _basis_proj(k: int, d: int) -> np.ndarray:
    P = np.zeros((d, d), dtype=np.complex128)
    P[k, k] = 1.0
    return P


def _pad(op2: np.ndarray, d: int = 3) -> np.ndarray:
    out = np.zeros((d, d), dtype=np.complex128)
    out[:2, :2] = op2
    return out


def swap() -> BipartiteUnitary:
    M = np.zeros((4, 4), dtype=np.complex128)
    for i in range(2):
        for k in range(2):
            M[k * 2 + i, i * 2 + k] = 1.0
    return BipartiteUnitary(2, 2, M)


def cnot() -> BipartiteUnitary:
    return BipartiteUnitary(2, 2, controlled_unitary([[0], [1]], [I2, PAULI_X], 2, side="A"))


def identity() -> BipartiteUnitary:
    return BipartiteUnitary(2, 2, np.eye(4))


def v324() -> BipartiteUnitary:
    """Schmidt rank 3 on 2x4, controlled from B with four distinct terms."""
    vs = [I2, PAULI_X, PAULI_Z, (PAULI_X + PAULI_Z) / np.sqrt(2)]
    return BipartiteUnitary(2, 4, controlled_unitary([[k] for k in range(4)], vs, 4, side="B"))


def bcu_qutrit_qubit() -> BipartiteUnitary:
    """SWAP on the first two levels of the qutrit, identity on the third."""
    M = 0.5 * (
        np.kron(_pad(I2), I2)
        + np.kron(_pad(PAULI_X), PAULI_X)
        + np.kron(_pad(PAULI_Y), PAULI_Y)
        + np.kron(_pad(PAULI_Z), PAULI_Z)
    ) + np.kron(_basis_proj(2, 3), I2)
    return BipartiteUnitary(3, 2, M)


def _block_plus_one(U2):
    out = _pad(U2)
    out[2, 2] = 1.0
    return out


def example_3x3() -> BipartiteUnitary:
    """``sum_i V_i (x) |i><i|`` with ``V_i = U_i (+) |3><3|`` and ``U_i = I, X, Z``."""
    vs = [_block_plus_one(u) for u in (I2, PAULI_X, PAULI_Z)]
    return BipartiteUnitary(3, 3, controlled_unitary([[0], [1], [2]], vs, 3, side="B"))


def example_3x4() -> BipartiteUnitary:
    """The ``3 x d_B`` variant with B controlling through a rank-2 projector."""
    vs = [_block_plus_one(u) for u in (I2, PAULI_X, PAULI_Z)]
    return BipartiteUnitary(3, 4, controlled_unitary([[0], [1], [2, 3]], vs, 4, side="B"))


def saturation() -> BipartiteUnitary:
    """``I (x) |1><1| + X (x) |2><2| + Y (x) |3><3|`` on 2x3."""
    return BipartiteUnitary(2, 3, controlled_unitary([[0], [1], [2]], [I2, PAULI_X, PAULI_Y], 3, side="B"))


@dataclass(frozen=True)
class Fixture:
    name: str
    builder: Callable[[], BipartiteUnitary]
    description: str
    # keys: schmidt_rank, controlled_A, controlled_B, groups_A, groups_B,
    # bcu_A, bcu_B (block sizes or None), partial_transpose_rank
    expected: dict = field(default_factory=dict)


FIXTURES: dict[str, Fixture] = {
    f.name: f
    for f in [
        Fixture("identity", identity, "two-qubit identity", dict(
            schmidt_rank=1, controlled_A=True, controlled_B=True, groups_A=1, groups_B=1,
            partial_transpose_rank=4)),
        Fixture("cnot", cnot, "CNOT, control on A", dict(
            schmidt_rank=2, controlled_A=True, controlled_B=True, groups_A=2, groups_B=2,
            bcu_A=(1, 1), partial_transpose_rank=4)),
        Fixture("swap", swap, "two-qubit SWAP", dict(
            schmidt_rank=4, controlled_A=False, controlled_B=False, bcu_A=None, bcu_B=None)),
        Fixture("v324", v324, "rank-3 gate on 2x4 controlled from B with four terms", dict(
            schmidt_rank=3, controlled_A=False, controlled_B=True, groups_B=4,
            partial_transpose_rank=8)),
        Fixture("bcu_qutrit_qubit", bcu_qutrit_qubit, "qutrit-qubit block-controlled gate that is not controlled", dict(
            schmidt_rank=4, controlled_A=False, controlled_B=False, bcu_A=(2, 1))),
        Fixture("example_3x3", example_3x3, "rank-3 gate on 3x3 controlled from B only", dict(
            schmidt_rank=3, controlled_A=False, controlled_B=True, groups_B=3,
            partial_transpose_rank=9)),
        Fixture("example_3x4", example_3x4, "rank-3 gate on 3x4, B controls with three terms", dict(
            schmidt_rank=3, controlled_A=False, controlled_B=True, groups_B=3,
            partial_transpose_rank=12)),
        Fixture("saturation", saturation, "rank-3 gate on 2x3 whose entanglement cost is log2(3)", dict(
            schmidt_rank=3, controlled_A=False, controlled_B=True, groups_B=3,
            partial_transpose_rank=6)),
    ]
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}") from None
