import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_controlled
from nonlocal_unitary.errors import ShapeError, TheoremViolationReport, UnsupportedShape
from nonlocal_unitary.fixtures import cnot, swap, v324
from nonlocal_unitary.ranks import (
    KroneckerSum,
    check_rank_inequality,
    partial_transpose,
    random_kronecker_sum,
    verify_rank3_unitary_equality,
)
from nonlocal_unitary.sampling import ginibre, haar_unitary
from nonlocal_unitary.schmidt import BipartiteUnitary

seeds = st.integers(0, 2**32 - 1)


def partial_transpose_bruteforce(M, dA, dB):
    # oracle: <i k| M^Gamma |j l> = <i l| M |j k>
    out = np.zeros_like(M)
    for i in range(dA):
        for j in range(dA):
            for k in range(dB):
                for l in range(dB):
                    out[i * dB + k, j * dB + l] = M[i * dB + l, j * dB + k]
    return out


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_partial_transpose_matches_bruteforce(seed, dA, dB):
    M = ginibre(dA * dB, dA * dB, np.random.default_rng(seed))
    assert np.array_equal(partial_transpose(M, dA, dB), partial_transpose_bruteforce(M, dA, dB))
    assert np.array_equal(partial_transpose(partial_transpose(M, dA, dB), dA, dB), M)
    assert np.array_equal(partial_transpose(partial_transpose(M, dA, dB, "A"), dA, dB, "A"), M)
    # full transpose = both partial transposes
    assert np.array_equal(partial_transpose(partial_transpose(M, dA, dB, "A"), dA, dB, "B"), M.T)


def test_partial_transpose_examples(rng):
    A, B = ginibre(2, 2, rng), ginibre(3, 3, rng)
    assert np.array_equal(partial_transpose(np.kron(A, B), 2, 3), np.kron(A, B.T))
    phi = np.eye(2).reshape(-1) / np.sqrt(2)
    lam = np.linalg.eigvalsh(partial_transpose(np.outer(phi, phi), 2, 2))
    assert lam.min() == pytest.approx(-0.5)
    assert np.array_equal(partial_transpose(v324().matrix, 2, 4), v324().matrix)
    with pytest.raises(ShapeError):
        partial_transpose(np.eye(5), 2, 2)


def test_kronecker_sum_contract(rng):
    with pytest.raises(ShapeError):
        KroneckerSum([np.eye(2)], [])
    with pytest.raises(ShapeError):
        KroneckerSum([np.eye(2), np.eye(3)], [np.eye(2), np.eye(2)])
    ks = KroneckerSum([ginibre(2, 3, rng)], [ginibre(4, 2, rng)])
    assert ks.K == 1 and ks.matrix().shape == (8, 6) and ks.matrix("S").shape == (4, 12)


@given(seeds)
def test_k1_equality(seed):
    rep = check_rank_inequality(random_kronecker_sum(1, np.random.default_rng(seed)))
    assert rep.lhs_rank == rep.rhs_rank and rep.holds and rep.symmetric_ok


@given(seeds, st.integers(2, 3))
def test_inequality_and_symmetry(seed, K):
    rep = check_rank_inequality(random_kronecker_sum(K, np.random.default_rng(seed)))
    assert rep.holds and rep.symmetric_ok
    # audited gap: kept singular values are far above the cut
    assert rep.lhs_gap[0] > 1e-9 and rep.rhs_gap[0] > 1e-9


@pytest.mark.parametrize("d", [2, 3])
def test_tight_instance(d):
    # sum E_ij (x) E_ij = d |Phi><Phi| has rank 1; its partial transpose is SWAP
    E = [np.outer(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(d)]
    rep = check_rank_inequality(KroneckerSum(E, E))
    assert (rep.K, rep.lhs_rank, rep.rhs_rank) == (d * d, d * d, 1)
    assert rep.holds


def test_unitary_equality_fixtures():
    rep = verify_rank3_unitary_equality(v324())
    assert rep.rank_pt == rep.rank_u == 8 and rep.side == "B"
    rep = verify_rank3_unitary_equality(cnot())
    assert rep.rank_pt == rep.rank_u == 4
    with pytest.raises(UnsupportedShape):
        verify_rank3_unitary_equality(swap())


@given(seeds, st.sampled_from("AB"))
def test_unitary_equality_random_3x4(seed, side):
    rng = np.random.default_rng(seed)
    d_ctrl, d_t = (3, 4) if side == "A" else (4, 3)
    U, _, _ = random_controlled(rng, side, d_ctrl, d_t, 3)
    rep = verify_rank3_unitary_equality(U)
    assert rep.equal and rep.rank_u == 12


def test_experimental_mode_reports(rng):
    U, _, _ = random_controlled(rng, "A", 4, 3, 3)
    with pytest.raises(UnsupportedShape):
        verify_rank3_unitary_equality(U)
    rep = verify_rank3_unitary_equality(U, experimental=True)
    assert rep.experimental and rep.equal


def test_anomaly_is_raised(monkeypatch):
    import nonlocal_unitary.ranks as ranks
    from nonlocal_unitary.controlled import ControlledCheck

    monkeypatch.setattr(ranks, "check_controlled", lambda *a, **k: ControlledCheck(False, ((), ()), 1.0))
    with pytest.raises(TheoremViolationReport):
        verify_rank3_unitary_equality(v324())
