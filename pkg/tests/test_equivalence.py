import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import same_up_to_phase
from nonlocal_unitary.controlled import ControlledForm
from nonlocal_unitary.equivalence import SLWitness, controlled_from_sl_witness, sl_to_lu
from nonlocal_unitary.errors import BadBlockSupport, NotInvertible, ShapeError, WitnessResidualTooLarge
from nonlocal_unitary.linalg import unitarity_residual
from nonlocal_unitary.sampling import controlled_unitary, ginibre, haar_unitary

seeds = st.integers(0, 2**32 - 1)


def shift_instance(rng, d, extra_dims=()):
    """``V = sum_j |j+1><j| (x) V_j`` with diagonal non-unitary ``s_1``, ``t_1``.

    ``lambda_{j+1} lambda'_j = 1`` makes ``s_1 V t_1 = V`` while neither
    scaling is unitary.
    """
    d_B = 2
    shift = np.roll(np.eye(d), 1, axis=0)
    V = sum(np.kron(np.outer(shift[:, j], np.eye(d)[j]), haar_unitary(d_B, rng)) for j in range(d))
    for e in extra_dims:
        V = np.kron(V, haar_unitary(e, rng))
    lam = np.exp(rng.normal(size=d))
    lam_p = 1 / np.roll(lam, -1)  # lam_p[j] = 1 / lam[j+1]
    s = [np.diag(lam), np.eye(d_B)] + [np.eye(e) for e in extra_dims]
    t = [np.diag(lam_p), np.eye(d_B)] + [np.eye(e) for e in extra_dims]
    return V, SLWitness(s, t)


def test_shift_construction_is_a_valid_nonunitary_witness(rng):
    V, w = shift_instance(rng, 3)
    U = w.apply(V)
    assert unitarity_residual(U) <= 1e-12 and np.allclose(U, V)
    assert unitarity_residual(w.s_ops[0]) > 1e-3


@given(seeds, st.integers(2, 4), st.sampled_from([(), (2,)]))
def test_sl_to_lu_shift(seed, d, extra):
    rng = np.random.default_rng(seed)
    V, w = shift_instance(rng, d, extra)
    U = w.apply(V)
    lu = sl_to_lu(U, V, w)
    assert lu.residual <= 1e-9
    assert lu.internal_residual <= 1e-9
    for op in lu.q_ops + lu.r_ops:
        assert unitarity_residual(op) <= 1e-9
    # untouched parties stay exactly identity
    for q, r in zip(lu.q_ops[1:], lu.r_ops[1:]):
        assert np.array_equal(q, np.eye(q.shape[0])) and np.array_equal(r, np.eye(r.shape[0]))


@given(seeds, st.lists(st.integers(2, 3), min_size=2, max_size=3))
def test_sl_to_lu_unitary_witness_is_idempotent(seed, dims):
    rng = np.random.default_rng(seed)
    V = haar_unitary(int(np.prod(dims)), rng)
    s = [haar_unitary(d, rng) for d in dims]
    t = [haar_unitary(d, rng) for d in dims]
    w = SLWitness(s, t)
    U = w.apply(V)
    lu = sl_to_lu(U, V, w)
    assert np.linalg.norm(lu.apply(V) - w.apply(V)) <= 1e-9


@given(seeds)
def test_sl_to_lu_general_scaled_witness(seed):
    # U = (S1 x S2) V (T1 x T2) with S_i = c_i * unitary is still a valid witness
    rng = np.random.default_rng(seed)
    V = haar_unitary(6, rng)
    c = np.exp(rng.normal())
    s = [c * haar_unitary(2, rng), haar_unitary(3, rng)]
    t = [haar_unitary(2, rng) / c, haar_unitary(3, rng)]
    w = SLWitness(s, t)
    lu = sl_to_lu(w.apply(V), V, w)
    assert lu.residual <= 1e-9


def test_identity_witness_gives_identity(rng):
    V = haar_unitary(4, rng)
    w = SLWitness([np.eye(2), np.eye(2)], [np.eye(2), np.eye(2)])
    lu = sl_to_lu(V, V, w)
    assert all(np.array_equal(q, np.eye(2)) for q in lu.q_ops + lu.r_ops)
    assert lu.residual == 0.0


def test_sl_to_lu_errors(rng):
    V = haar_unitary(4, rng)
    w = SLWitness([haar_unitary(2, rng), np.eye(2)], [np.eye(2), np.eye(2)])
    with pytest.raises(WitnessResidualTooLarge):
        sl_to_lu(V, V, w)
    sing = SLWitness([np.diag([1.0, 1e-12]), np.eye(2)], [np.eye(2), np.eye(2)])
    with pytest.raises(NotInvertible):
        sl_to_lu(V, V, sing)
    with pytest.raises(ShapeError):
        SLWitness([np.eye(2)], [np.eye(2)])
    with pytest.raises(ShapeError):
        sl_to_lu(np.eye(6), np.eye(6), SLWitness([np.eye(2)] * 2, [np.eye(2)] * 2))


# -- controlled forms from SL witnesses ----------------------------------------


def test_trivial_witness_returns_input_form(rng):
    vs = [haar_unitary(2, rng) for _ in range(3)]
    U = controlled_unitary([[0], [1], [2]], vs, 3)
    P = [np.diag(np.eye(3)[j]) for j in range(3)]
    w = SLWitness([np.eye(3), np.eye(2)], [np.eye(3), np.eye(2)])
    form = controlled_from_sl_witness(U, list(zip(P, vs)), P, w, d_A=3, d_B=2)
    assert isinstance(form, ControlledForm)
    assert form.residual <= 1e-9
    assert same_up_to_phase(vs, [g.v for g in form.groups])


def test_compensating_diagonal_scalings(rng):
    d, d_B = 3, 2
    vs = [haar_unitary(d_B, rng) for _ in range(d)]
    U = controlled_unitary([[j] for j in range(d)], vs, d)
    sd = np.exp(rng.normal(size=d))
    S, T = np.diag(sd), np.diag(1 / sd)
    P = [np.diag(np.eye(d)[j]) for j in range(d)]
    w = SLWitness([S, np.eye(d_B)], [T, np.eye(d_B)])
    form = controlled_from_sl_witness(U, list(zip(P, vs)), P, w, d_A=d, d_B=d_B)
    assert form.residual <= 1e-9
    for g in form.groups:
        assert unitarity_residual(g.v) <= 1e-9


@given(seeds, st.sampled_from([(1, 2), (2, 1), (1, 1, 1), (2, 2)]))
def test_block_supported_witness(seed, sizes):
    """Non-diagonal ``R_j`` on blocks with non-unitary witnesses on both parties.

    With ``s_A = (+) Y_j``, ``t_A = (+) Z_j``, ``R_j = Y_j^-1 P_j Z_j^-1`` and
    ``V_j = a^-1 v_j b^-1`` the image is ``sum_j P_j (x) v_j``.
    """
    rng = np.random.default_rng(seed)
    d_A, d_B = sum(sizes), 2
    edges = np.concatenate([[0], np.cumsum(sizes)])
    P = [np.diag([1.0 if a <= i < b else 0.0 for i in range(d_A)]) for a, b in zip(edges[:-1], edges[1:])]
    Y = np.zeros((d_A, d_A), complex)
    Z = np.zeros((d_A, d_A), complex)
    for a, b in zip(edges[:-1], edges[1:]):
        Y[a:b, a:b] = ginibre(b - a, b - a, rng) + 2 * np.eye(b - a)
        Z[a:b, a:b] = ginibre(b - a, b - a, rng) + 2 * np.eye(b - a)
    sa, sb = ginibre(d_B, d_B, rng) + 2 * np.eye(d_B), ginibre(d_B, d_B, rng) + 2 * np.eye(d_B)
    vs = [haar_unitary(d_B, rng) for _ in sizes]
    Yi, Zi = np.linalg.inv(Y), np.linalg.inv(Z)
    terms = [(Yi @ Pj @ Zi, np.linalg.inv(sa) @ v @ np.linalg.inv(sb)) for Pj, v in zip(P, vs)]
    W1, W2 = haar_unitary(d_A, rng), haar_unitary(d_B, rng)
    target = sum(np.kron(Pj, v) for Pj, v in zip(P, vs))
    U = np.kron(W1, W2) @ target
    w = SLWitness([W1 @ Y, W2 @ sa], [Z, sb])
    form = controlled_from_sl_witness(U, terms, P, w, d_A=d_A, d_B=d_B)
    assert form.residual <= 1e-9
    assert form.n_groups == len(sizes)


def test_bad_block_support(rng):
    P = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    terms = [(np.ones((2, 2)), np.eye(2)), (P[1], np.eye(2))]
    w = SLWitness([np.eye(2)] * 2, [np.eye(2)] * 2)
    with pytest.raises(BadBlockSupport):
        controlled_from_sl_witness(np.eye(4), terms, P, w, d_A=2, d_B=2)
    overlapping = [np.diag([1.0, 0.0]), np.diag([1.0, 0.0])]
    with pytest.raises(BadBlockSupport):
        controlled_from_sl_witness(np.eye(4), [(P[0], np.eye(2)), (P[0], np.eye(2))], overlapping, w, d_A=2, d_B=2)


def test_bad_witness_residual(rng):
    P = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    terms = [(P[0], np.eye(2)), (P[1], haar_unitary(2, rng))]
    w = SLWitness([np.eye(2)] * 2, [np.eye(2)] * 2)
    with pytest.raises(WitnessResidualTooLarge):
        controlled_from_sl_witness(np.eye(4), terms, P, w, d_A=2, d_B=2)


def test_rank_deficient_term_near_boundary(rng):
    # R_0 leaks outside P_0 by 1e-6: rejected; by 1e-14: accepted
    P = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    vs = [haar_unitary(2, rng) for _ in range(2)]
    U = sum(np.kron(Pj, v) for Pj, v in zip(P, vs))
    w = SLWitness([np.eye(2)] * 2, [np.eye(2)] * 2)
    leak = np.array([[0, 1.0], [0, 0]])
    for eps, ok in ((1e-6, False), (1e-14, True)):
        terms = [(P[0] + eps * leak, vs[0]), (P[1], vs[1])]
        if ok:
            assert controlled_from_sl_witness(U, terms, P, w, d_A=2, d_B=2).residual <= 1e-9
        else:
            with pytest.raises(BadBlockSupport):
                controlled_from_sl_witness(U, terms, P, w, d_A=2, d_B=2)
