import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_controlled
from nonlocal_unitary.controlled import extract_controlled_form
from nonlocal_unitary.errors import (
    InvalidBipartition,
    InvalidControlledForm,
    InvalidDimension,
    ShapeError,
    UnsupportedShape,
)
from nonlocal_unitary.controlled import ControlGroup, ControlledForm
from nonlocal_unitary.fixtures import cnot, identity, saturation, swap, v324
from nonlocal_unitary.protocol import (
    PureState,
    bell_basis,
    choi_input,
    enumerate_branches,
    entanglement_entropy,
    implement_schmidt_rank3,
    maximally_entangled,
    plan_schmidt_rank3,
    product_state,
    random_state,
    simulate_controlled_protocol,
    simulate_teleport_protocol,
)
from nonlocal_unitary.sampling import haar_unitary, rank3_three_by_d, rank3_two_by_d
from nonlocal_unitary.schmidt import BipartiteUnitary

seeds = st.integers(0, 2**32 - 1)


def direct(U, state):
    """Oracle: apply U on (A, B) by explicit tensor contraction."""
    T = state.tensor()
    ia, ib = state.labels.index("A"), state.labels.index("B")
    T = np.moveaxis(T, (ia, ib), (0, 1))
    shape = T.shape
    out = (U.matrix @ T.reshape(shape[0] * shape[1], -1)).reshape(shape)
    return np.moveaxis(out, (0, 1), (ia, ib))


def fidelity_to_direct(U, state, out):
    want = direct(U, state).reshape(-1)
    got = np.transpose(out.tensor(), [out.labels.index(l) for l in state.labels]).reshape(-1)
    return abs(np.vdot(want, got)) ** 2


def with_reference(U, rng):
    return random_state(("A", "B", "R"), (U.d_A, U.d_B, 3), rng)


# -- states ------------------------------------------------------------------


def test_maximally_entangled():
    assert np.allclose(maximally_entangled(1).amplitudes, [1.0])
    assert entanglement_entropy(maximally_entangled(2), ["a"]) == pytest.approx(1.0, abs=1e-12)
    assert entanglement_entropy(maximally_entangled(3), ["b"]) == pytest.approx(math.log2(3), abs=1e-12)
    with pytest.raises(InvalidDimension):
        maximally_entangled(0)


def test_entropy_of_product_and_errors(rng):
    s = product_state(random_state(("x",), (3,), rng), random_state(("y",), (2,), rng))
    assert entanglement_entropy(s, ["x"]) <= 1e-9
    with pytest.raises(InvalidBipartition):
        entanglement_entropy(s, [])
    with pytest.raises(InvalidBipartition):
        entanglement_entropy(s, ["x", "y"])
    with pytest.raises(InvalidBipartition):
        entanglement_entropy(s, ["z"])


def test_pure_state_contract():
    with pytest.raises(ValueError):
        PureState(("a",), (2,), [1.0, 1.0])
    with pytest.raises(ShapeError):
        PureState(("a",), (3,), [1.0, 0.0])


def test_saturation_output_entropy():
    # (|11> + |22>)/sqrt2 on AA' times uniform superposition on B
    psi = product_state(maximally_entangled(2, ("A", "A'")), PureState.from_vector(("B",), (3,), np.ones(3)))
    out = direct(saturation(), psi)
    state = PureState(psi.labels, psi.dims, out.reshape(-1))
    assert entanglement_entropy(state, ["A", "A'"]) == pytest.approx(math.log2(3), abs=1e-9)


def test_bell_basis_orthonormal():
    for d in (2, 3):
        B, corr = bell_basis(d)
        assert np.allclose(B.conj().T @ B, np.eye(d * d))
        assert len(corr) == d * d


# -- teleportation -------------------------------------------------------------


@pytest.mark.parametrize("gate", [identity, swap, saturation])
def test_teleport_every_branch(gate, rng):
    U = gate()
    state = with_reference(U, rng)
    branches = enumerate_branches("teleport_twice", U, state)
    assert len(branches) == U.d_A ** 4
    total = 0.0
    for out, tr in branches:
        assert fidelity_to_direct(U, state, out) >= 1 - 1e-9
        assert tr.process_fidelity >= 1 - 1e-9
        assert tr.resource_rank == U.d_A ** 2 and tr.ebits == math.log2(U.d_A ** 2)
        assert len(tr.rounds) == 2
        assert tr.ancilla_entropy <= 1e-9
        total += tr.branch_probability
    assert total == pytest.approx(1.0, abs=1e-9)


def test_teleport_identity_corrections_cancel(rng):
    U = identity()
    state = with_reference(U, rng)
    out, tr = simulate_teleport_protocol(U, state, outcomes=[3, 3])
    assert tr.process_fidelity == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.abs(np.vdot(state.amplitudes, out.amplitudes)), 1.0)


def test_teleport_dimension_mismatch(rng):
    with pytest.raises(ShapeError):
        simulate_teleport_protocol(swap(), random_state(("A", "B"), (2, 3), rng))


@given(seeds)
def test_teleport_sampled_branches_qutrit(seed):
    rng = np.random.default_rng(seed)
    U = BipartiteUnitary(3, 3, haar_unitary(9, rng))
    out, tr = simulate_teleport_protocol(U, with_reference(U, rng), seed=seed)
    assert tr.process_fidelity >= 1 - 1e-9


# -- controlled protocol -------------------------------------------------------


def test_controlled_cnot_every_branch(rng):
    form = extract_controlled_form(cnot(), "A", seed=0)
    state = with_reference(cnot(), rng)
    branches = enumerate_branches("controlled_A", form, state)
    assert len(branches) == 4
    for out, tr in branches:
        assert fidelity_to_direct(cnot(), state, out) >= 1 - 1e-9
        assert tr.ebits == 1.0 and tr.resource_rank == 2
        assert tr.ancilla_entropy <= 1e-9


def test_controlled_v324_every_branch(rng):
    form = extract_controlled_form(v324(), "B", seed=0)
    state = with_reference(v324(), rng)
    branches = enumerate_branches("controlled_B", form, state)
    assert len(branches) == 16
    assert sum(tr.branch_probability for _, tr in branches) == pytest.approx(1.0)
    for out, tr in branches:
        assert fidelity_to_direct(v324(), state, out) >= 1 - 1e-9
        assert tr.protocol == "controlled_B" and tr.ebits == 2.0


def test_local_unitary_uses_no_resource(rng):
    U = BipartiteUnitary(2, 3, np.kron(haar_unitary(2, rng), haar_unitary(3, rng)))
    form = extract_controlled_form(U, "A", seed=0)
    assert form.n_groups == 1
    out, tr = simulate_controlled_protocol(form, with_reference(U, rng))
    assert tr.resource_rank == 1 and tr.ebits == 0.0 and tr.rounds == ()
    assert tr.process_fidelity >= 1 - 1e-9


@given(seeds, st.sampled_from("AB"), st.integers(2, 4), st.integers(2, 3), st.integers(2, 4))
def test_controlled_random_roundtrip(seed, side, d_ctrl, d_target, m):
    rng = np.random.default_rng(seed)
    U, _, _ = random_controlled(rng, side, d_ctrl, d_target, min(m, d_ctrl))
    form = extract_controlled_form(U, side, seed=seed)
    state = with_reference(U, rng)
    for out, tr in enumerate_branches(f"controlled_{side}", form, state):
        assert fidelity_to_direct(U, state, out) >= 1 - 1e-9
        assert tr.process_fidelity >= 1 - 1e-9
        assert tr.ebits == math.log2(form.n_groups)


def test_invalid_form_rejected(rng):
    form = extract_controlled_form(cnot(), "A", seed=0)
    bad = ControlledForm("A", form.q, form.r, (ControlGroup((0,), np.eye(2)),))
    with pytest.raises(InvalidControlledForm):
        simulate_controlled_protocol(bad, with_reference(cnot(), rng))


def test_large_branch_space_is_sampled(rng):
    U = BipartiteUnitary(3, 3, haar_unitary(9, rng))
    state = with_reference(U, rng)
    assert len(enumerate_branches("teleport_twice", U, state)) == 81
    branches = enumerate_branches("teleport_twice", U, state, seed=1, limit=10)
    assert len(branches) == 100
    assert min(tr.process_fidelity for _, tr in branches) >= 1 - 1e-9


# -- Schmidt-rank-3 pipeline ---------------------------------------------------


def test_saturation_costs_log2_3(rng):
    psi = product_state(maximally_entangled(2, ("A", "A'")), PureState.from_vector(("B",), (3,), np.ones(3)))
    out, tr = implement_schmidt_rank3(saturation(), psi, seed=0)
    assert tr.resource_rank == 3 and tr.ebits == math.log2(3)
    assert entanglement_entropy(out, ["A", "A'"]) == pytest.approx(math.log2(3), abs=1e-9)
    assert tr.process_fidelity >= 1 - 1e-9


def test_v324_within_bound(rng):
    out, tr = implement_schmidt_rank3(v324(), with_reference(v324(), rng), seed=0)
    assert tr.resource_rank <= min(4, 4)
    assert tr.process_fidelity >= 1 - 1e-9


def test_three_by_five_controlled_from_a(rng):
    U, _, _ = random_controlled(rng, "A", 3, 5, 3)
    state = with_reference(U, rng)
    out, tr = implement_schmidt_rank3(U, state, seed=0)
    assert tr.resource_rank == 3
    assert fidelity_to_direct(U, state, out) >= 1 - 1e-9
    assert tr.process_fidelity >= 1 - 1e-9


@given(seeds, st.integers(3, 6))
def test_two_by_d_bound(seed, d_B):
    rng = np.random.default_rng(seed)
    U = rank3_two_by_d(d_B, rng)
    routes = plan_schmidt_rank3(U, seed=seed)
    assert routes[0].resource_rank <= min(4, d_B)
    _, tr = implement_schmidt_rank3(U, with_reference(U, rng), seed=seed)
    assert tr.process_fidelity >= 1 - 1e-9


@given(seeds, st.integers(3, 5))
def test_three_by_d_bound(seed, d_B):
    rng = np.random.default_rng(seed)
    U = rank3_three_by_d(d_B, rng)
    assert plan_schmidt_rank3(U, seed=seed)[0].resource_rank <= min(9, d_B)


def test_preconditions(rng):
    with pytest.raises(UnsupportedShape):
        implement_schmidt_rank3(swap(), with_reference(swap(), rng))
    with pytest.raises(UnsupportedShape):
        implement_schmidt_rank3(cnot(), with_reference(cnot(), rng))
    U = BipartiteUnitary(4, 4, haar_unitary(16, rng))
    with pytest.raises(UnsupportedShape):
        implement_schmidt_rank3(U, with_reference(U, rng))


def test_choi_input_shape():
    s = choi_input(2, 3)
    assert s.labels == ("A", "RA", "B", "RB")
    assert entanglement_entropy(s, ["A", "RA"]) == pytest.approx(0.0, abs=1e-12)


def test_missing_controlled_side_is_reported(monkeypatch, rng):
    import nonlocal_unitary.protocol as proto
    from nonlocal_unitary.controlled import ControlledCheck
    from nonlocal_unitary.errors import TheoremViolationReport

    monkeypatch.setattr(proto, "check_controlled", lambda *a, **k: ControlledCheck(False, ((), ()), 1.0))
    with pytest.raises(TheoremViolationReport):
        implement_schmidt_rank3(saturation(), with_reference(saturation(), rng))
