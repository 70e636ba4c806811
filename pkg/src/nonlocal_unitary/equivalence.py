"""Stochastic-local (SL) to local-unitary equivalence.

If ``U = (S_1 (x) ... (x) S_p) V (T_1 (x) ... (x) T_p)`` with invertible
``S_i``, ``T_i`` and both ``U`` and ``V`` unitary, then the unitary polar
factors of the ``S_i`` and ``T_i`` already do the job. With sorted SVDs
``S_i = E_i C_i F_i`` and ``T_i = G_i D_i H_i`` the local unitaries are
``Q_i = E_i F_i`` and ``R_i = G_i H_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .controlled import ControlledForm, _with_residual, build_controlled_form
from .errors import (
    BadBlockSupport,
    InternalContractViolation,
    NotInvertible,
    NotUnitary,
    ShapeError,
    WitnessResidualTooLarge,
)
from .linalg import DEFAULT_TOL, Tolerance, as_matrix, fro, kron_all, unitarity_residual
from .schmidt import BipartiteUnitary, as_bipartite

MAX_CONDITION = 1e8


@dataclass(frozen=True)
class SLWitness:
    """Invertible local operators with ``U = (x)s_ops . V . (x)t_ops``."""

    s_ops: tuple
    t_ops: tuple

    def __post_init__(self):
        s = tuple(as_matrix(op, f"s_ops[{i}]", square=True) for i, op in enumerate(self.s_ops))
        t = tuple(as_matrix(op, f"t_ops[{i}]", square=True) for i, op in enumerate(self.t_ops))
        if len(s) != len(t) or len(s) < 2:
            raise ShapeError("SLWitness needs the same number (>= 2) of s and t operators")
        for i, (a, b) in enumerate(zip(s, t)):
            if a.shape != b.shape:
                raise ShapeError(f"party {i}: s and t have different shapes {a.shape}, {b.shape}")
        object.__setattr__(self, "s_ops", s)
        object.__setattr__(self, "t_ops", t)

    @property
    def parties(self) -> int:
        return len(self.s_ops)

    @property
    def dims(self) -> tuple:
        return tuple(op.shape[0] for op in self.s_ops)

    def apply(self, V) -> np.ndarray:
        return kron_all(self.s_ops) @ V @ kron_all(self.t_ops)


@dataclass(frozen=True)
class LocalEquivalenceWitness:
    """``U = (x)q_ops . V . (x)r_ops`` with unitary ``q_ops``, ``r_ops``."""

    q_ops: tuple = field(repr=False)
    r_ops: tuple = field(repr=False)
    residual: float
    # ||U' - V'||_F of the intermediate identity (rotated frames)
    internal_residual: float

    def apply(self, V) -> np.ndarray:
        return kron_all(self.q_ops) @ V @ kron_all(self.r_ops)


def _sorted_svd(S):
    """``S = E diag(c) F`` with ``c`` non-increasing (numpy already sorts)."""
    E, c, F = np.linalg.svd(S)
    return E, c, F


def _is_identity(op) -> bool:
    return op.shape[0] == op.shape[1] and np.array_equal(op, np.eye(op.shape[0]))


def _check_unitary(M, name, tol):
    res = unitarity_residual(M)
    if res > tol.unitarity_tol:
        raise NotUnitary(f"{name} is not unitary (residual {res:.3e})")


def sl_to_lu(U, V, w: SLWitness, tol: Tolerance | None = None) -> LocalEquivalenceWitness:
    """Turn an SL witness between unitaries ``U`` and ``V`` into local unitaries.

    Parties whose ``s`` and ``t`` are both exactly the identity get identity
    outputs.

    Raises
    ------
    NotInvertible
        If some ``s``/``t`` has condition number above 1e8.
    WitnessResidualTooLarge
        If ``U`` differs from ``(x)s . V . (x)t``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    U = as_matrix(U.matrix if isinstance(U, BipartiteUnitary) else U, "U", square=True)
    V = as_matrix(V.matrix if isinstance(V, BipartiteUnitary) else V, "V", square=True)
    dim = int(np.prod(w.dims))
    if U.shape != (dim, dim) or V.shape != (dim, dim):
        raise ShapeError(f"U {U.shape} / V {V.shape} do not match witness dimensions {w.dims}")
    _check_unitary(U, "U", tol)
    _check_unitary(V, "V", tol)

    svds_s, svds_t = [], []
    for i, (S, T) in enumerate(zip(w.s_ops, w.t_ops)):
        for name, op, store in (("s", S, svds_s), ("t", T, svds_t)):
            if _is_identity(op):
                eye = np.eye(op.shape[0], dtype=np.complex128)
                store.append((eye, np.ones(op.shape[0]), eye))
                continue
            E, c, F = _sorted_svd(op)
            if c[-1] == 0.0 or c[0] / c[-1] > MAX_CONDITION:
                raise NotInvertible(f"{name}_ops[{i}] is singular or ill-conditioned")
            store.append((E, c, F))

    S_all = kron_all(w.s_ops)
    T_all = kron_all(w.t_ops)
    scale = np.linalg.norm(S_all, 2) * np.linalg.norm(T_all, 2)
    witness_res = fro(U - S_all @ V @ T_all)
    if witness_res > tol.reconstruct_tol * np.sqrt(dim) * max(scale, 1.0):
        raise WitnessResidualTooLarge(f"witness does not map V to U (residual {witness_res:.3e})")

    q_ops = tuple(E @ F for E, _, F in svds_s)
    r_ops = tuple(G @ H for G, _, H in svds_t)
    E_all = kron_all([E for E, _, _ in svds_s])
    F_all = kron_all([F for _, _, F in svds_s])
    G_all = kron_all([G for G, _, _ in svds_t])
    H_all = kron_all([H for _, _, H in svds_t])
    u_rot = E_all.conj().T @ U @ H_all.conj().T
    v_rot = F_all @ V @ G_all
    internal = fro(u_rot - v_rot)
    residual = fro(U - kron_all(q_ops) @ V @ kron_all(r_ops))
    return LocalEquivalenceWitness(q_ops, r_ops, residual, internal)


def _orthogonal_projectors(projectors, d, tol):
    Ps = [as_matrix(P, f"projectors[{j}]", square=True) for j, P in enumerate(projectors)]
    for j, P in enumerate(Ps):
        if P.shape != (d, d):
            raise ShapeError(f"projectors[{j}] has shape {P.shape}, expected {(d, d)}")
        if fro(P - P.conj().T) > tol.commute_tol * max(fro(P), 1.0) or fro(P @ P - P) > tol.reconstruct_tol * max(fro(P), 1.0):
            raise BadBlockSupport(f"projectors[{j}] is not an orthogonal projector")
    for i in range(len(Ps)):
        for j in range(i + 1, len(Ps)):
            if fro(Ps[i] @ Ps[j]) > tol.reconstruct_tol:
                raise BadBlockSupport(f"projectors {i} and {j} are not mutually orthogonal")
    return Ps


def controlled_from_sl_witness(U, v_terms, projectors, w: SLWitness, tol: Tolerance | None = None, seed=None, d_A=None, d_B=None) -> ControlledForm:
    """Controlled form (from A) of a unitary SL-equivalent to ``sum_j R_j (x) V_j``.

    Each ``R_j`` must live inside its projector (``P_j R_j P_j = R_j``). The
    SVDs of the ``R_j`` reduce the sum to ``sum_k |a_k><b_k| (x) W_k``, whose
    SL-image has ``W_k`` proportional to unitaries; :func:`sl_to_lu` then
    supplies the local unitaries. ``seed`` is accepted for interface symmetry.

    Raises
    ------
    BadBlockSupport
        If a ``R_j`` leaks outside its projector or the projectors overlap.
    WitnessResidualTooLarge
        If ``U`` is not ``(s_A (x) s_B)(sum_j R_j (x) V_j)(t_A (x) t_B)``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    U = as_bipartite(U, d_A, d_B, tol)
    dA, dB = U.d_A, U.d_B
    if w.parties != 2 or w.dims != (dA, dB):
        raise ShapeError(f"witness dims {w.dims} do not match the {dA}x{dB} gate")
    Ps = _orthogonal_projectors(projectors, dA, tol)
    if len(Ps) != len(v_terms):
        raise ShapeError("need one projector per (R_j, V_j) term")
    terms = []
    for j, ((R, Vj), P) in enumerate(zip(v_terms, Ps)):
        R = as_matrix(R, f"R_{j}", square=True)
        Vj = as_matrix(Vj, f"V_{j}", square=True)
        if fro(P @ R @ P - R) > tol.reconstruct_tol * max(fro(R), 1.0):
            raise BadBlockSupport(f"R_{j} is not supported on its projector")
        terms.append((R, Vj))

    middle = sum(np.kron(R, Vj) for R, Vj in terms)
    S_all = np.kron(*w.s_ops)
    T_all = np.kron(*w.t_ops)
    res = fro(U.matrix - S_all @ middle @ T_all)
    scale = np.linalg.norm(S_all, 2) * np.linalg.norm(T_all, 2)
    if res > tol.reconstruct_tol * np.sqrt(U.dim) * max(scale, 1.0):
        raise WitnessResidualTooLarge(f"witness residual {res:.3e}")

    # sum_j R_j (x) V_j = (Ea (x) I)(sum_k |k><k| (x) sigma_k V_j(k))(Eb^dag (x) I)
    alphas, betas, sigmas, owners = [], [], [], []
    for j, (R, _) in enumerate(terms):
        u, s, vh = np.linalg.svd(R)
        if s[0] == 0.0:
            continue
        keep = s > tol.rank_rel_tol * s[0]
        for k in np.flatnonzero(keep):
            alphas.append(u[:, k])
            betas.append(vh[k].conj())
            sigmas.append(s[k])
            owners.append(j)
    if len(alphas) != dA:
        raise BadBlockSupport(f"the R_j have total rank {len(alphas)} < d_A = {dA}; the middle operator is singular")
    Ea = np.column_stack(alphas)
    Eb = np.column_stack(betas)
    s_A, s_B = w.s_ops
    t_A, t_B = w.t_ops

    # SL image: U = (s_A Ea diag(c) (x) I)(sum |k><k| (x) Vu_k)(Eb^dag t_A (x) I)
    # with s_B sigma_k V_j t_B = c_k Vu_k, Vu_k unitary.
    vus, cs = [], []
    for k, j in enumerate(owners):
        Wk = sigmas[k] * (s_B @ terms[j][1] @ t_B)
        c = fro(Wk) / np.sqrt(dB)
        if c == 0.0:
            raise BadBlockSupport(f"term {j} vanishes")
        Vu = Wk / c
        if unitarity_residual(Vu) > np.sqrt(tol.unitarity_tol):
            raise InternalContractViolation(f"block {k} is not proportional to a unitary")
        # polar projection removes round-off before the exact identity checks downstream
        uu, _, vv = np.linalg.svd(Vu)
        vus.append(uu @ vv)
        cs.append(c)
    ctrl = sum(np.kron(np.outer(np.eye(dA)[k], np.eye(dA)[k]), vus[k]) for k in range(dA))
    eye_B = np.eye(dB, dtype=np.complex128)
    reduced = SLWitness((s_A @ Ea @ np.diag(cs), eye_B), (Eb.conj().T @ t_A, eye_B))
    lu = sl_to_lu(U.matrix, ctrl, reduced, tol)
    form = build_controlled_form("A", lu.q_ops[0], lu.r_ops[0], vus, tol)
    return _with_residual(form, U.matrix)
