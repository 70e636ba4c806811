"""Controlled-unitary and block-controlled-unitary structure.

A bipartite unitary is controlled from side A when it is locally equivalent
to ``sum_g P_g (x) v_g`` with orthogonal projectors ``P_g`` on A. The
decision uses the Schmidt factors ``A_j`` of the controlling side: the
families ``{A_i A_j^dag}`` and ``{A_i^dag A_j}`` must each consist of
normal, pairwise commuting matrices. Extraction goes through a simultaneous
SVD of the ``A_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InternalContractViolation,
    NoSimultaneousSVD,
    NotSimultaneouslyDiagonalizable,
    RankTooHigh,
    ShapeError,
    UnsupportedShape,
)
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    clusters,
    commutator_residual,
    complete_unitary,
    fro,
    normality_residual,
    unitarity_residual,
)
from .sampling import as_rng, projector
from .schmidt import BipartiteUnitary, as_bipartite, check_dims, schmidt_decompose

_MAX_TRIES = 8
_MAX_DEPTH = 32


def _side(side: str) -> str:
    side = str(side).upper()
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return side


def _oriented(U: BipartiteUnitary, side: str) -> BipartiteUnitary:
    """View ``U`` so that the requested side is the first tensor factor."""
    return U if side == "A" else U.swapped()


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlGroup:
    indices: tuple
    v: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ControlledForm:
    """``U = (q (x) I)(sum_g P_g (x) v_g)(r (x) I)`` for side A.

    For side B the roles mirror: ``U = (I (x) q)(sum_g v_g (x) P_g)(I (x) r)``.
    ``P_g`` projects onto the computational basis states listed in
    ``groups[g].indices`` (zero based).
    """

    side: str
    q: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    groups: tuple
    residual: float = float("nan")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def d_ctrl(self) -> int:
        return self.q.shape[0]

    @property
    def d_target(self) -> int:
        return self.groups[0].v.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        """``(d_A, d_B)`` of the operator this form describes."""
        if self.side == "A":
            return self.d_ctrl, self.d_target
        return self.d_target, self.d_ctrl

    def group_of(self) -> np.ndarray:
        """Group label of every controlling basis state."""
        labels = np.full(self.d_ctrl, -1)
        for g, grp in enumerate(self.groups):
            labels[list(grp.indices)] = g
        return labels

    def middle(self) -> np.ndarray:
        """The block-diagonal core ``sum_g P_g (x) v_g`` (or mirrored)."""
        out = np.zeros((self.d_ctrl * self.d_target,) * 2, dtype=np.complex128)
        for grp in self.groups:
            P = projector(grp.indices, self.d_ctrl)
            out += np.kron(P, grp.v) if self.side == "A" else np.kron(grp.v, P)
        return out

    def reconstruct(self) -> np.ndarray:
        eye = np.eye(self.d_target)
        if self.side == "A":
            return np.kron(self.q, eye) @ self.middle() @ np.kron(self.r, eye)
        return np.kron(eye, self.q) @ self.middle() @ np.kron(eye, self.r)

    def validate(self, tol: Tolerance | None = None) -> None:
        """Raise :class:`InvalidControlledForm` if an invariant fails."""
        from .errors import InvalidControlledForm

        tol = DEFAULT_TOL if tol is None else tol
        if self.side not in ("A", "B"):
            raise InvalidControlledForm(f"bad side {self.side!r}")
        seen = sorted(i for grp in self.groups for i in grp.indices)
        if seen != list(range(self.d_ctrl)):
            raise InvalidControlledForm("group indices do not partition the controlling basis")
        for name, op in (("q", self.q), ("r", self.r)):
            if unitarity_residual(op) > tol.unitarity_tol:
                raise InvalidControlledForm(f"{name} is not unitary")
        for g, grp in enumerate(self.groups):
            if grp.v.shape != (self.d_target, self.d_target) or unitarity_residual(grp.v) > tol.unitarity_tol:
                raise InvalidControlledForm(f"group {g}: v is not a {self.d_target}x{self.d_target} unitary")


@dataclass(frozen=True)
class BlockStructure:
    """``w_left^dag A_j w_right`` is block diagonal for every Schmidt factor
    ``A_j`` of ``side``, with diagonal blocks of the given sizes."""

    side: str
    w_left: np.ndarray = field(repr=False)
    w_right: np.ndarray = field(repr=False)
    block_sizes: tuple

    @property
    def m(self) -> int:
        return len(self.block_sizes)


@dataclass(frozen=True)
class ControlledCheck:
    is_controlled: bool
    # (family {A_i A_j^dag}, family {A_i^dag A_j})
    witness_family: tuple = field(repr=False)
    residual: float = 0.0

    def __iter__(self):
        return iter((self.is_controlled, self.witness_family))

    def __bool__(self):
        return self.is_controlled


# ---------------------------------------------------------------------------
# Criterion
# ---------------------------------------------------------------------------


def _span_basis(mats, rel_tol: float) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of span(mats)."""
    shape = mats[0].shape
    stack = np.array([m.ravel() for m in mats])
    _, s, vh = np.linalg.svd(stack, full_matrices=False)
    if s[0] == 0.0:
        return []
    k = int(np.count_nonzero(s > rel_tol * s[0]))
    return [vh[i].reshape(shape) for i in range(k)]


def family_residual(family, tol: Tolerance | None = None) -> float:
    """Largest normality or commutator residual over a *-closed family.

    Commutation is tested on an orthonormal basis of the span, which is
    equivalent for *-closed families and keeps the cost at ``dim(span)^2``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    worst = max((normality_residual(M) for M in family), default=0.0)
    basis = _span_basis(family, tol.rank_rel_tol)
    for a in range(len(basis)):
        for b in range(a + 1, len(basis)):
            worst = max(worst, commutator_residual(basis[a], basis[b]))
    return worst


def controlled_families(ops) -> tuple[list, list]:
    """``({A_i A_j^dag}, {A_i^dag A_j})`` over all ordered pairs."""
    left = [a @ b.conj().T for a in ops for b in ops]
    right = [a.conj().T @ b for a in ops for b in ops]
    return left, right


def check_controlled(U, side: str = "A", tol: Tolerance | None = None, d_A=None, d_B=None) -> ControlledCheck:
    """Decide whether ``U`` is a controlled unitary from ``side``.

    Both families ``{A_i A_j^dag}`` and ``{A_i^dag A_j}`` built from the
    side's Schmidt factors must be normal and pairwise commuting within
    ``commute_tol``. The returned object unpacks as
    ``(is_controlled, (left_family, right_family))`` and also carries the
    worst residual so marginal verdicts can be audited.
    """
    tol = DEFAULT_TOL if tol is None else tol
    side = _side(side)
    U = as_bipartite(U, d_A, d_B, tol)
    dec = schmidt_decompose(U, tol=tol)
    left, right = controlled_families(dec.factors(side))
    residual = max(family_residual(left, tol), family_residual(right, tol))
    return ControlledCheck(residual <= tol.commute_tol, (left, right), residual)


def controlled_residual(U, side: str = "A", tol: Tolerance | None = None, d_A=None, d_B=None) -> float:
    return check_controlled(U, side, tol, d_A, d_B).residual


# ---------------------------------------------------------------------------
# Joint diagonalization of commuting normal matrices
# ---------------------------------------------------------------------------


def _offdiag_norm(M) -> float:
    return fro(M - np.diag(np.diag(M)))


def _is_scalar(M, scale: float, tol: float) -> bool:
    k = M.shape[0]
    return fro(M - np.trace(M) / k * np.eye(k)) <= tol * scale


def _joint_eigvecs(mats, rng, tol: Tolerance, depth: int = 0) -> np.ndarray:
    n = mats[0].shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=np.complex128)
    if depth > _MAX_DEPTH:
        raise NotSimultaneouslyDiagonalizable("eigenspace refinement did not terminate")
    scale = max(fro(M) for M in mats)
    if scale == 0.0:
        return np.eye(n, dtype=np.complex128)
    a = rng.standard_normal(len(mats))
    b = rng.standard_normal(len(mats))
    H = np.zeros((n, n), dtype=np.complex128)
    for M, ca, cb in zip(mats, a, b):
        H += ca * (M + M.conj().T) / 2 + cb * (M - M.conj().T) / 2j
    lam, W = np.linalg.eigh(H)
    spread = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    W = W.copy()
    for c in clusters(lam, tol.eig_cluster_tol * spread):
        if c.size == 1:
            continue
        Wc = W[:, c]
        sub = [Wc.conj().T @ M @ Wc for M in mats]
        if all(_is_scalar(S, scale, tol.reconstruct_tol) for S in sub):
            continue
        W[:, c] = Wc @ _joint_eigvecs(sub, rng, tol, depth + 1)
    return W


def joint_diagonalize(family, tol: Tolerance | None = None, seed=None) -> np.ndarray:
    """Unitary ``W`` with ``W^dag M W`` diagonal for every ``M`` in ``family``.

    Eigenvectors of a random Hermitian combination, refined recursively
    inside eigenvalue clusters with fresh random combinations.

    Raises
    ------
    NotSimultaneouslyDiagonalizable
        If the members are not normal and pairwise commuting.
    """
    tol = DEFAULT_TOL if tol is None else tol
    mats = [as_matrix(M, "family member", square=True) for M in family]
    if not mats:
        raise ValueError("joint_diagonalize: empty family")
    if any(M.shape != mats[0].shape for M in mats):
        raise ShapeError("joint_diagonalize: members have different shapes")
    worst = max(normality_residual(M) for M in mats)
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            worst = max(worst, commutator_residual(mats[i], mats[j]))
    if worst > tol.commute_tol:
        raise NotSimultaneouslyDiagonalizable(f"family is not commuting/normal (residual {worst:.3e})")
    rng = as_rng(seed)
    for _ in range(_MAX_TRIES):
        W = _joint_eigvecs(mats, rng, tol)
        if all(_offdiag_norm(W.conj().T @ M @ W) <= tol.reconstruct_tol * max(fro(M), 1e-300) for M in mats):
            return W
    raise NotSimultaneouslyDiagonalizable("could not reach diagonality within reconstruct_tol")


# ---------------------------------------------------------------------------
# Simultaneous SVD
# ---------------------------------------------------------------------------


def _simultaneous_svd_bases(mats, rng, tol: Tolerance, scale: float, depth: int = 0):
    """Return ``(u, v)`` with ``u^dag M v`` diagonal for all ``M``."""
    n = mats[0].shape[0]
    if depth > _MAX_DEPTH:
        raise NoSimultaneousSVD("singular-value cluster refinement did not terminate")
    if n == 1:
        one = np.ones((1, 1), dtype=np.complex128)
        return one, one.copy()
    x = (rng.standard_normal(len(mats)) + 1j * rng.standard_normal(len(mats))) / np.sqrt(2)
    comb = sum(c * M for c, M in zip(x, mats))
    u, s, vh = np.linalg.svd(comb)
    v = vh.conj().T
    u, v = u.copy(), v.copy()
    s_top = max(s[0], scale * tol.rank_rel_tol, np.finfo(float).tiny)
    for c in clusters(s, tol.eig_cluster_tol * s_top):
        if c.size == 1:
            continue
        sub = [u[:, c].conj().T @ M @ v[:, c] for M in mats]
        if all(_offdiag_norm(S) <= tol.reconstruct_tol * scale for S in sub):
            continue
        uc, vc = _simultaneous_svd_bases(sub, rng, tol, scale, depth + 1)
        u[:, c] = u[:, c] @ uc
        v[:, c] = v[:, c] @ vc
    return u, v


def simultaneous_svd(a_ops, tol: Tolerance | None = None, seed=None):
    """Unitaries ``Q``, ``R`` with ``Q^dag a_ops[j] R^dag`` diagonal for all j.

    Returns ``(Q, R, diags)`` where ``diags[j]`` is the complex diagonal of
    ``Q^dag a_ops[j] R^dag``. The SVD of a random complex combination seeds
    ``Q`` and ``R``; degenerate singular-value clusters are refined
    recursively with fresh combinations.

    Raises
    ------
    NoSimultaneousSVD
        If no pair of unitaries diagonalizes the whole family.
    """
    tol = DEFAULT_TOL if tol is None else tol
    mats = [as_matrix(M, "a_op", square=True) for M in a_ops]
    if not mats:
        raise ValueError("simultaneous_svd: empty family")
    if any(M.shape != mats[0].shape for M in mats):
        raise ShapeError("simultaneous_svd: members have different shapes")
    scale = max(fro(M) for M in mats)
    rng = as_rng(seed)
    if scale == 0.0:
        n = mats[0].shape[0]
        return np.eye(n, dtype=np.complex128), np.eye(n, dtype=np.complex128), [np.zeros(n, complex) for _ in mats]
    worst = np.inf
    for _ in range(_MAX_TRIES):
        u, v = _simultaneous_svd_bases(mats, rng, tol, scale)
        cores = [u.conj().T @ M @ v for M in mats]
        worst = max(_offdiag_norm(C) for C in cores) / scale
        if worst <= tol.reconstruct_tol:
            return u, v.conj().T, [np.diag(C).copy() for C in cores]
    raise NoSimultaneousSVD(f"family has no simultaneous SVD (off-diagonal residual {worst:.3e})")


# ---------------------------------------------------------------------------
# Controlled-form extraction
# ---------------------------------------------------------------------------


def _group_unitaries(vs, q, tol: Tolerance):
    """Merge indices whose unitaries agree up to a phase; fold phases into q."""
    reps: list[np.ndarray] = []
    members: list[list[int]] = []
    phases = np.ones(len(vs), dtype=np.complex128)
    for k, V in enumerate(vs):
        d = V.shape[0]
        for g, rep in enumerate(reps):
            overlap = np.trace(rep.conj().T @ V) / d
            if abs(overlap) < 0.5:
                continue
            ph = overlap / abs(overlap)
            if fro(V - ph * rep) <= tol.eig_cluster_tol * np.sqrt(d):
                members[g].append(k)
                phases[k] = ph
                break
        else:
            reps.append(V)
            members.append([k])
    q = q * phases[None, :]
    groups = tuple(ControlGroup(tuple(m), rep) for m, rep in zip(members, reps))
    return q, groups


def build_controlled_form(side: str, q, r, per_index_v, tol: Tolerance | None = None) -> ControlledForm:
    """Assemble a :class:`ControlledForm` from one unitary per controlling basis state."""
    tol = DEFAULT_TOL if tol is None else tol
    for k, V in enumerate(per_index_v):
        res = unitarity_residual(V)
        if res > tol.unitarity_tol:
            raise InternalContractViolation(f"extracted V_{k} is not unitary (residual {res:.3e})")
    q, groups = _group_unitaries(per_index_v, np.asarray(q, dtype=np.complex128), tol)
    return ControlledForm(_side(side), q, np.asarray(r, dtype=np.complex128), groups)


def _with_residual(form: ControlledForm, target) -> ControlledForm:
    res = fro(form.reconstruct() - target) / fro(target)
    return ControlledForm(form.side, form.q, form.r, form.groups, res)


def extract_controlled_form(U, side: str = "A", tol: Tolerance | None = None, seed=None, d_A=None, d_B=None) -> ControlledForm:
    """Explicit controlled form of ``U`` controlled from ``side``.

    With ``Q^dag A_j R^dag = diag(d_j)`` from :func:`simultaneous_svd`, the
    target-side unitaries are ``V_k = sum_j c_j d_j[k] B_j``. Indices whose
    ``V_k`` coincide up to phase are merged into one group.

    Raises
    ------
    NoSimultaneousSVD
        If ``U`` is not controlled from ``side``.
    InternalContractViolation
        If an extracted ``V_k`` is not unitary or the reconstruction misses
        ``reconstruct_tol``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    side = _side(side)
    U = as_bipartite(U, d_A, d_B, tol)
    work = _oriented(U, side)
    dec = schmidt_decompose(work, tol=tol)
    Q, R, diags = simultaneous_svd(dec.a_ops, tol, seed)
    vs = []
    for k in range(work.d_A):
        V = np.zeros((work.d_B, work.d_B), dtype=np.complex128)
        for c, dj, b in zip(dec.coefficients, diags, dec.b_ops):
            V += c * dj[k] * b
        vs.append(V)
    form = _with_residual(build_controlled_form(side, Q, R, vs, tol), U.matrix)
    if form.residual > tol.reconstruct_tol:
        raise InternalContractViolation(f"controlled form reconstruction residual {form.residual:.3e}")
    return form


def independent_group_count(form: ControlledForm, tol: Tolerance | None = None) -> int:
    """Dimension of span{v_g}; equals the Schmidt rank of the gate."""
    tol = DEFAULT_TOL if tol is None else tol
    return len(_span_basis([g.v for g in form.groups], tol.rank_rel_tol))


# ---------------------------------------------------------------------------
# Block-controlled structure
# ---------------------------------------------------------------------------


def _commutant_basis(gens, rel_tol: float) -> list[np.ndarray]:
    """Basis of ``{X : X G = G X for all G in gens}``."""
    n = gens[0].shape[0]
    eye = np.eye(n)
    # row-major vec: vec(X G) = (I (x) G^T) vec X,  vec(G X) = (G (x) I) vec X
    system = np.vstack([np.kron(eye, G.T) - np.kron(G, eye) for G in gens])
    _, s, vh = np.linalg.svd(system)
    cut = rel_tol * max(s[0], 1.0)
    null = [vh[i].conj().reshape(n, n) for i in range(vh.shape[0]) if i >= s.size or s[i] <= cut]
    return null


def _block_candidates(ops, rng, tol: Tolerance):
    d = ops[0].shape[0]
    zero = np.zeros((d, d), dtype=np.complex128)
    gens = [np.block([[np.eye(d), zero], [zero, zero]])]
    for A in ops:
        gens.append(np.block([[zero, A], [A.conj().T, zero]]))
        gens.append(np.block([[zero, 1j * A], [-1j * A.conj().T, zero]]))
    basis = _commutant_basis(gens, tol.eig_cluster_tol)
    coeff = (rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))) / np.sqrt(2)
    X = sum(c * B for c, B in zip(coeff, basis))
    X = (X + X.conj().T) / 2
    lam, W = np.linalg.eigh(X)
    spread = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    lefts, rights = [], []
    for c in clusters(lam, tol.eig_cluster_tol * spread):
        E = W[:, c]
        parts = []
        for rows in (E[:d], E[d:]):
            u, s, _ = np.linalg.svd(rows, full_matrices=False)
            k = int(np.count_nonzero(s > 0.5))
            parts.append(u[:, :k])
        if parts[0].shape[1] != parts[1].shape[1]:
            return None
        lefts.append(parts[0])
        rights.append(parts[1])
    order = sorted(range(len(lefts)), key=lambda i: -lefts[i].shape[1])
    w_left = np.hstack([lefts[i] for i in order])
    w_right = np.hstack([rights[i] for i in order])
    sizes = tuple(lefts[i].shape[1] for i in order)
    if w_left.shape != (d, d) or w_right.shape != (d, d):
        return None
    return w_left, w_right, sizes


def block_offdiag_residual(ops, w_left, w_right, sizes) -> float:
    """Largest relative off-block norm of ``w_left^dag A w_right``."""
    edges = np.concatenate([[0], np.cumsum(sizes)])
    mask = np.zeros((edges[-1], edges[-1]), dtype=bool)
    for a, b in zip(edges[:-1], edges[1:]):
        mask[a:b, a:b] = True
    worst = 0.0
    for A in ops:
        C = w_left.conj().T @ A @ w_right
        worst = max(worst, fro(C[~mask]) / max(fro(A), 1e-300))
    return worst


def finest_block_structure(U, side: str = "A", tol: Tolerance | None = None, seed=None, d_A=None, d_B=None) -> BlockStructure | None:
    """Finest simultaneous block diagonalization of the side's Schmidt factors.

    The factors ``A_j`` are embedded as Hermitian dilations
    ``[[0, A_j], [A_j^dag, 0]]`` (and their ``i``-rotated partners) together
    with the projector onto the first half. Eigenspaces of a generic
    Hermitian element of the commutant of that family are the irreducible
    invariant subspaces; their halves give matching left and right blocks.

    Returns ``None`` when only the trivial single-block partition exists.
    """
    tol = DEFAULT_TOL if tol is None else tol
    side = _side(side)
    U = as_bipartite(U, d_A, d_B, tol)
    work = _oriented(U, side)
    ops = list(schmidt_decompose(work, tol=tol).a_ops)
    rng = as_rng(seed)
    for _ in range(_MAX_TRIES):
        cand = _block_candidates(ops, rng, tol)
        if cand is None:
            continue
        w_left, w_right, sizes = cand
        if block_offdiag_residual(ops, w_left, w_right, sizes) <= tol.reconstruct_tol:
            if len(sizes) == 1:
                return None
            return BlockStructure(side, w_left, w_right, sizes)
    raise InternalContractViolation("block structure search failed to converge")


# ---------------------------------------------------------------------------
# Zero-block reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroBlockReduction:
    """``(w_left (x) I) M (w_right (x) I)`` has a zero ``d_B x d_B`` block at ``block``."""

    w_left: np.ndarray = field(repr=False)
    w_right: np.ndarray = field(repr=False)
    block: tuple
    residual: float

    def apply(self, M, d_B: int) -> np.ndarray:
        eye = np.eye(d_B)
        return np.kron(self.w_left, eye) @ M @ np.kron(self.w_right, eye)


def _row_coefficients(coef, i):
    """``C[l, r]``: coefficient of Schmidt factor r in block (i, l)."""
    return coef[:, i, :].T


def zero_block_reduction(M, d_A: int, d_B: int, tol: Tolerance | None = None) -> ZeroBlockReduction:
    """Local unitaries on A that create a vanishing ``d_B x d_B`` block.

    If the blocks of some block-row are linearly dependent, a unitary acting
    on the block columns combines them to zero. Otherwise rows 0 and 1 are
    mixed with weights ``(1, -lambda)``, ``lambda`` a generalized eigenvalue
    of their coefficient matrices, which makes the mixed row dependent.

    Raises
    ------
    RankTooHigh
        If the Schmidt rank of ``M`` exceeds ``d_A``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    M = check_dims(M, d_A, d_B)
    if d_A < 2:
        raise UnsupportedShape("zero-block reduction needs d_A >= 2")
    dec = schmidt_decompose(M, d_A, d_B, tol)
    if dec.rank > d_A:
        raise RankTooHigh(f"Schmidt rank {dec.rank} exceeds d_A = {d_A}")
    norm = fro(M)
    if dec.rank == 0:
        eye = np.eye(d_A, dtype=np.complex128)
        return ZeroBlockReduction(eye, eye.copy(), (0, 0), 0.0)
    coef = np.array([c * a for c, a in zip(dec.coefficients, dec.a_ops)])  # (n, d_A, d_A)

    def smallest(C):
        # relative smallest singular value and right null vector of C^T
        _, s, vh = np.linalg.svd(C.T)
        if C.shape[1] < C.shape[0]:
            return 0.0, vh[-1].conj()
        return s[-1] / max(s[0], 1e-300), vh[-1].conj()

    w_left = np.eye(d_A, dtype=np.complex128)
    gaps = [smallest(_row_coefficients(coef, i)) for i in range(d_A)]
    row = int(np.argmin([g[0] for g in gaps]))
    if gaps[row][0] > tol.rank_rel_tol:
        # generic case: every block-row independent, Schmidt rank == d_A
        C1 = _row_coefficients(coef, 0)
        C2 = _row_coefficients(coef, 1)
        best = None
        for lam in np.linalg.eigvals(np.linalg.solve(C2, C1)):
            xy = np.array([1.0, -lam]) / np.sqrt(1 + abs(lam) ** 2)
            gap = smallest(xy[0] * C1 + xy[1] * C2)[0]
            if best is None or gap < best[0]:
                best = (gap, xy)
        first = np.zeros(d_A, dtype=np.complex128)
        first[:2] = best[1]
        w_left = complete_unitary(first[None, :])
        coef = np.einsum("ik,rkj->rij", w_left, coef)
        row = 0
    z = smallest(_row_coefficients(coef, row))[1]
    # column 0 of w_right is z: block (row, 0) = sum_l z_l M'_{row, l}
    w_right = complete_unitary(z[None, :]).T
    out = ZeroBlockReduction(w_left, w_right, (row, 0), 0.0)
    T = out.apply(M, d_B)
    blk = T[row * d_B:(row + 1) * d_B, :d_B]
    return ZeroBlockReduction(w_left, w_right, (row, 0), fro(blk) / max(norm, 1e-300))
