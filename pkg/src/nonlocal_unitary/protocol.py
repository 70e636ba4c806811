"""State-vector simulation of LOCC protocols that implement bipartite gates.

Two protocols are simulated, both consuming a maximally entangled resource
and succeeding deterministically after classical corrections:

* ``teleport_twice``: Alice teleports A to Bob, Bob applies the gate and
  teleports A back. Resource rank ``d_A**2``.
* ``controlled_A`` / ``controlled_B``: for a gate in controlled form with
  ``m`` groups, the controlling party writes its group index into half of
  ``|Psi_m>`` and measures it, the other party applies the group-selected
  unitary and measures its half in the Fourier basis, and a diagonal phase
  correction finishes the job. Resource rank ``m``.

Measurement outcomes are either sampled (Born rule, seeded) or forced, so
every branch can be enumerated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .controlled import ControlledForm, check_controlled, extract_controlled_form
from .errors import (
    InvalidBipartition,
    InvalidControlledForm,
    InvalidDimension,
    ShapeError,
    TheoremViolationReport,
    UnsupportedShape,
)
from .linalg import DEFAULT_TOL, Tolerance
from .sampling import as_rng, ginibre
from .schmidt import BipartiteUnitary, as_bipartite, schmidt_rank

_SCHMIDT_FLOOR = 1e-12
EXHAUSTIVE_LIMIT = 81
SAMPLED_BRANCHES = 100


@dataclass(frozen=True)
class PureState:
    """Normalized pure state on labelled subsystems."""

    labels: tuple
    dims: tuple
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dims = tuple(int(d) for d in self.dims)
        if len(labels) != len(dims) or len(set(labels)) != len(labels):
            raise ShapeError("labels must be unique and match dims")
        if any(d < 1 for d in dims):
            raise InvalidDimension("subsystem dimensions must be positive")
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.size != math.prod(dims):
            raise ShapeError(f"{amp.size} amplitudes for dims {dims}")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm {np.linalg.norm(amp)!r})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, labels, dims, vec) -> "PureState":
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        return cls(labels, dims, vec / np.linalg.norm(vec))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def dim_of(self, label: str) -> int:
        return self.dims[self.labels.index(label)]


def maximally_entangled(r: int, labels=("a", "b")) -> PureState:
    """``|Psi_r> = r^{-1/2} sum_i |ii>``."""
    if int(r) != r or r < 1:
        raise InvalidDimension(f"resource rank must be a positive integer, got {r!r}")
    vec = np.eye(r, dtype=np.complex128).reshape(-1) / np.sqrt(r)
    return PureState(labels, (r, r), vec)


def product_state(*states: PureState) -> PureState:
    vec = np.ones(1, dtype=np.complex128)
    labels, dims = [], []
    for s in states:
        vec = np.kron(vec, s.amplitudes)
        labels += s.labels
        dims += s.dims
    return PureState(tuple(labels), tuple(dims), vec)


def random_state(labels, dims, rng=None) -> PureState:
    return PureState.from_vector(labels, dims, ginibre(math.prod(dims), 1, rng))


def choi_input(d_A: int, d_B: int) -> PureState:
    """A and B each maximally entangled with a reference copy."""
    a = maximally_entangled(d_A, ("A", "RA"))
    b = maximally_entangled(d_B, ("B", "RB"))
    return product_state(a, b)


def _schmidt_values(tensor: np.ndarray, axes) -> np.ndarray:
    rest = [i for i in range(tensor.ndim) if i not in axes]
    left = math.prod(tensor.shape[i] for i in axes)
    mat = np.transpose(tensor, list(axes) + rest).reshape(left, -1)
    s = np.linalg.svd(mat, compute_uv=False)
    return s / np.linalg.norm(s)


def entanglement_entropy(state: PureState, bipartition) -> float:
    """Von Neumann entropy (base 2) of the subsystems in ``bipartition``."""
    part = [bipartition] if isinstance(bipartition, str) else list(bipartition)
    if any(lbl not in state.labels for lbl in part):
        raise InvalidBipartition(f"unknown labels in {part}")
    axes = sorted({state.labels.index(lbl) for lbl in part})
    if not axes or len(axes) == len(state.labels):
        raise InvalidBipartition("bipartition must be a proper non-empty subset")
    s = _schmidt_values(state.tensor(), axes)
    p = s[s > _SCHMIDT_FLOOR] ** 2
    p = p / p.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


# ---------------------------------------------------------------------------
# Simulation core
# ---------------------------------------------------------------------------


def shift_op(d: int, by: int = 1) -> np.ndarray:
    """``|j> -> |j + by mod d>``."""
    return np.roll(np.eye(d, dtype=np.complex128), by, axis=0)


def clock_op(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def fourier_basis(d: int) -> np.ndarray:
    """Columns ``|f_t> = d^{-1/2} sum_y exp(2 pi i t y / d) |y>``."""
    y = np.arange(d)
    return np.exp(2j * np.pi * np.outer(y, y) / d) / np.sqrt(d)


def bell_basis(d: int):
    """Columns ``(X^m Z^n (x) I)|Psi_d>`` indexed ``m * d + n`` and the
    matching corrections ``X^m Z^n``."""
    psi = np.eye(d, dtype=np.complex128).reshape(-1) / np.sqrt(d)
    X, Z = shift_op(d), clock_op(d)
    cols, corr = [], []
    for m in range(d):
        for n in range(d):
            M = np.linalg.matrix_power(X, m) @ np.linalg.matrix_power(Z, n)
            cols.append(np.kron(M, np.eye(d)) @ psi)
            corr.append(M)
    return np.column_stack(cols), corr


class _Register:
    """Unnormalized branch state on labelled subsystems."""

    def __init__(self, state: PureState):
        self.labels = list(state.labels)
        self.psi = state.tensor().copy()

    def add(self, state: PureState):
        self.psi = np.multiply.outer(self.psi, state.tensor())
        self.labels += list(state.labels)

    def _axes(self, targets):
        return [self.labels.index(t) for t in targets]

    def apply(self, op, targets):
        axes = self._axes(targets)
        shape = self.psi.shape
        moved = np.moveaxis(self.psi, axes, range(len(axes)))
        D = math.prod(shape[a] for a in axes)
        out = (op @ moved.reshape(D, -1)).reshape(moved.shape)
        self.psi = np.moveaxis(out, range(len(axes)), axes)

    def measure(self, basis, targets, chooser) -> int:
        """Project ``targets`` onto a column of ``basis``; return its index."""
        axes = self._axes(targets)
        moved = np.moveaxis(self.psi, axes, range(len(axes)))
        D = basis.shape[0]
        flat = moved.reshape(D, -1)
        amps = basis.conj().T @ flat
        probs = np.sum(np.abs(amps) ** 2, axis=1)
        k = chooser(probs / probs.sum())
        flat = np.outer(basis[:, k], amps[k])
        self.psi = np.moveaxis(flat.reshape(moved.shape), range(len(axes)), axes)
        return k

    def norm2(self) -> float:
        return float(np.vdot(self.psi, self.psi).real)

    def split(self, system, relabel=None):
        """Separate ``system`` from the rest.

        Returns the normalized system state (dominant Schmidt vector) and the
        entanglement entropy across the cut.
        """
        axes = self._axes(system)
        rest = [i for i in range(self.psi.ndim) if i not in axes]
        mat = np.transpose(self.psi, axes + rest).reshape(math.prod(self.psi.shape[a] for a in axes), -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        p = (s / np.linalg.norm(s)) ** 2
        p = p[np.sqrt(p) > _SCHMIDT_FLOOR]
        entropy = float(max(0.0, -np.sum(p * np.log2(p))))
        labels = [relabel.get(x, x) if relabel else x for x in system]
        dims = [self.psi.shape[a] for a in axes]
        return PureState.from_vector(labels, dims, u[:, 0]), entropy


@dataclass(frozen=True)
class Round:
    party: str
    outcome: int
    message: str
    correction: str


@dataclass(frozen=True)
class ProtocolTranscript:
    protocol: str
    resource_rank: int
    ebits: float
    rounds: tuple
    process_fidelity: float
    branch_probability: float
    ancilla_entropy: float

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "resource_rank": self.resource_rank,
            "ebits": self.ebits,
            "rounds": [vars(r) for r in self.rounds],
            "process_fidelity": self.process_fidelity,
            "branch_probability": self.branch_probability,
            "ancilla_entropy": self.ancilla_entropy,
        }


def _chooser(rng, forced):
    forced = None if forced is None else list(forced)

    def choose(probs):
        if forced is not None:
            return int(forced.pop(0))
        return int(rng.choice(probs.size, p=probs))

    return choose


def _target_state(U: np.ndarray, state: PureState) -> PureState:
    reg = _Register(state)
    reg.apply(U, ["A", "B"])
    return PureState.from_vector(state.labels, state.dims, reg.psi)


def _fidelity(out: PureState, target: PureState) -> float:
    order = [out.labels.index(lbl) for lbl in target.labels]
    vec = np.transpose(out.tensor(), order).reshape(-1)
    return float(min(1.0, abs(np.vdot(target.amplitudes, vec)) ** 2))


def _check_input(state: PureState, d_A: int, d_B: int):
    for lbl, d in (("A", d_A), ("B", d_B)):
        if lbl not in state.labels or state.dim_of(lbl) != d:
            raise ShapeError(f"input state needs subsystem {lbl!r} of dimension {d}")


def simulate_teleport_protocol(U, input: PureState, seed=None, outcomes=None, d_A=None, d_B=None):
    """Implement ``U`` by teleporting A to Bob and back.

    ``outcomes`` forces the two Bell-measurement results (each in
    ``range(d_A**2)``); otherwise they are sampled with ``seed``.
    Returns ``(output_state, transcript)``; the output carries the input's
    labels with A's output living in what was Alice's second resource half.
    """
    U = as_bipartite(U, d_A, d_B)
    _check_input(input, U.d_A, U.d_B)
    d = U.d_A
    choose = _chooser(as_rng(seed), outcomes)
    reg = _Register(input)
    reg.add(maximally_entangled(d, ("_a1", "_b1")))
    reg.add(maximally_entangled(d, ("_a2", "_b2")))
    basis, corr = bell_basis(d)

    k1 = reg.measure(basis, ["A", "_a1"], choose)
    reg.apply(corr[k1], ["_b1"])
    reg.apply(U.matrix, ["_b1", "B"])
    k2 = reg.measure(basis, ["_b1", "_b2"], choose)
    reg.apply(corr[k2], ["_a2"])

    prob = reg.norm2()
    system = ["_a2" if x == "A" else x for x in input.labels]
    out, ent = reg.split(system, {"_a2": "A"})
    m1, n1 = divmod(k1, d)
    m2, n2 = divmod(k2, d)
    rounds = (
        Round("A", k1, f"bell({m1},{n1})", f"B applies X^{m1} Z^{n1} on its resource half"),
        Round("B", k2, f"bell({m2},{n2})", f"A applies X^{m2} Z^{n2} on its resource half"),
    )
    fid = _fidelity(out, _target_state(U.matrix, input))
    k = d * d
    return out, ProtocolTranscript("teleport_twice", k, math.log2(k), rounds, fid, prob, ent)


def simulate_controlled_protocol(cf: ControlledForm, input: PureState, seed=None, outcomes=None, tol: Tolerance | None = None):
    """Implement a gate given in controlled form with ``|Psi_m>``, ``m`` the group count."""
    tol = DEFAULT_TOL if tol is None else tol
    try:
        cf.validate(tol)
    except InvalidControlledForm:
        raise
    except Exception as exc:  # malformed arrays etc.
        raise InvalidControlledForm(str(exc)) from exc
    d_A, d_B = cf.dims
    _check_input(input, d_A, d_B)
    ctrl, targ = ("A", "B") if cf.side == "A" else ("B", "A")
    m = cf.n_groups
    labels_g = cf.group_of()
    U = cf.reconstruct()
    choose = _chooser(as_rng(seed), outcomes)
    reg = _Register(input)
    reg.apply(cf.r, [ctrl])
    rounds = []
    if m == 1:
        reg.apply(cf.groups[0].v, [targ])
    else:
        reg.add(maximally_entangled(m, ("_c", "_t")))
        # |k>|x> -> |k>|x + g(k)>
        add = np.zeros((cf.d_ctrl * m,) * 2, dtype=np.complex128)
        for kk in range(cf.d_ctrl):
            add[kk * m:(kk + 1) * m, kk * m:(kk + 1) * m] = shift_op(m, int(labels_g[kk]))
        reg.apply(add, [ctrl, "_c"])
        o = reg.measure(np.eye(m, dtype=np.complex128), ["_c"], choose)
        # |y> -> |o - y>
        flip = np.zeros((m, m), dtype=np.complex128)
        flip[(o - np.arange(m)) % m, np.arange(m)] = 1.0
        reg.apply(flip, ["_t"])
        sel = sum(np.kron(np.outer(np.eye(m)[g], np.eye(m)[g]), grp.v) for g, grp in enumerate(cf.groups))
        reg.apply(sel, ["_t", targ])
        t = reg.measure(fourier_basis(m), ["_t"], choose)
        phase = np.exp(2j * np.pi * t * labels_g / m)
        reg.apply(np.diag(phase), [ctrl])
        rounds = [
            Round(ctrl, o, f"o={o}", f"{targ} maps its resource half |y> -> |{o}-y mod {m}>"),
            Round(targ, t, f"t={t}", f"{ctrl} applies phases exp(2 pi i {t} g(k)/{m})"),
        ]
    reg.apply(cf.q, [ctrl])
    prob = reg.norm2()
    out, ent = reg.split(list(input.labels))
    fid = _fidelity(out, _target_state(U, input))
    name = "controlled_A" if cf.side == "A" else "controlled_B"
    return out, ProtocolTranscript(name, m, math.log2(m), tuple(rounds), fid, prob, ent)


def _outcome_space(protocol: str, obj) -> list[int]:
    if protocol == "teleport_twice":
        k = obj.d_A ** 2
        return [k, k]
    m = obj.n_groups
    return [] if m == 1 else [m, m]


def enumerate_branches(protocol: str, obj, input: PureState, seed=0, limit: int = EXHAUSTIVE_LIMIT, samples: int = SAMPLED_BRANCHES):
    """Run every measurement branch (or ``samples`` sampled ones past ``limit``).

    ``obj`` is a :class:`BipartiteUnitary` for ``"teleport_twice"`` and a
    :class:`ControlledForm` for the controlled protocols. Returns a list of
    ``(output_state, transcript)``.
    """
    sizes = _outcome_space(protocol, obj)
    run = simulate_teleport_protocol if protocol == "teleport_twice" else simulate_controlled_protocol
    total = math.prod(sizes) if sizes else 1
    if total <= limit:
        choices = itertools.product(*[range(s) for s in sizes])
    else:
        rng = as_rng(seed)
        choices = [tuple(int(rng.integers(s)) for s in sizes) for _ in range(samples)]
    return [run(obj, input, outcomes=list(c)) for c in choices]


# ---------------------------------------------------------------------------
# Schmidt-rank-3 pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Route:
    protocol: str
    resource_rank: int
    form: ControlledForm | None = None


def plan_schmidt_rank3(U, tol: Tolerance | None = None, seed=None, d_A=None, d_B=None) -> list[Route]:
    """All valid routes for a Schmidt-rank-3 gate, cheapest first."""
    tol = DEFAULT_TOL if tol is None else tol
    U = as_bipartite(U, d_A, d_B, tol)
    if U.d_A not in (2, 3) or U.d_B < U.d_A:
        raise UnsupportedShape(f"needs d_A in {{2, 3}} and d_B >= d_A, got {U.d_A}x{U.d_B}")
    sr = schmidt_rank(U, tol=tol)
    if sr != 3:
        raise UnsupportedShape(f"Schmidt rank is {sr}, not 3")
    routes = []
    for side in ("A", "B"):
        if check_controlled(U, side, tol).is_controlled:
            form = extract_controlled_form(U, side, tol, seed)
            routes.append(Route(f"controlled_{side}", form.n_groups, form))
    if not routes:
        raise TheoremViolationReport(
            f"Schmidt-rank-3 gate on {U.d_A}x{U.d_B} is not detected as controlled from either side"
        )
    routes.append(Route("teleport_twice", U.d_A ** 2))
    routes.sort(key=lambda r: (r.resource_rank, r.protocol == "teleport_twice"))
    return routes


def implement_schmidt_rank3(U, input: PureState, tol: Tolerance | None = None, seed=None, d_A=None, d_B=None):
    """Implement a Schmidt-rank-3 gate (``d_A`` in {2, 3}) on the cheapest route.

    The achieved resource rank never exceeds ``min(d_A**2, d_B)``; a breach
    raises :class:`TheoremViolationReport`.
    """
    tol = DEFAULT_TOL if tol is None else tol
    U = as_bipartite(U, d_A, d_B, tol)
    best = plan_schmidt_rank3(U, tol, seed)[0]
    bound = min(U.d_A ** 2, U.d_B)
    if best.resource_rank > bound:
        raise TheoremViolationReport(f"cheapest route uses rank {best.resource_rank} > min(d_A^2, d_B) = {bound}")
    if best.form is None:
        return simulate_teleport_protocol(U, input, seed)
    return simulate_controlled_protocol(best.form, input, seed, tol=tol)
