"""Construct-then-recover generators shared by the test modules."""

import numpy as np

from nonlocal_unitary.sampling import controlled_unitary, haar_unitary, random_partition
from nonlocal_unitary.schmidt import BipartiteUnitary


def random_controlled(rng, side, d_ctrl, d_target, m):
    """Locally scrambled controlled unitary with ``m`` Haar groups.

    Returns ``(U, sizes, vs)``: the gate, the sorted group sizes and the
    target-side unitaries as they appear after scrambling.
    """
    groups = random_partition(d_ctrl, m, rng)
    vs = [haar_unitary(d_target, rng) for _ in range(m)]
    M = controlled_unitary(groups, vs, d_ctrl, side=side)
    wc = [haar_unitary(d_ctrl, rng) for _ in range(2)]
    wt = [haar_unitary(d_target, rng) for _ in range(2)]
    if side == "A":
        M = np.kron(wc[0], wt[0]) @ M @ np.kron(wc[1], wt[1])
        U = BipartiteUnitary(d_ctrl, d_target, M)
    else:
        M = np.kron(wt[0], wc[0]) @ M @ np.kron(wt[1], wc[1])
        U = BipartiteUnitary(d_target, d_ctrl, M)
    seen = [wt[0] @ v @ wt[1] for v in vs]
    return U, sorted(len(g) for g in groups), seen


def phase_overlap(a, b):
    """``|tr(a^dag b)| / d``; 1 iff equal up to phase for unitaries."""
    return abs(np.trace(a.conj().T @ b)) / a.shape[0]


def same_up_to_phase(expected, recovered, atol=1e-8):
    """Multisets of unitaries agree up to per-element phases."""
    if len(expected) != len(recovered):
        return False
    left = list(recovered)
    for e in expected:
        hit = [i for i, r in enumerate(left) if phase_overlap(e, r) > 1 - atol]
        if not hit:
            return False
        left.pop(hit[0])
    return True
