"""Structure analysis and LOCC simulation for bipartite unitary gates."""

from .errors import *  # noqa: F401,F403
from .linalg import DEFAULT_TOL, Tolerance
from .schmidt import BipartiteUnitary, SchmidtDecomposition, schmidt_decompose, schmidt_rank
from .controlled import (
    BlockStructure,
    ControlledForm,
    check_controlled,
    extract_controlled_form,
    finest_block_structure,
    joint_diagonalize,
    simultaneous_svd,
    zero_block_reduction,
)
from .equivalence import LocalEquivalenceWitness, SLWitness, controlled_from_sl_witness, sl_to_lu
from .protocol import (
    PureState,
    ProtocolTranscript,
    entanglement_entropy,
    implement_schmidt_rank3,
    maximally_entangled,
    simulate_controlled_protocol,
    simulate_teleport_protocol,
)
from .ranks import KroneckerSum, check_rank_inequality, partial_transpose, verify_rank3_unitary_equality
from .fixtures import FIXTURES, get_fixture

__version__ = "0.1.0"
