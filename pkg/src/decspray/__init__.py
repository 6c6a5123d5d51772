"""Decentralized erasure codes over GF(2^u) with a Monte Carlo harness."""

__version__ = "0.1.0"

from decspray.code import (  # noqa: E402
    BipartiteGraph,
    CodeParams,
    SparseGenerator,
    StoragePacket,
    build_code,
    build_graph,
    degree,
    encode,
    make_generator,
    sufficient_c,
)
from decspray.decode import (  # noqa: E402
    QuerySelection,
    SingularReport,
    Submatrix,
    extract_submatrix,
    rank_and_solve,
    wiedemann_solve,
)
from decspray.field import FieldElement, FieldSpec  # noqa: E402
from decspray.matching import SupportGraph, has_perfect_matching, symbolic_det_is_zero  # noqa: E402
