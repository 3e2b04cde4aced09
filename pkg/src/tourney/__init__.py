"""Query-efficient top-m selection over tournaments with k-wise comparison oracles."""

from .condensation import (
    CondensationGraph,
    SccDecomposition,
    TieredRanking,
    condense,
    kappa_lift_check,
    refines,
    scc_decompose,
    tiered_ranking,
)
from .errors import *  # noqa: F401,F403
from .graph import (
    FinalizationState,
    RankSpectrum,
    ReachSummary,
    RevealedGraph,
    Tournament,
    add_edges,
    finalization,
    new_revealed,
    parse_tournament,
    rank_spectrum,
    reach_summary,
    read_tournament,
    resolved_set,
)
from .oracle import (
    CountingOracle,
    ExternalOracle,
    MatrixOracle,
    OracleStats,
    PermutationOracle,
    RecordingOracle,
    ReplayOracle,
    make_external_oracle,
    make_matrix_oracle,
    make_permutation_oracle,
    make_replay_oracle,
    wrap_counting,
    wrap_recording,
)
from .scheduler import (
    RunOptions,
    RunResult,
    RunTrace,
    blitzrank,
    extract_checkpoints,
    general_sort,
    transitive_sort,
)

__version__ = "0.1.0"
