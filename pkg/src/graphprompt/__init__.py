"""Neighbor-aware LLM prompting pipeline for node classification on
text-attributed graphs."""

from .graph import (
    NodeRecord,
    SplitSpec,
    TextAttributedGraph,
    apply_split,
    load_graph,
    neighbors_at_hop,
    save_graph,
)
from .harness import (
    ExperimentConfig,
    compare_runs,
    report_digest,
    run_experiment,
    subsample_test,
    topk_neighbor_accuracy,
)
from .llm import INVALID, ChatClient, MockOracle, ModelConfig, parse_label
from .profiles import DatasetProfile, get_profile
from .prompts import PromptSpec, attach_mode_decorations, build_prompt, render
from .ranking import (
    EmbeddingClient,
    EmbeddingStore,
    RankedNeighbors,
    cosine,
    load_embeddings,
    rank_and_truncate,
    save_embeddings,
    unranked_passthrough,
)
from .selection import (
    AlphaSchedule,
    CandidateSet,
    SelectionStrategy,
    direct_select,
    failure_rate,
    random_select,
    recursive_select,
)

__version__ = "0.1.0"
