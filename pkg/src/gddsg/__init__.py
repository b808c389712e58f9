"""Graph-driven dynamic similarity grouping for class-incremental learning.

The engine ingests labeled embedding vectors task by task, splits classes
into low-similarity groups with an adaptive threshold test plus greedy
graph coloring, trains an isolated closed-form ridge classifier per group,
and predicts in two stages: route a sample to a group, then take the
argmax within it. Companion modules supply file formats, synthetic
streams, evaluation metrics, and exact theory evaluators.
"""

from .dataset import (
    EmbeddingRecord,
    SyntheticSpec,
    TaskEntry,
    TaskManifest,
    generate_synthetic,
    load_manifest,
    load_task_arrays,
    read_embedding_arrays,
    read_embedding_file,
    save_manifest,
    synthetic_centers,
    write_embedding_arrays,
    write_embedding_file,
)
from .errors import (
    BadMagicError,
    DomainError,
    FormatError,
    GddsgError,
    ManifestError,
    NonFiniteError,
    StateError,
    TruncatedError,
)
from .grouping import (
    ClassStats,
    Coloring,
    GroupTable,
    SimGraph,
    adaptive_threshold,
    are_dissimilar,
    assign_task_classes,
    build_simgraph,
    compute_class_stats,
    distance,
    make_simgraph,
    welsh_powell,
    welsh_powell_bound,
)
from .groupid import CentroidRegistry, GroupKNN, Reservoir
from .metrics import (
    AccuracyLedger,
    OrderRunSet,
    final_average_accuracy,
    forgetting,
    ledger_from_json_dict,
    ledger_to_json_dict,
    opd_metrics,
)
from .pipeline import (
    GddsgConfig,
    GddsgState,
    StreamResult,
    TaskData,
    accuracy_by_class,
    build_meta_dataset,
    create_state,
    load_state,
    predict,
    predict_batch,
    predict_group,
    read_matrix,
    run_stream,
    save_state,
    train_task,
    write_matrix,
)
from .projection import RandomProjection, expand, init_projection
from .ridge import LAMBDA_POOL, RidgeGroup, batch_ridge, one_hot
from .theory import (
    BrooksParams,
    PermutationStudy,
    TheoryParams,
    brooks_probability,
    expected_forgetting,
    expected_generalization,
    permutation_variance_study,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyLedger",
    "BadMagicError",
    "BrooksParams",
    "CentroidRegistry",
    "ClassStats",
    "Coloring",
    "DomainError",
    "EmbeddingRecord",
    "FormatError",
    "GddsgConfig",
    "GddsgError",
    "GddsgState",
    "GroupKNN",
    "GroupTable",
    "LAMBDA_POOL",
    "ManifestError",
    "NonFiniteError",
    "OrderRunSet",
    "PermutationStudy",
    "RandomProjection",
    "Reservoir",
    "RidgeGroup",
    "SimGraph",
    "StateError",
    "StreamResult",
    "SyntheticSpec",
    "TaskData",
    "TaskEntry",
    "TaskManifest",
    "TheoryParams",
    "TruncatedError",
    "accuracy_by_class",
    "adaptive_threshold",
    "are_dissimilar",
    "assign_task_classes",
    "batch_ridge",
    "brooks_probability",
    "build_meta_dataset",
    "build_simgraph",
    "compute_class_stats",
    "create_state",
    "distance",
    "expand",
    "expected_forgetting",
    "expected_generalization",
    "final_average_accuracy",
    "forgetting",
    "generate_synthetic",
    "init_projection",
    "ledger_from_json_dict",
    "ledger_to_json_dict",
    "load_manifest",
    "load_state",
    "load_task_arrays",
    "make_simgraph",
    "one_hot",
    "opd_metrics",
    "permutation_variance_study",
    "predict",
    "predict_batch",
    "predict_group",
    "read_embedding_arrays",
    "read_embedding_file",
    "read_matrix",
    "run_stream",
    "save_manifest",
    "save_state",
    "synthetic_centers",
    "train_task",
    "welsh_powell",
    "welsh_powell_bound",
    "write_embedding_arrays",
    "write_embedding_file",
    "write_matrix",
]
