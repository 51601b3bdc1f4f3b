"""Surrogate-assisted multiobjective search over segmentation architectures."""

from .adaptive import SubproblemUtilities, ValueScoreTable
from .decomposition import DecompositionState, dominates, init_weights, neighborhoods, pbi
from .engine import (
    BudgetCounters,
    Engine,
    EngineAbort,
    EngineConfig,
    RunResult,
    VARIANTS,
    lhs_genomes,
    make_child,
    write_nds_csv,
)
from .evaluators import (
    EvaluationError,
    EvaluationRecord,
    EvaluationTimeoutError,
    ExternalEvaluator,
    MissingRowError,
    ProtocolError,
    SyntheticEvaluator,
    TabularEvaluator,
    make_evaluator,
    record_for,
    synthetic_metrics,
)
from .genome import (
    CONV2D,
    CONV3D,
    FIELD_DOMAINS,
    FIELD_NAMES,
    Genome,
    InvalidGenomeError,
    OPERATIONS,
    P3D,
    SPACE_SIZE,
    count_params,
    decode,
    enumerate_space,
    space_size,
    validate,
)
from .metrics import FrontSummary, hypervolume, igd, nondominated_indices, true_front
from .objectives import (
    ObjectiveConfig,
    ObjectiveVector,
    TrainingMetrics,
    ese,
    ese_max,
    objectives_for,
    size_objective,
)
from .surrogate import ForestRegressor, ForestSettings, GenomeEncoder, InsufficientDataError

__version__ = "0.1.0"
