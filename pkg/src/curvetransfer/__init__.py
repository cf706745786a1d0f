"""Stress-strain curve transfer learning with DTW-based source selection."""

from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .curves import (
    Dataset,
    GridCurve,
    ParamField,
    RawCurve,
    grid_curve,
    load_dataset,
    normalize_curve,
    resample_to_grid,
    save_dataset,
    validate_curve,
)
from .errors import DataValidationError, TrainingDivergenceError
from .metrics import MetricSummary, mape, pearson, r2, rmse, summarize
from .scaling import CurveScalers, FeatureScaler, fit_scalers
from .seqnet import (
    CellState,
    ModelParams,
    TrainConfig,
    backward,
    forward_sequence,
    gradient_check,
    init_params,
    lstm_cell_forward,
    loss_mse,
    optimizer_step,
    train,
)
from .similarity import (
    CostMatrices,
    DtwResult,
    SourceRanking,
    average_dtw,
    brute_force_dtw,
    cumulative_cost,
    dtw_distance,
    euclidean_distance,
    local_distance_matrix,
    pearson_similarity,
    rank_sources,
)
from .synthgen import FamilySpec, generate_dataset, standard_suite
from .transfer import (
    EvalReport,
    ExperimentPlan,
    SupervisedSet,
    concat_shuffle_sources,
    finetune,
    predict_curve,
    pretrain,
    run_source_sweep,
    run_variant,
    select_extreme_training_samples,
    transfer_init,
    window_dataset,
)

__version__ = "0.1.0"
