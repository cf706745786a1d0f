"""Transfer-learning pipeline: windowing, training-set selection, pre-train / fine-tune, experiments.

Windows hold n consecutive rows of [scaled strain, scaled process parameters]
and predict the scaled stress at the following point. Parameters enter every
row of a window unchanged (they are constant per sample), and windows never
span sample boundaries. Fine-tuning updates all parameters, starting from the
source model's weights copied verbatim.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .checkpoint import ModelCheckpoint
from .curves import Dataset, RawCurve
from .errors import DataValidationError
from .metrics import DEFAULT_MAPE_EPSILON, MetricSummary, pearson, summarize
from .scaling import CurveScalers, fit_scalers, padded_param_values
from .seqnet import ModelParams, TrainConfig, init_params, train
from .similarity import SourceRanking, rank_sources

VARIANTS = ("vanilla", "tl_all", "dtw_tl")


@dataclass
class SupervisedSet:
    """Windows, targets, and provenance for one training split."""

    windows: list[np.ndarray]
    targets: np.ndarray
    scalers: CurveScalers
    dataset_name: str
    window_sample_ids: list[str]

    def __len__(self) -> int:
        return len(self.windows)

    def sample_ids(self) -> set[str]:
        return set(self.window_sample_ids)


@dataclass
class ExperimentPlan:
    """One experiment: variant, datasets, target split, and training config."""

    variant: str
    source_datasets: list[str]
    target_dataset: str
    target_train_ids: list[str]
    target_test_ids: list[str]
    config: TrainConfig
    grid_n: int = 120
    pad_params: bool = False
    mape_epsilon: float = DEFAULT_MAPE_EPSILON
    # Pre-training sees far more windows per epoch than fine-tuning; this
    # caps the pre-training stage separately (None: use config.epochs).
    pretrain_epochs: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DataValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        overlap = set(self.target_train_ids) & set(self.target_test_ids)
        if overlap:
            raise DataValidationError(f"train/test ids overlap: {sorted(overlap)}")
        if not self.target_train_ids:
            raise DataValidationError("target_train_ids must not be empty")
        if not self.target_test_ids:
            raise DataValidationError("target_test_ids must not be empty")
        if self.variant != "vanilla" and not self.source_datasets:
            raise DataValidationError(f"variant {self.variant!r} requires source datasets")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "sources": list(self.source_datasets),
            "target": self.target_dataset,
            "train_ids": list(self.target_train_ids),
            "test_ids": list(self.target_test_ids),
            "grid_n": self.grid_n,
            "pad_params": self.pad_params,
            "mape_epsilon": self.mape_epsilon,
            "pretrain_epochs": self.pretrain_epochs,
            "train_config": {
                "epochs": self.config.epochs,
                "learning_rate": self.config.learning_rate,
                "sequence_length": self.config.sequence_length,
                "optimizer": self.config.optimizer,
                "seed": self.config.seed,
            },
        }


@dataclass(frozen=True)
class SampleEval:
    """Per-sample prediction metrics plus the predicted stress tail."""

    sample_id: str
    metrics: MetricSummary
    predicted: np.ndarray


@dataclass
class EvalReport:
    """Full result of one experiment run."""

    variant: str
    plan: ExperimentPlan
    per_sample: list[SampleEval]
    aggregate_mape: float
    aggregate_rmse: float
    aggregate_r2: float
    selected_source: str | None = None
    dtw_ranking: SourceRanking | None = None
    pearson_dtw_mape: float | None = None

    def to_dict(self) -> dict:
        doc = {
            "variant": self.variant,
            "plan": self.plan.to_dict(),
            "seed": self.plan.config.seed,
            "per_sample": [
                {
                    "sample_id": s.sample_id,
                    "mape": float(s.metrics.mape),
                    "rmse": float(s.metrics.rmse),
                    "r2": float(s.metrics.r2),
                    "n_points": s.metrics.n_points,
                    "n_excluded": s.metrics.n_excluded,
                    "predicted": [float(v) for v in s.predicted],
                }
                for s in self.per_sample
            ],
            "aggregate": {
                "mape": float(self.aggregate_mape),
                "rmse": float(self.aggregate_rmse),
                "r2": float(self.aggregate_r2),
            },
        }
        if self.selected_source is not None:
            doc["selected_source"] = self.selected_source
        if self.dtw_ranking is not None:
            doc["dtw_ranking"] = {
                "entries": [
                    {"source": name, "avg_dtw": float(d)} for name, d in self.dtw_ranking.entries
                ],
                "selected": self.dtw_ranking.selected,
            }
        if self.pearson_dtw_mape is not None:
            doc["pearson_dtw_mape"] = float(self.pearson_dtw_mape)
        return doc


def _window_features(
    curve: RawCurve, scalers: CurveScalers, pad: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled per-point feature matrix [(strain, params...)] and scaled stress vector."""
    strain = scalers.strain.scale(curve.strain)
    raw_params = padded_param_values(curve, scalers.arity, pad)
    scaled_params = np.array([s.scale(v) for s, v in zip(scalers.params, raw_params)])
    features = np.empty((len(strain), scalers.input_dim))
    features[:, 0] = strain
    features[:, 1:] = scaled_params
    return features, scalers.stress.scale(curve.stress)


def window_dataset(
    curves: list[RawCurve],
    scalers: CurveScalers,
    n: int,
    dataset_name: str = "",
    pad: bool = False,
) -> SupervisedSet:
    """Slide length-n windows over every curve; each window predicts the next stress.

    A curve of L points yields L - n windows. Curves with <= n points are
    skipped with a warning; an error is raised if no windows remain.
    """
    if n < 1:
        raise DataValidationError(f"sequence length must be >= 1, got {n}")
    windows: list[np.ndarray] = []
    targets: list[float] = []
    window_ids: list[str] = []
    for curve in curves:
        length = curve.n_points()
        if length <= n:
            warnings.warn(
                f"sample {curve.sample_id!r} has {length} points (<= sequence length {n}); skipped",
                stacklevel=2,
            )
            continue
        features, stress_scaled = _window_features(curve, scalers, pad)
        for t in range(length - n):
            windows.append(features[t : t + n])
            targets.append(float(stress_scaled[t + n]))
            window_ids.append(curve.sample_id)
    if not windows:
        raise DataValidationError(f"no usable windows: every curve has <= {n} points")
    return SupervisedSet(
        windows=windows,
        targets=np.array(targets),
        scalers=scalers,
        dataset_name=dataset_name,
        window_sample_ids=window_ids,
    )


def select_extreme_training_samples(dataset: Dataset) -> tuple[str, str]:
    """The two samples at the parameter-space corners of the DOE.

    Each parameter column is min-max scaled over the dataset; the samples with
    the smallest and largest scaled-parameter sums are returned (all-minimum
    and all-maximum corners). Ties break toward the smaller sample_id, and the
    two returned ids are always distinct.
    """
    if len(dataset.curves) < 2:
        raise DataValidationError(f"dataset {dataset.name!r} needs >= 2 samples, has {len(dataset.curves)}")
    matrix = np.array([c.param_values() for c in dataset.curves], dtype=float)
    if matrix.shape[1] == 0:
        raise DataValidationError(f"dataset {dataset.name!r} has no process parameters")
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    scores = ((matrix - lo) / span).sum(axis=1)
    ids = dataset.sample_ids()
    by_min = sorted(zip(scores, ids), key=lambda e: (e[0], e[1]))
    low_id = by_min[0][1]
    by_max = sorted(zip(scores, ids), key=lambda e: (-e[0], e[1]))
    high_id = next(sid for _, sid in by_max if sid != low_id)
    return low_id, high_id


def concat_shuffle_sources(datasets: list[Dataset], seed: int) -> list[RawCurve]:
    """Concatenate all source curves and shuffle the sample order (points untouched)."""
    if not datasets:
        raise DataValidationError("concat_shuffle_sources requires at least one dataset")
    curves = [c for ds in datasets for c in ds.curves]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(curves))
    return [curves[i] for i in order]


def pretrain(
    source_curves: list[RawCurve],
    config: TrainConfig,
    dataset_name: str = "source",
    hidden_dim: int = 32,
    param_arity: int | None = None,
    pad: bool = False,
) -> ModelCheckpoint:
    """Train a fresh model on the source curves; scalers are fit on them."""
    if not source_curves:
        raise DataValidationError("pretrain requires a non-empty source curve list")
    scalers = fit_scalers(source_curves, arity=param_arity, pad=pad)
    supervised = window_dataset(source_curves, scalers, config.sequence_length, dataset_name, pad)
    params = init_params(config.seed, scalers.input_dim, hidden_dim)
    params, _ = train(params, supervised.windows, supervised.targets, config)
    return ModelCheckpoint(
        params=params,
        scalers=scalers,
        sequence_length=config.sequence_length,
        seed=config.seed,
        source_dataset=dataset_name,
        stage="pretrained",
    )


def transfer_init(
    checkpoint: ModelCheckpoint, expected_input_dim: int | None = None
) -> ModelParams:
    """Initialize target parameters as an elementwise copy of the source model's.

    Optimizer state is never carried over; fine-tuning starts a fresh one.
    """
    if expected_input_dim is not None and checkpoint.params.input_dim != expected_input_dim:
        raise DataValidationError(
            f"checkpoint input_dim {checkpoint.params.input_dim} does not match "
            f"target input_dim {expected_input_dim}"
        )
    return checkpoint.params.copy()


def finetune(
    params_init: ModelParams,
    target_train_curves: list[RawCurve],
    config: TrainConfig,
    dataset_name: str = "target",
    param_arity: int | None = None,
    pad: bool = False,
) -> ModelCheckpoint:
    """Continue training from the given parameters on the target training curves.

    Scalers are refit on the target training split; all parameters update (no
    freezing). The caller's ``params_init`` is left untouched.
    """
    if not target_train_curves:
        raise DataValidationError("finetune requires a non-empty target training curve list")
    scalers = fit_scalers(target_train_curves, arity=param_arity, pad=pad)
    if scalers.input_dim != params_init.input_dim:
        raise DataValidationError(
            f"target input_dim {scalers.input_dim} does not match model input_dim "
            f"{params_init.input_dim}"
        )
    supervised = window_dataset(target_train_curves, scalers, config.sequence_length, dataset_name, pad)
    params = params_init.copy()
    params, _ = train(params, supervised.windows, supervised.targets, config)
    return ModelCheckpoint(
        params=params,
        scalers=scalers,
        sequence_length=config.sequence_length,
        seed=config.seed,
        source_dataset=dataset_name,
        stage="finetuned",
    )


def predict_curve(checkpoint: ModelCheckpoint, curve: RawCurve) -> np.ndarray:
    """Predicted stress (MPa) at positions n..len-1 of the curve.

    The first n points seed the first window and receive no prediction.
    Features are scaled with the checkpoint's scalers; values outside the
    training range simply scale outside [0, 1].
    """
    from .seqnet import forward_sequence

    n = checkpoint.sequence_length
    if curve.n_points() <= n:
        raise DataValidationError(
            f"sample {curve.sample_id!r} has {curve.n_points()} points, "
            f"need more than sequence length {n}"
        )
    features, _ = _window_features(curve, checkpoint.scalers, pad=True)
    predictions_scaled = np.array(
        [forward_sequence(checkpoint.params, features[t : t + n])[0] for t in range(len(features) - n)]
    )
    return checkpoint.scalers.stress.unscale(predictions_scaled)


def _dataset_map(datasets) -> dict[str, Dataset]:
    if isinstance(datasets, dict):
        return dict(datasets)
    mapping: dict[str, Dataset] = {}
    for ds in datasets:
        if ds.name in mapping:
            raise DataValidationError(f"duplicate dataset name {ds.name!r}")
        mapping[ds.name] = ds
    return mapping


def _split_target(plan: ExperimentPlan, target: Dataset) -> tuple[list[RawCurve], list[RawCurve]]:
    known = set(target.sample_ids())
    for sid in list(plan.target_train_ids) + list(plan.target_test_ids):
        if sid not in known:
            raise DataValidationError(f"dataset {target.name!r} has no sample {sid!r}")
    covered = set(plan.target_train_ids) | set(plan.target_test_ids)
    if covered != known:
        raise DataValidationError(
            f"train/test ids must cover dataset {target.name!r} exactly; "
            f"missing {sorted(known - covered)}"
        )
    train_curves = [target.curve_by_id(sid) for sid in plan.target_train_ids]
    test_curves = [target.curve_by_id(sid) for sid in plan.target_test_ids]
    return train_curves, test_curves


def _resolve_arity(plan: ExperimentPlan, target: Dataset, sources: list[Dataset]) -> int:
    arities = {target.name: len(target.param_schema)}
    for ds in sources:
        arities[ds.name] = len(ds.param_schema)
    distinct = set(arities.values())
    if len(distinct) == 1:
        return distinct.pop()
    if not plan.pad_params:
        raise DataValidationError(
            f"parameter-schema lengths differ across datasets ({arities}); "
            "set pad_params to pad shorter schemas with zero columns"
        )
    return max(distinct)


def _evaluate(
    checkpoint: ModelCheckpoint, test_curves: list[RawCurve], epsilon: float
) -> list[SampleEval]:
    n = checkpoint.sequence_length
    evals = []
    for curve in test_curves:
        predicted = predict_curve(checkpoint, curve)
        actual = curve.stress[n:]
        evals.append(SampleEval(curve.sample_id, summarize(actual, predicted, epsilon), predicted))
    return evals


def run_variant(plan: ExperimentPlan, datasets) -> EvalReport:
    """Execute one experiment variant end to end and evaluate on the target test split.

    vanilla trains from scratch on the target training split; tl_all pre-trains
    on all sources concatenated and shuffled; dtw_tl ranks sources by average
    DTW distance to the target TRAINING curves, pre-trains on the selected
    source only, then fine-tunes. Deterministic for fixed seeds and inputs.
    """
    name_map = _dataset_map(datasets)
    if plan.target_dataset not in name_map:
        raise DataValidationError(f"unknown target dataset {plan.target_dataset!r}")
    target = name_map[plan.target_dataset]
    sources = []
    for name in plan.source_datasets:
        if name not in name_map:
            raise DataValidationError(f"unknown source dataset {name!r}")
        sources.append(name_map[name])

    train_curves, test_curves = _split_target(plan, target)
    arity = _resolve_arity(plan, target, sources if plan.variant != "vanilla" else [])
    config = plan.config
    pre_config = config
    if plan.pretrain_epochs is not None:
        pre_config = replace(config, epochs=plan.pretrain_epochs)

    selected_source: str | None = None
    ranking: SourceRanking | None = None

    if plan.variant == "vanilla":
        params0 = init_params(config.seed, 1 + arity, hidden_dim=32)
    elif plan.variant == "tl_all":
        pool = concat_shuffle_sources(sources, config.seed)
        combined_name = "+".join(ds.name for ds in sources)
        source_ckpt = pretrain(pool, pre_config, combined_name, param_arity=arity, pad=plan.pad_params)
        params0 = transfer_init(source_ckpt, expected_input_dim=1 + arity)
    else:  # dtw_tl
        ranking = rank_sources(sources, train_curves, plan.grid_n)
        selected_source = ranking.selected
        selected = name_map[selected_source]
        source_ckpt = pretrain(
            selected.curves, pre_config, selected.name, param_arity=arity, pad=plan.pad_params
        )
        params0 = transfer_init(source_ckpt, expected_input_dim=1 + arity)

    checkpoint = finetune(
        params0, train_curves, config, target.name, param_arity=arity, pad=plan.pad_params
    )

    per_sample = _evaluate(checkpoint, test_curves, plan.mape_epsilon)
    return EvalReport(
        variant=plan.variant,
        plan=plan,
        per_sample=per_sample,
        aggregate_mape=float(np.mean([s.metrics.mape for s in per_sample])),
        aggregate_rmse=float(np.mean([s.metrics.rmse for s in per_sample])),
        aggregate_r2=float(np.mean([s.metrics.r2 for s in per_sample])),
        selected_source=selected_source,
        dtw_ranking=ranking,
    )


def run_source_sweep(plan: ExperimentPlan, datasets) -> tuple[list[tuple[str, float, float]], float]:
    """Fine-tune once per candidate source and correlate avg DTW with test MAPE.

    Returns ([(source, avg_dtw, aggregate_mape)], pearson) over all sources in
    the plan; this is the per-target experiment behind the distance-vs-error
    tables.
    """
    name_map = _dataset_map(datasets)
    target = name_map[plan.target_dataset]
    sources = [name_map[name] for name in plan.source_datasets]
    train_curves, test_curves = _split_target(plan, target)
    arity = _resolve_arity(plan, target, sources)
    config = plan.config
    pre_config = config
    if plan.pretrain_epochs is not None:
        pre_config = replace(config, epochs=plan.pretrain_epochs)

    ranking = rank_sources(sources, train_curves, plan.grid_n)
    avg_dtw = dict(ranking.entries)

    entries = []
    for ds in sources:
        source_ckpt = pretrain(ds.curves, pre_config, ds.name, param_arity=arity, pad=plan.pad_params)
        params0 = transfer_init(source_ckpt, expected_input_dim=1 + arity)
        checkpoint = finetune(
            params0, train_curves, config, target.name, param_arity=arity, pad=plan.pad_params
        )
        per_sample = _evaluate(checkpoint, test_curves, plan.mape_epsilon)
        entries.append((ds.name, avg_dtw[ds.name], float(np.mean([s.metrics.mape for s in per_sample]))))
    correlation = pearson([e[1] for e in entries], [e[2] for e in entries])
    return entries, correlation
