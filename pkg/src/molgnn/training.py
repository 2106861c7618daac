"""Training loop, early stopping, hyperparameter search.

Classification trains on masked binary cross-entropy with logits and tracks
mean ROC-AUC on the validation subset; regression uses masked MSE and RMSE.
Early stopping halts after ``patience`` consecutive epochs without strict
improvement, and the returned checkpoint always holds the best-epoch
parameters, not the last. Everything is derived from the config seed, so a
(seed, config, dataset) triple reproduces the epoch history and the
checkpoint bytes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import backward, bce_with_logits, mse, zero_grad
from .checkpoint import Checkpoint
from .data import DataError, Dataset
from .metrics import rmse as rmse_metric
from .metrics import roc_auc_mean
from .models import ModelSpec, init_params, model_forward
from .optim import AdamState, adam_step
from .rng import Rng, derive
from .split import SplitPlan, split

METRICS = ("roc_auc", "rmse")

DEFAULT_SEARCH_SPACE: dict[str, list] = {
    "hidden_size": [32, 64, 128],
    "num_rounds": [1, 2, 3],
    "lr": [1e-2, 1e-3, 3e-4],
    "dropout": [0.0, 0.1, 0.3],
}


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    spec: ModelSpec
    split_strategy: str = "scaffold"
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    max_epochs: int = 300
    patience: int = 30
    batch_size: int = 128
    lr: float = 1e-3
    metric: str | None = None  # default: roc_auc for classification, rmse otherwise

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.metric is None:
            self.metric = "roc_auc" if self.spec.task_type == "classification" else "rmse"
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric '{self.metric}', expected one of {METRICS}")

    @property
    def higher_is_better(self) -> bool:
        return self.metric == "roc_auc"


class EarlyStopper:
    """Strict-improvement early stopping with best-epoch tracking."""

    def __init__(self, patience: int, higher_is_better: bool = True):
        if patience < 1:
            raise ValueError("patience must be at least 1")
        self.patience = patience
        self.higher_is_better = higher_is_better
        self.best_value: float | None = None
        self.best_epoch: int | None = None
        self.epoch = 0
        self.num_bad = 0

    def update(self, value: float) -> bool:
        """Record one epoch's metric; returns True when it improved the best."""
        self.epoch += 1
        if self.best_value is None:
            improved = True
        elif self.higher_is_better:
            improved = value > self.best_value
        else:
            improved = value < self.best_value
        if improved:
            self.best_value = value
            self.best_epoch = self.epoch
            self.num_bad = 0
        else:
            self.num_bad += 1
        return improved

    @property
    def should_stop(self) -> bool:
        return self.num_bad >= self.patience


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[dict]
    plan: SplitPlan
    config: TrainConfig
    records: list[dict] = field(default_factory=list)  # search trials, if any


def _model_input(dataset: Dataset, spec: ModelSpec, indices):
    if spec.kind == "ecfp-mlp":
        return dataset.fingerprint_matrix(indices, spec.fp_radius, spec.fp_bits)
    return dataset.graph_batch(indices)


def predict_scores(
    spec: ModelSpec,
    params,
    dataset: Dataset,
    indices,
    batch_size: int = 128,
) -> np.ndarray:
    """Raw model outputs for the given rows, in order, evaluation mode.

    Both the validation/test evaluation and the predict command call this
    function, so identical row sequences give bit-identical scores.
    """
    indices = list(indices)
    chunks = []
    for start in range(0, len(indices), batch_size):
        part = indices[start : start + batch_size]
        out = model_forward(spec, params, _model_input(dataset, spec, part), train=False)
        chunks.append(out.value)
    return np.concatenate(chunks, axis=0) if chunks else np.zeros((0, spec.n_tasks))


def evaluate(
    spec: ModelSpec,
    params,
    dataset: Dataset,
    indices,
    metric: str,
    batch_size: int = 128,
) -> float:
    scores = predict_scores(spec, params, dataset, indices, batch_size)
    labels = dataset.labels[list(indices)]
    mask = dataset.mask[list(indices)]
    if metric == "roc_auc":
        return roc_auc_mean(scores, labels, mask)
    return rmse_metric(scores, labels, mask)


def make_split_plan(config: TrainConfig, dataset: Dataset) -> SplitPlan:
    labels = None
    if config.split_strategy == "stratified":
        labels = dataset.labels[:, 0]
    return split(
        dataset.molecules,
        strategy=config.split_strategy,
        fractions=config.fractions,
        seed=config.seed,
        labels=labels,
    )


def train_with_early_stopping(
    config: TrainConfig,
    dataset: Dataset,
    plan: SplitPlan | None = None,
) -> TrainResult:
    """Train one model; returns the best-epoch checkpoint and epoch history."""
    if plan is None:
        plan = make_split_plan(config, dataset)
    if not plan.train or not plan.val:
        raise DataError(
            f"split produced an empty subset (train={len(plan.train)}, val={len(plan.val)})"
        )

    spec = config.spec
    params = init_params(spec, seed=config.seed)
    state = AdamState.for_params(params, lr=config.lr)
    stopper = EarlyStopper(config.patience, config.higher_is_better)
    classification = spec.task_type == "classification"

    best_params: dict[str, np.ndarray] = {k: p.value.copy() for k, p in params.items()}
    history: list[dict] = []

    for epoch in range(1, config.max_epochs + 1):
        order = list(plan.train)
        Rng(derive(config.seed, 0x3AF, epoch)).shuffle(order)

        losses = []
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            rows = order[start : start + config.batch_size]
            batch_mask = dataset.mask[rows]
            if batch_mask.sum() == 0:
                continue  # nothing labeled in this batch
            out = model_forward(
                spec,
                params,
                _model_input(dataset, spec, rows),
                train=True,
                dropout_key=derive(config.seed, 0xD0, epoch, b),
            )
            labels = dataset.labels[rows]
            loss = (
                bce_with_logits(out, labels, batch_mask)
                if classification
                else mse(out, labels, batch_mask)
            )
            value = float(loss.value[0, 0])
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {b}"
                )
            losses.append(value)
            zero_grad(params)
            backward(loss)
            adam_step(params, state)

        val_metric = evaluate(spec, params, dataset, plan.val, config.metric, config.batch_size)
        history.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(losses)) if losses else 0.0,
                "val_metric": val_metric,
            }
        )
        if stopper.update(val_metric):
            best_params = {k: p.value.copy() for k, p in params.items()}
        if stopper.should_stop:
            break

    checkpoint = Checkpoint(
        spec=spec,
        params=best_params,
        provenance={
            "seed": config.seed,
            "best_epoch": stopper.best_epoch,
            "val_metric": stopper.best_value,
            "metric": config.metric,
            "epochs_run": stopper.epoch,
        },
    )
    return TrainResult(checkpoint=checkpoint, history=history, plan=plan, config=config)


def _apply_draw(config: TrainConfig, draw: dict) -> TrainConfig:
    spec_fields = set(ModelSpec(kind="gcn", n_tasks=1).to_dict())
    spec_dict = config.spec.to_dict()
    cfg_updates = {}
    for key, value in draw.items():
        if key in spec_fields:
            spec_dict[key] = value
        elif key in ("lr", "batch_size", "max_epochs", "patience"):
            cfg_updates[key] = value
        else:
            raise ValueError(f"unknown hyperparameter '{key}'")
    return TrainConfig(
        spec=ModelSpec.from_dict(spec_dict),
        split_strategy=config.split_strategy,
        fractions=config.fractions,
        seed=config.seed,
        max_epochs=cfg_updates.get("max_epochs", config.max_epochs),
        patience=cfg_updates.get("patience", config.patience),
        batch_size=cfg_updates.get("batch_size", config.batch_size),
        lr=cfg_updates.get("lr", config.lr),
        metric=config.metric,
    )


def random_search(
    base_config: TrainConfig,
    dataset: Dataset,
    space: dict[str, list] | None = None,
    trials: int = 32,
    seed: int = 0,
    plan: SplitPlan | None = None,
) -> tuple[TrainResult, list[dict]]:
    """Seeded uniform random search; best trial by validation metric.

    Every trial trains from scratch with its own derived seed. The split
    plan is shared across trials so validation scores are comparable.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    space = dict(space) if space else dict(DEFAULT_SEARCH_SPACE)
    for key, options in space.items():
        if not options:
            raise ValueError(f"empty candidate list for hyperparameter '{key}'")
    if plan is None:
        plan = make_split_plan(base_config, dataset)

    best: TrainResult | None = None
    records: list[dict] = []
    for trial in range(trials):
        rng = Rng(derive(seed, 0x7718, trial))
        draw = {key: rng.choice(space[key]) for key in sorted(space)}
        config = _apply_draw(base_config, draw)
        config.seed = derive(seed, 0x5EED5, trial) % (2**31)
        result = train_with_early_stopping(config, dataset, plan=plan)
        val = result.checkpoint.provenance["val_metric"]
        records.append(
            {
                "trial": trial,
                "draw": draw,
                "val_metric": val,
                "best_epoch": result.checkpoint.provenance["best_epoch"],
                "epochs_run": result.checkpoint.provenance["epochs_run"],
            }
        )
        if best is None:
            best = result
        else:
            best_val = best.checkpoint.provenance["val_metric"]
            if (val > best_val) if base_config.higher_is_better else (val < best_val):
                best = result
    assert best is not None
    best.records = records
    return best, records
