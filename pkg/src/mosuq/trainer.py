"""Mini-batch training loop and checkpoint serialization.

The loop is deliberately plain: shuffle, slice into batches, run the
batched forward pass with dropout active, push the analytic loss gradients
through the batched backward pass, and apply either Adam or plain SGD.
Every source of randomness (init, per-epoch shuffling, dropout masks) is
derived from the single seed in TrainConfig, so a (dataset, arch, config)
triple always reproduces the same parameters bit for bit.

Checkpoints are canonical JSON: keys sorted, two-space indent, trailing
newline, floats via repr. Saving a loaded checkpoint therefore reproduces
the original file byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import Dataset
from .errors import (
    CheckpointError,
    CheckpointVersionError,
    ConfigError,
    InputError,
    ShapeError,
    TrainingDivergedError,
)
from .ioutils import atomic_write_text, canonical_json
from .loss import LOSSES, mse_loss_batch, nll_loss_batch
from .net import (
    ArchConfig,
    ModelParams,
    backward_batch,
    forward_batch,
    grad_arrays,
    init_params,
    param_arrays,
)

__all__ = [
    "CHECKPOINT_FORMAT_VERSION",
    "OPTIMIZERS",
    "TrainConfig",
    "TrainHistory",
    "train",
    "predict_batch",
    "save_checkpoint",
    "load_checkpoint",
    "save_history_csv",
]

CHECKPOINT_FORMAT_VERSION = 1

OPTIMIZERS = ("adam", "sgd")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 3e-4
    loss: str = "nll"
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class TrainHistory:
    """Per-epoch mean losses; val_loss is None when no validation split ran."""

    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...] | None


class _Adam:
    def __init__(self, arrays: list[np.ndarray], lr: float):
        self.lr = lr
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1**self.t
        bc2 = 1.0 - ADAM_BETA2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            a -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


class _SGD:
    def __init__(self, arrays: list[np.ndarray], lr: float):
        self.lr = lr

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for a, g in zip(arrays, grads):
            a -= self.lr * g


def _copy_params(params: ModelParams) -> ModelParams:
    return ModelParams(
        arch=params.arch,
        trunk_w=[w.copy() for w in params.trunk_w],
        trunk_b=[b.copy() for b in params.trunk_b],
        score_w=[w.copy() for w in params.score_w],
        score_b=[b.copy() for b in params.score_b],
        logvar_w=[w.copy() for w in params.logvar_w],
        logvar_b=[b.copy() for b in params.logvar_b],
        rng_seed_used=params.rng_seed_used,
    )


def train(
    dataset: Dataset,
    arch: ArchConfig,
    cfg: TrainConfig,
    val_dataset: Dataset | None = None,
) -> tuple[ModelParams, TrainHistory]:
    """Train a fresh network on the dataset.

    Weights start from init_params(arch, cfg.seed); dropout is active in
    every training forward pass (a no-op when arch.dropout_p is 0).
    Per-epoch losses are means over samples. A non-finite batch loss aborts
    with TrainingDivergedError naming the offending epoch.
    """
    n = len(dataset)
    if n == 0:
        raise InputError("training dataset is empty")
    if dataset.feature_dim != arch.input_dim:
        raise ShapeError(
            f"dataset has {dataset.feature_dim} features but arch expects {arch.input_dim}"
        )
    if cfg.batch_size > n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")

    x_all = dataset.features()
    y_all = dataset.labels()
    if not np.all(np.isfinite(y_all)):
        raise InputError("training labels contain non-finite values")
    if val_dataset is not None:
        if len(val_dataset) == 0:
            raise InputError("validation dataset is empty")
        if val_dataset.feature_dim != arch.input_dim:
            raise ShapeError(
                f"validation data has {val_dataset.feature_dim} features, "
                f"arch expects {arch.input_dim}"
            )
        x_val = val_dataset.features()
        y_val = val_dataset.labels()

    params = _copy_params(init_params(arch, cfg.seed))
    arrays = param_arrays(params)
    optimizer = (_Adam if cfg.optimizer == "adam" else _SGD)(arrays, cfg.learning_rate)
    loss_batch = nll_loss_batch if cfg.loss == "nll" else mse_loss_batch

    shuffle_stream, dropout_stream = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_stream)
    dropout_rng = np.random.default_rng(dropout_stream)

    train_curve = []
    val_curve = [] if val_dataset is not None else None
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_all[idx], y_all[idx]
            y_hat, s, cache = forward_batch(params, xb, mode="dropout", rng=dropout_rng)
            values, d_y_hat, d_s = loss_batch(y_hat, s, yb)
            batch_loss = float(values.mean())
            if not math.isfinite(batch_loss):
                raise TrainingDivergedError(epoch)
            epoch_loss_sum += float(values.sum())
            # Batch loss is a mean, so upstream derivatives carry the 1/B.
            grads = backward_batch(cache, params, d_y_hat / len(idx), d_s / len(idx))
            optimizer.step(arrays, grad_arrays(grads))
        train_curve.append(epoch_loss_sum / n)

        if val_dataset is not None:
            y_hat, s, _ = forward_batch(params, x_val, mode="deterministic")
            val_values, _, _ = loss_batch(y_hat, s, y_val)
            val_loss = float(val_values.mean())
            if not math.isfinite(val_loss):
                raise TrainingDivergedError(epoch)
            val_curve.append(val_loss)

    history = TrainHistory(
        train_loss=tuple(train_curve),
        val_loss=tuple(val_curve) if val_curve is not None else None,
    )
    return _copy_params(params), history


def predict_batch(params: ModelParams, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (y_hat, s) arrays for a feature matrix."""
    y_hat, s, _ = forward_batch(params, features, mode="deterministic")
    return y_hat, s


def checkpoint_document(params: ModelParams, calibration_r: float | None = None) -> dict:
    """The JSON-serializable form of a model."""
    arch = params.arch
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "arch": {
            "input_dim": arch.input_dim,
            "trunk_dims": list(arch.trunk_dims),
            "head_hidden_dim": arch.head_hidden_dim,
            "dropout_p": arch.dropout_p,
            "activation": arch.activation,
        },
        "weights": {
            "trunk": [w.tolist() for w in params.trunk_w],
            "score_head": [w.tolist() for w in params.score_w],
            "logvar_head": [w.tolist() for w in params.logvar_w],
        },
        "biases": {
            "trunk": [b.tolist() for b in params.trunk_b],
            "score_head": [b.tolist() for b in params.score_b],
            "logvar_head": [b.tolist() for b in params.logvar_b],
        },
        "rng_seed_used": params.rng_seed_used,
    }
    if calibration_r is not None:
        doc["calibration_r"] = float(calibration_r)
    return doc


def save_checkpoint(
    params: ModelParams, path: str | Path, calibration_r: float | None = None
) -> None:
    """Serialize a model (and optional calibration scale) as canonical JSON."""
    atomic_write_text(path, canonical_json(checkpoint_document(params, calibration_r)))


def _as_matrix_list(node, what: str) -> list[np.ndarray]:
    try:
        arrays = [np.array(m, dtype=float) for m in node]
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {what} are not numeric arrays: {exc}") from None
    return arrays


def load_checkpoint(path: str | Path) -> tuple[ModelParams, float | None]:
    """Load a checkpoint, returning (params, calibration_r or None)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise CheckpointError(f"{path}: checkpoint root must be an object")

    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format_version {version!r} is not supported "
            f"(expected {CHECKPOINT_FORMAT_VERSION})"
        )
    for key in ("arch", "weights", "biases", "rng_seed_used"):
        if key not in doc:
            raise CheckpointError(f"{path}: missing field {key!r}")

    try:
        arch = ArchConfig(
            input_dim=int(doc["arch"]["input_dim"]),
            trunk_dims=tuple(int(w) for w in doc["arch"]["trunk_dims"]),
            head_hidden_dim=int(doc["arch"]["head_hidden_dim"]),
            dropout_p=float(doc["arch"]["dropout_p"]),
            activation=str(doc["arch"]["activation"]),
        )
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise CheckpointError(f"{path}: invalid arch section: {exc}") from None

    try:
        weights = doc["weights"]
        biases = doc["biases"]
        params = ModelParams(
            arch=arch,
            trunk_w=_as_matrix_list(weights["trunk"], "trunk weights"),
            trunk_b=_as_matrix_list(biases["trunk"], "trunk biases"),
            score_w=_as_matrix_list(weights["score_head"], "score head weights"),
            score_b=_as_matrix_list(biases["score_head"], "score head biases"),
            logvar_w=_as_matrix_list(weights["logvar_head"], "logvar head weights"),
            logvar_b=_as_matrix_list(biases["logvar_head"], "logvar head biases"),
            rng_seed_used=int(doc["rng_seed_used"]),
        )
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: malformed weights/biases: {exc}") from None

    expected = _expected_shapes(arch)
    actual = [a.shape for a in param_arrays(params)]
    if actual != expected:
        raise CheckpointError(
            f"{path}: weight shapes {actual} do not match arch (expected {expected})"
        )
    if not all(np.all(np.isfinite(a)) for a in param_arrays(params)):
        raise CheckpointError(f"{path}: checkpoint contains non-finite values")

    calibration_r = doc.get("calibration_r")
    if calibration_r is not None:
        calibration_r = float(calibration_r)
        if not (math.isfinite(calibration_r) and calibration_r > 0.0):
            raise CheckpointError(
                f"{path}: calibration_r must be positive and finite, got {calibration_r}"
            )
    return params, calibration_r


def _expected_shapes(arch: ArchConfig) -> list[tuple[int, ...]]:
    shapes = []
    fan_in = arch.input_dim
    for width in arch.trunk_dims:
        shapes.append((width, fan_in))
        fan_in = width
    trunk_b = [(w,) for w in arch.trunk_dims]
    head_w = [(arch.head_hidden_dim, arch.trunk_output_dim), (1, arch.head_hidden_dim)]
    head_b = [(arch.head_hidden_dim,), (1,)]
    return shapes + trunk_b + head_w + head_b + head_w + head_b


def save_history_csv(history: TrainHistory, path: str | Path) -> None:
    """Write `epoch,train_loss,val_loss` rows; val cells are empty when no
    validation split was supplied."""
    lines = ["epoch,train_loss,val_loss"]
    for i, tl in enumerate(history.train_loss, start=1):
        vl = "" if history.val_loss is None else repr(float(history.val_loss[i - 1]))
        lines.append(f"{i},{repr(float(tl))},{vl}")
    atomic_write_text(path, "\n".join(lines) + "\n")
