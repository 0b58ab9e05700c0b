"""Epistemic uncertainty from repeated stochastic forward passes.

The network is run num_passes times with head dropout active; the spread
of the sampled outputs measures how much the model's prediction depends on
which units happen to be dropped. Two epistemic signals are reported:

* epi_pred_var - population variance of the sampled score outputs,
* epi_dist_var - population variance of the sampled log-variance outputs.

Population variance (divisor = number of passes) is used throughout. The
aleatoric variance is the mean of exp(s_t) across passes, multiplied by
r^2 when a calibration scale is supplied; calibration never touches the
epistemic quantities.

Each pass draws its masks from an independent substream derived from
(seed, pass index), so results are reproducible pass-by-pass and invariant
to how many passes run before or after.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .calibrate import CalibrationScale
from .errors import ConfigError, InputError
from .net import ModelParams, forward

__all__ = ["MCConfig", "MCResult", "variance_of", "mc_forward", "mc_forward_dataset", "row_seed"]


@dataclass(frozen=True)
class MCConfig:
    num_passes: int = 25
    dropout_p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_passes < 1:
            raise ConfigError(f"num_passes must be >= 1, got {self.num_passes}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class MCResult:
    """Summary of one sample's stochastic passes."""

    y_samples: tuple[float, ...]
    s_samples: tuple[float, ...]
    y_mean: float
    s_mean: float
    epi_pred_var: float
    epi_dist_var: float
    aleatoric_var: float


def variance_of(samples: Sequence[float]) -> float:
    """Population variance (divisor = n), computed in two passes.

    Identical samples short-circuit to exactly 0.0, so degenerate sampling
    setups (single pass, zero dropout) report zero epistemic variance
    without floating-point residue.
    """
    a = np.asarray(samples, dtype=float)
    if a.size == 0:
        raise InputError("variance of an empty sample list is undefined")
    if np.all(a == a[0]):
        return 0.0
    mean = a.mean()
    return float(np.mean((a - mean) ** 2))


def _summarize(
    y_samples: Sequence[float],
    s_samples: Sequence[float],
    scale: CalibrationScale | None,
) -> MCResult:
    y = tuple(float(v) for v in y_samples)
    s = tuple(float(v) for v in s_samples)
    if len(y) != len(s) or not y:
        raise InputError("need equally many (and at least one) score and log-variance samples")
    aleatoric = float(np.mean(np.exp(s)))
    if scale is not None:
        aleatoric *= scale.variance_multiplier
    return MCResult(
        y_samples=y,
        s_samples=s,
        y_mean=float(np.mean(y)),
        s_mean=float(np.mean(s)),
        epi_pred_var=variance_of(y),
        epi_dist_var=variance_of(s),
        aleatoric_var=aleatoric,
    )


def _pass_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def mc_forward(
    params: ModelParams,
    x: np.ndarray,
    cfg: MCConfig,
    scale: CalibrationScale | None = None,
) -> MCResult:
    """Run num_passes dropout forward passes on one feature vector."""
    y_samples = []
    s_samples = []
    for t in range(cfg.num_passes):
        pred, _ = forward(
            params, x, mode="dropout", rng=_pass_rng(cfg.seed, t), dropout_p=cfg.dropout_p
        )
        y_samples.append(pred.y_hat)
        s_samples.append(pred.s)
    return _summarize(y_samples, s_samples, scale)


def row_seed(base_seed: int, row_index: int) -> int:
    """Independent per-row seed for dataset-level sampling."""
    return int(np.random.SeedSequence([base_seed, row_index]).generate_state(1)[0])


def mc_forward_dataset(
    params: ModelParams,
    features: np.ndarray,
    cfg: MCConfig,
    scale: CalibrationScale | None = None,
) -> list[MCResult]:
    """mc_forward over every row of a feature matrix.

    Row i uses seed row_seed(cfg.seed, i), so per-row results do not depend
    on which other rows are present and repeat runs are bit-identical.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise InputError(f"expected a 2-d feature matrix, got shape {features.shape}")
    return [
        mc_forward(params, row, replace(cfg, seed=row_seed(cfg.seed, i)), scale)
        for i, row in enumerate(features)
    ]
