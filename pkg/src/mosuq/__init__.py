"""Quality-score regression with calibrated predictive uncertainty.

The package trains a small two-head network that predicts both a score and
its variance, recalibrates the variances with a closed-form scale fitted on
held-out data, estimates epistemic uncertainty with MC dropout, and ships
the metrics and synthetic data generators needed to check all of it against
known ground truth.

Submodules:

* net       - two-head MLP: init, forward, hand-derived backward
* loss      - Gaussian NLL and MSE training losses with analytic gradients
* trainer   - mini-batch Adam/SGD loop, checkpoints, loss history
* calibrate - closed-form variance scaling
* mcdropout - stochastic forward passes and epistemic variances
* metrics   - MSE, system Spearman, NLL, UCE, sharpness, AUC, curves
* datagen   - synthetic datasets with known noise, OOD shifts, CSV I/O
* cli       - gen-data / train / calibrate / evaluate / ood-detect
"""

from .calibrate import CalibrationScale, apply_scale, fit_scale
from .datagen import (
    Dataset,
    GenConfig,
    Heteroscedastic,
    Homoscedastic,
    RaterPanel,
    Sample,
    add_feature_noise,
    gen_ood_shift,
    gen_synthetic,
    load_dataset_csv,
    save_dataset_csv,
    split_dataset,
)
from .loss import LossValue, mse_loss, nll_loss
from .mcdropout import MCConfig, MCResult, mc_forward, mc_forward_dataset, variance_of
from .metrics import (
    EvalRecord,
    MetricsReport,
    compute_report,
    error_uncertainty_curve,
    mse,
    nll_metric,
    roc_auc,
    selective_sweep,
    sharpness,
    srcc_system,
    uce,
)
from .net import (
    ArchConfig,
    HeteroPrediction,
    ModelParams,
    backward,
    forward,
    init_params,
)
from .trainer import (
    TrainConfig,
    TrainHistory,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
