"""Two-head feed-forward network with hand-derived backpropagation.

A shared trunk maps a feature vector to a hidden representation. Two heads
map that representation to a predicted score and to the log of the
predicted variance. Each head is a dropout layer followed by two linear
layers with one activation in between, so test-time MC sampling only ever
perturbs the heads.

Everything here is pure and explicit: parameters are plain numpy arrays,
randomness enters only through generators passed by the caller, and
gradients are computed by replaying the cached forward pass rather than by
any autodiff machinery. Batched variants (``forward_batch`` and
``backward_batch``) share the exact code path used by the single-sample
operations; the trainer calls them directly for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError, ShapeError

__all__ = [
    "ACTIVATIONS",
    "S_CLAMP",
    "ArchConfig",
    "ModelParams",
    "Gradients",
    "HeteroPrediction",
    "ForwardCache",
    "dropout_mask",
    "init_params",
    "forward",
    "forward_batch",
    "backward",
    "backward_batch",
    "param_arrays",
    "grad_arrays",
]

ACTIVATIONS = ("tanh", "relu")

# Log-variance head outputs are clamped to this symmetric range so that
# exp(s) stays within roughly [4.5e-5, 2.2e4] no matter how far training
# or an out-of-distribution input pushes the raw head output.
S_CLAMP = 10.0

MODES = ("deterministic", "dropout")


@dataclass(frozen=True)
class ArchConfig:
    """Network shape and regularisation settings.

    trunk_dims may be empty, in which case both heads read the raw input.
    dropout_p is the drop probability used whenever a forward pass runs in
    dropout mode (training and MC sampling may override it per call).
    """

    input_dim: int = 16
    trunk_dims: tuple[int, ...] = (32,)
    head_hidden_dim: int = 16
    dropout_p: float = 0.5
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "trunk_dims", tuple(int(w) for w in self.trunk_dims))
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if any(w < 1 for w in self.trunk_dims):
            raise ConfigError(f"trunk widths must all be >= 1, got {self.trunk_dims}")
        if self.head_hidden_dim < 1:
            raise ConfigError(f"head_hidden_dim must be >= 1, got {self.head_hidden_dim}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def trunk_output_dim(self) -> int:
        return self.trunk_dims[-1] if self.trunk_dims else self.input_dim


@dataclass(frozen=True)
class ModelParams:
    """All learnable arrays. Treat instances as immutable once published.

    Weight matrices are stored as (fan_out, fan_in); layer l computes
    a_out = act(W @ a_in + b). Each head holds exactly two layers:
    index 0 maps the (dropped-out) trunk output to the head hidden layer,
    index 1 maps the head hidden layer to the scalar output.
    """

    arch: ArchConfig
    trunk_w: list[np.ndarray]
    trunk_b: list[np.ndarray]
    score_w: list[np.ndarray]
    score_b: list[np.ndarray]
    logvar_w: list[np.ndarray]
    logvar_b: list[np.ndarray]
    rng_seed_used: int


@dataclass
class Gradients:
    """Same array layout as ModelParams, one entry per learnable array."""

    trunk_w: list[np.ndarray]
    trunk_b: list[np.ndarray]
    score_w: list[np.ndarray]
    score_b: list[np.ndarray]
    logvar_w: list[np.ndarray]
    logvar_b: list[np.ndarray]


@dataclass(frozen=True)
class HeteroPrediction:
    """A Gaussian predictive distribution for one input.

    s is the log of the predicted variance; sigma2 is always exp(s).
    """

    y_hat: float
    s: float

    @property
    def sigma2(self) -> float:
        return math.exp(self.s)


@dataclass
class _HeadCache:
    mask: np.ndarray | None     # (B, trunk_out) inverted-dropout mask, None in deterministic mode
    h_in: np.ndarray            # (B, trunk_out) head input after dropout
    hidden_pre: np.ndarray      # (B, head_hidden)
    hidden_post: np.ndarray     # (B, head_hidden)


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, replayed by backward()."""

    mode: str
    dropout_p: float
    x: np.ndarray               # (B, input_dim)
    trunk_pre: list[np.ndarray]
    trunk_post: list[np.ndarray]
    score: _HeadCache = field(repr=False)
    logvar: _HeadCache = field(repr=False)
    s_raw: np.ndarray          # (B,) log-variance before clamping

    @property
    def batch_size(self) -> int:
        return self.x.shape[0]


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activate_grad(pre: np.ndarray, post: np.ndarray, kind: str) -> np.ndarray:
    # tanh' from the cached output avoids recomputing tanh; relu' is 0 at 0.
    if kind == "tanh":
        return 1.0 - post * post
    return (pre > 0.0).astype(float)


def dropout_mask(rng: np.random.Generator, shape: tuple[int, ...], p: float) -> np.ndarray:
    """Inverted-dropout mask: entries are 0 with probability p, else 1/(1-p).

    With p = 0 no random numbers are consumed and the mask is all ones, so
    dropout mode with p = 0 is bit-identical to a deterministic pass.
    """
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must lie in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def init_params(arch: ArchConfig, seed: int) -> ModelParams:
    """Deterministically initialise all layers from one integer seed.

    Weights are uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)]; biases are
    zero. Draw order is fixed: trunk layers, then score head, then
    log-variance head.
    """
    rng = np.random.default_rng(seed)

    def layer(fan_out: int, fan_in: int) -> tuple[np.ndarray, np.ndarray]:
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        return w, np.zeros(fan_out)

    trunk_w, trunk_b = [], []
    fan_in = arch.input_dim
    for width in arch.trunk_dims:
        w, b = layer(width, fan_in)
        trunk_w.append(w)
        trunk_b.append(b)
        fan_in = width

    heads = []
    for _ in range(2):
        w1, b1 = layer(arch.head_hidden_dim, arch.trunk_output_dim)
        w2, b2 = layer(1, arch.head_hidden_dim)
        heads.append(([w1, w2], [b1, b2]))
    (score_w, score_b), (logvar_w, logvar_b) = heads

    return ModelParams(
        arch=arch,
        trunk_w=trunk_w,
        trunk_b=trunk_b,
        score_w=score_w,
        score_b=score_b,
        logvar_w=logvar_w,
        logvar_b=logvar_b,
        rng_seed_used=int(seed),
    )


def _check_features(arch: ArchConfig, x: np.ndarray) -> None:
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ShapeError(
            f"expected features of width {arch.input_dim}, got array of shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InputError("features contain non-finite values")


def _head_forward(
    h: np.ndarray,
    w: list[np.ndarray],
    b: list[np.ndarray],
    kind: str,
    mask: np.ndarray | None,
) -> tuple[np.ndarray, _HeadCache]:
    h_in = h if mask is None else h * mask
    hidden_pre = h_in @ w[0].T + b[0]
    hidden_post = _activate(hidden_pre, kind)
    out = hidden_post @ w[1].T + b[1]
    return out[:, 0], _HeadCache(mask, h_in, hidden_pre, hidden_post)


def forward_batch(
    params: ModelParams,
    x: np.ndarray,
    mode: str = "deterministic",
    rng: np.random.Generator | None = None,
    dropout_p: float | None = None,
) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Run the network on a (batch, input_dim) array.

    Returns (y_hat, s, cache) where y_hat and s are (batch,) arrays and s
    is already clamped to [-S_CLAMP, +S_CLAMP]. In dropout mode one mask is
    drawn per head, score head first, from the supplied generator.
    """
    arch = params.arch
    x = np.asarray(x, dtype=float)
    _check_features(arch, x)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    p = arch.dropout_p if dropout_p is None else float(dropout_p)
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout_p must lie in [0, 1), got {p}")
    if mode == "dropout" and rng is None:
        raise ConfigError("dropout mode requires an rng")

    a = x
    trunk_pre, trunk_post = [], []
    for w, b in zip(params.trunk_w, params.trunk_b):
        z = a @ w.T + b
        a = _activate(z, arch.activation)
        trunk_pre.append(z)
        trunk_post.append(a)

    if mode == "dropout":
        score_mask = dropout_mask(rng, a.shape, p)
        logvar_mask = dropout_mask(rng, a.shape, p)
    else:
        score_mask = logvar_mask = None

    y_hat, score_cache = _head_forward(
        a, params.score_w, params.score_b, arch.activation, score_mask
    )
    s_raw, logvar_cache = _head_forward(
        a, params.logvar_w, params.logvar_b, arch.activation, logvar_mask
    )
    s = np.clip(s_raw, -S_CLAMP, S_CLAMP)

    cache = ForwardCache(
        mode=mode,
        dropout_p=p,
        x=x,
        trunk_pre=trunk_pre,
        trunk_post=trunk_post,
        score=score_cache,
        logvar=logvar_cache,
        s_raw=s_raw,
    )
    return y_hat, s, cache


def forward(
    params: ModelParams,
    x: np.ndarray,
    mode: str = "deterministic",
    rng: np.random.Generator | None = None,
    dropout_p: float | None = None,
) -> tuple[HeteroPrediction, ForwardCache]:
    """Run the network on one feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-d feature vector, got array of shape {x.shape}")
    y_hat, s, cache = forward_batch(params, x[None, :], mode, rng, dropout_p)
    return HeteroPrediction(float(y_hat[0]), float(s[0])), cache


def _head_backward(
    cache: _HeadCache,
    w: list[np.ndarray],
    d_out: np.ndarray,
    kind: str,
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Backprop a head given d(loss)/d(head output) of shape (B,).

    Returns ([dW1, dW2], [db1, db2], d_trunk_output).
    """
    do = d_out[:, None]
    d_w2 = do.T @ cache.hidden_post
    d_b2 = do.sum(axis=0)
    d_hidden = (do @ w[1]) * _activate_grad(cache.hidden_pre, cache.hidden_post, kind)
    d_w1 = d_hidden.T @ cache.h_in
    d_b1 = d_hidden.sum(axis=0)
    d_h_in = d_hidden @ w[0]
    d_h = d_h_in if cache.mask is None else d_h_in * cache.mask
    return [d_w1, d_w2], [d_b1, d_b2], d_h


def backward_batch(
    cache: ForwardCache,
    params: ModelParams,
    d_y_hat: np.ndarray,
    d_s: np.ndarray,
) -> Gradients:
    """Accumulate parameter gradients for a cached batch forward pass.

    d_y_hat and d_s are (batch,) upstream derivatives of a scalar loss with
    respect to the two outputs. Where the log-variance clamp was active the
    incoming d_s is zeroed, matching the piecewise-constant clamp.
    """
    arch = params.arch
    if cache.x.shape[1] != arch.input_dim or cache.score.h_in.shape[1] != arch.trunk_output_dim:
        raise ShapeError("forward cache does not match the supplied parameters")
    d_y_hat = np.asarray(d_y_hat, dtype=float)
    d_s = np.asarray(d_s, dtype=float)
    if d_y_hat.shape != (cache.batch_size,) or d_s.shape != (cache.batch_size,):
        raise ShapeError(
            f"upstream gradients must have shape ({cache.batch_size},), "
            f"got {d_y_hat.shape} and {d_s.shape}"
        )

    d_s_eff = d_s * (np.abs(cache.s_raw) < S_CLAMP)

    score_w, score_b, d_h_score = _head_backward(
        cache.score, params.score_w, d_y_hat, arch.activation
    )
    logvar_w, logvar_b, d_h_logvar = _head_backward(
        cache.logvar, params.logvar_w, d_s_eff, arch.activation
    )
    d_a = d_h_score + d_h_logvar

    n_trunk = len(params.trunk_w)
    trunk_w = [None] * n_trunk
    trunk_b = [None] * n_trunk
    for l in range(n_trunk - 1, -1, -1):
        d_z = d_a * _activate_grad(cache.trunk_pre[l], cache.trunk_post[l], arch.activation)
        a_prev = cache.trunk_post[l - 1] if l > 0 else cache.x
        trunk_w[l] = d_z.T @ a_prev
        trunk_b[l] = d_z.sum(axis=0)
        d_a = d_z @ params.trunk_w[l]

    return Gradients(trunk_w, trunk_b, score_w, score_b, logvar_w, logvar_b)


def backward(
    cache: ForwardCache,
    params: ModelParams,
    d_y_hat: float,
    d_s: float,
) -> Gradients:
    """Single-sample gradient: cache must come from a one-row forward pass."""
    if cache.batch_size != 1:
        raise ShapeError(
            f"backward() expects a single-sample cache, got batch size {cache.batch_size}"
        )
    return backward_batch(cache, params, np.array([d_y_hat]), np.array([d_s]))


def param_arrays(params: ModelParams) -> list[np.ndarray]:
    """All learnable arrays in a fixed, documented order."""
    return (
        list(params.trunk_w)
        + list(params.trunk_b)
        + list(params.score_w)
        + list(params.score_b)
        + list(params.logvar_w)
        + list(params.logvar_b)
    )


def grad_arrays(grads: Gradients) -> list[np.ndarray]:
    """Gradient arrays in the same order as param_arrays()."""
    return (
        list(grads.trunk_w)
        + list(grads.trunk_b)
        + list(grads.score_w)
        + list(grads.score_b)
        + list(grads.logvar_w)
        + list(grads.logvar_b)
    )
