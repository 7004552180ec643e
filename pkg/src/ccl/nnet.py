"""A small numpy MLP: ReLU hidden layers, softmax output, cross-entropy, Adam.

Parameters are kept as a flat list ``[W1, b1, W2, b2, ...]`` with ``W`` of
shape ``(fan_in, fan_out)``; inputs are row-major ``(n_samples, n_features)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import InvalidParamsError

PROB_CLAMP = 1e-12

__all__ = [
    "LayerSpec",
    "ModelState",
    "layer_chain",
    "init_model",
    "forward",
    "per_sample_losses",
    "mean_loss",
    "gradients",
    "adam_step",
    "accuracy",
    "save_checkpoint",
    "load_checkpoint",
]


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise InvalidParamsError("layer dimensions must be >= 1")
        if self.activation not in ("relu", "softmax"):
            raise InvalidParamsError(f"unknown activation {self.activation!r}")


def layer_chain(dims):
    """Layer specs for a ``dims`` list such as ``[2, 64, 64, 2]``."""
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise InvalidParamsError("need at least input and output dimensions")
    last = len(dims) - 2
    return [
        LayerSpec(dims[i], dims[i + 1], "softmax" if i == last else "relu")
        for i in range(len(dims) - 1)
    ]


@dataclass
class ModelState:
    params: list
    m: list = field(default=None)
    v: list = field(default=None)
    step: int = 0
    init_seed: int | None = None

    def __post_init__(self):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in self.params]
        if self.v is None:
            self.v = [np.zeros_like(p) for p in self.params]

    @property
    def weights(self):
        return self.params[0::2]

    @property
    def biases(self):
        return self.params[1::2]

    @property
    def dims(self):
        W = self.weights
        return [W[0].shape[0]] + [w.shape[1] for w in W]

    def copy(self):
        return ModelState(
            params=[p.copy() for p in self.params],
            m=[a.copy() for a in self.m],
            v=[a.copy() for a in self.v],
            step=self.step,
            init_seed=self.init_seed,
        )

    def fresh_optimizer(self):
        """Same parameters, zeroed Adam state."""
        return ModelState(params=[p.copy() for p in self.params], init_seed=self.init_seed)

    def equals(self, other):
        """Bit-exact comparison of parameters and optimizer state."""
        if self.step != other.step or len(self.params) != len(other.params):
            return False
        pairs = zip(self.params + self.m + self.v, other.params + other.m + other.v)
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)


def init_model(specs, seed):
    """He-initialised weights (std ``sqrt(2 / fan_in)``), zero biases."""
    specs = list(specs)
    if not specs:
        raise InvalidParamsError("empty layer list")
    for a, b in zip(specs, specs[1:]):
        if a.output_dim != b.input_dim:
            raise ShapeMismatchError(f"layer {a} does not feed {b}")
    if any(s.activation == "softmax" for s in specs[:-1]) or specs[-1].activation != "softmax":
        raise InvalidParamsError("softmax must be the final layer only")
    rng = np.random.default_rng(seed)
    params = []
    for s in specs:
        std = np.sqrt(2.0 / s.input_dim)
        params.append(rng.standard_normal((s.input_dim, s.output_dim)) * std)
        params.append(np.zeros(s.output_dim))
    return ModelState(params=params, init_seed=seed)


def _check_input(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.params[0].shape[0]:
        raise ShapeMismatchError(
            f"expected input with {model.params[0].shape[0]} features, got shape {X.shape}"
        )
    return X


def _check_labels(model, X, y):
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ShapeMismatchError(f"{X.shape[0]} rows but labels of shape {y.shape}")
    C = model.params[-1].shape[0]
    if y.size and (y.min() < 0 or y.max() >= C):
        raise InvalidParamsError(f"labels must lie in [0, {C})")
    return y.astype(np.intp)


def _forward_cache(model, X):
    acts = [X]
    h = X
    n_layers = len(model.params) // 2
    for i in range(n_layers):
        W, b = model.params[2 * i], model.params[2 * i + 1]
        z = h @ W + b
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            h = z
    return acts, h


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def logits(model, X):
    X = _check_input(model, X)
    return _forward_cache(model, X)[1]


def forward(model, X):
    """Class probabilities, one row per sample."""
    return np.exp(_log_softmax(logits(model, X)))


def per_sample_losses(model, X, y):
    """Cross-entropy ``-log p[y_i]`` for each row, probabilities clamped to [1e-12, 1-1e-12]."""
    X = _check_input(model, X)
    y = _check_labels(model, X, y)
    logp = _log_softmax(_forward_cache(model, X)[1])[np.arange(X.shape[0]), y]
    logp = np.clip(logp, np.log(PROB_CLAMP), np.log1p(-PROB_CLAMP))
    return -logp


def mean_loss(model, X, y):
    return float(np.mean(per_sample_losses(model, X, y)))


def gradients(model, X, y):
    """Backpropagated gradients of the mean cross-entropy, shaped like ``model.params``."""
    X = _check_input(model, X)
    y = _check_labels(model, X, y)
    acts, z = _forward_cache(model, X)
    n = X.shape[0]
    delta = np.exp(_log_softmax(z))
    delta[np.arange(n), y] -= 1.0
    delta /= n

    n_layers = len(model.params) // 2
    grads = [None] * len(model.params)
    for i in range(n_layers - 1, -1, -1):
        W = model.params[2 * i]
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ W.T) * (acts[i] > 0)
    return grads


def adam_step(model, grads, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns a new state."""
    if len(grads) != len(model.params) or any(
        g.shape != p.shape for g, p in zip(grads, model.params)
    ):
        raise ShapeMismatchError("gradients do not match parameter shapes")
    t = model.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    params, ms, vs = [], [], []
    for p, g, m, v in zip(model.params, grads, model.m, model.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        params.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        ms.append(m)
        vs.append(v)
    return replace(model, params=params, m=ms, v=vs, step=t)


def predict(model, X):
    return np.argmax(logits(model, X), axis=1)


def accuracy(model, X, y):
    """Top-1 accuracy; ties go to the lowest class index."""
    X = _check_input(model, X)
    y = _check_labels(model, X, y)
    if y.size == 0:
        return 0.0
    return float(np.mean(np.argmax(_forward_cache(model, X)[1], axis=1) == y))


# Checkpoint layout (text):
#   line 1: "ccl-mlp v1"
#   line 2: layer dims, comma separated
#   line 3: adam step, init seed ("none" if unknown)
#   then one line per array (params, m, v in that order), row-major, %.17g
_CKPT_MAGIC = "ccl-mlp v1"


def save_checkpoint(model, path):
    lines = [_CKPT_MAGIC, ",".join(str(d) for d in model.dims)]
    lines.append(f"{model.step},{'none' if model.init_seed is None else model.init_seed}")
    for arr in model.params + model.m + model.v:
        lines.append(",".join("%.17g" % x for x in arr.ravel()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _CKPT_MAGIC:
        raise ValueError(f"{path}: not a ccl-mlp checkpoint")
    dims = [int(d) for d in lines[1].split(",")]
    step_s, seed_s = lines[2].split(",")
    shapes = []
    for a, b in zip(dims, dims[1:]):
        shapes += [(a, b), (b,)]
    body = lines[3:]
    if len(body) != 3 * len(shapes):
        raise ValueError(f"{path}: expected {3 * len(shapes)} arrays, found {len(body)}")
    arrays = []
    for shape, line in zip(shapes * 3, body):
        flat = np.array([float(x) for x in line.split(",")])
        if flat.size != int(np.prod(shape)):
            raise ValueError(f"{path}: array size mismatch for shape {shape}")
        arrays.append(flat.reshape(shape))
    k = len(shapes)
    return ModelState(
        params=arrays[:k],
        m=arrays[k : 2 * k],
        v=arrays[2 * k :],
        step=int(step_s),
        init_seed=None if seed_s == "none" else int(seed_s),
    )
