"""Feed-forward binary classifier over (state, action) pairs, trained with numpy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDivergedError


@dataclass(frozen=True)
class ClassifierHyper:
    hidden: tuple = (64, 64)
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 256
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Classifier:
    """ReLU hidden layers, one logistic output: F(x) = P(x drawn from the seed behavior).

    Inputs are standardized with a fixed per-dimension mean/scale before the
    first layer; the architecture is fixed at construction.
    """

    def __init__(self, layer_sizes, rng=None, input_mean=None, input_scale=None):
        layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(layer_sizes) < 2 or layer_sizes[-1] != 1:
            raise ValueError("layer_sizes must run from the input width to a single output")
        self._layer_sizes = layer_sizes
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        d = layer_sizes[0]
        self.input_mean = np.zeros(d) if input_mean is None else np.asarray(input_mean, float)
        self.input_scale = np.ones(d) if input_scale is None else np.asarray(input_scale, float)

    @property
    def layer_sizes(self):
        return self._layer_sizes

    def copy(self):
        other = Classifier.__new__(Classifier)
        other._layer_sizes = self._layer_sizes
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.input_mean = self.input_mean.copy()
        other.input_scale = self.input_scale.copy()
        return other

    @property
    def params(self):
        return self.weights + self.biases

    def _forward(self, x):
        h = (np.asarray(x, dtype=float) - self.input_mean) / self.input_scale
        cache = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.maximum(z, 0.0)
            cache.append(h)
        return cache

    def logits(self, x):
        return self._forward(x)[-1][:, 0]

    def predict_proba(self, x):
        return _sigmoid(self.logits(x))

    def loss(self, x, y, w=None):
        y = np.asarray(y, dtype=float)
        w = np.full(len(y), 1.0 / len(y)) if w is None else np.asarray(w, dtype=float)
        z = self.logits(x)
        return float(np.sum(w * (_softplus(z) - y * z)))

    def loss_and_grad(self, x, y, w=None):
        """Weighted cross-entropy sum(w_i * l_i) and its gradient wrt every parameter.

        l_i = -log F(x_i) for y_i = 1 and -log(1 - F(x_i)) for y_i = 0.
        Gradients are returned in ``params`` order (weights then biases).
        """
        y = np.asarray(y, dtype=float)
        w = np.full(len(y), 1.0 / len(y)) if w is None else np.asarray(w, dtype=float)
        cache = self._forward(x)
        z = cache[-1][:, 0]
        loss = float(np.sum(w * (_softplus(z) - y * z)))
        delta = ((_sigmoid(z) - y) * w)[:, None]
        gw, gb = [None] * len(self.weights), [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i] = cache[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (cache[i] > 0)
        return loss, gw + gb


def pu_loss_weights(y):
    """Per-sample weights making sum(w * l) = E_pos[l] + E_neg[l]."""
    y = np.asarray(y)
    n_pos, n_neg = int((y == 1).sum()), int((y == 0).sum())
    w = np.zeros(len(y))
    if n_pos:
        w[y == 1] = 1.0 / n_pos
    if n_neg:
        w[y == 0] = 1.0 / n_neg
    return w


@dataclass
class TrainingLog:
    initial_loss: float
    final_loss: float
    epoch_losses: list = field(default_factory=list)


def fit_classifier(x, y, hyper, input_mean=None, input_scale=None):
    """Train a fresh classifier with Adam on the positive/negative cross-entropy.

    Returns ``(classifier, TrainingLog)``; deterministic given ``hyper.rng_seed``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(hyper.rng_seed)
    if input_mean is None:
        input_mean = x.mean(axis=0)
    if input_scale is None:
        input_scale = x.std(axis=0)
    input_scale = np.where(np.asarray(input_scale) > 0, input_scale, 1.0)
    model = Classifier((x.shape[1],) + hyper.hidden + (1,), rng, input_mean, input_scale)
    weights = pu_loss_weights(y)
    initial = model.loss(x, y, weights)
    log = TrainingLog(initial, initial)
    if hyper.epochs == 0:
        return model, log

    n = len(x)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = [np.zeros_like(p) for p in model.params]
    v = [np.zeros_like(p) for p in model.params]
    step = 0
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start:start + hyper.batch_size]
            # rescale so the mini-batch loss is an unbiased estimate of the full loss
            bw = weights[batch] * (n / len(batch))
            loss, grads = model.loss_and_grad(x[batch], y[batch], bw)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} (hidden={hyper.hidden}, "
                    f"lr={hyper.learning_rate}, batch={hyper.batch_size})")
            step += 1
            lr_t = hyper.learning_rate * np.sqrt(1 - beta2 ** step) / (1 - beta1 ** step)
            for p, g, mi, vi in zip(model.params, grads, m, v):
                mi *= beta1
                mi += (1 - beta1) * g
                vi *= beta2
                vi += (1 - beta2) * g * g
                p -= lr_t * mi / (np.sqrt(vi) + eps)
        epoch_loss = model.loss(x, y, weights)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"non-finite loss after epoch {epoch} (hidden={hyper.hidden}, "
                f"lr={hyper.learning_rate}, batch={hyper.batch_size})")
        log.epoch_losses.append(epoch_loss)
    log.final_loss = log.epoch_losses[-1]
    return model, log
