"""A small fully connected regression network in float64 numpy.

Training is single threaded with respect to randomness: parameter
initialisation, minibatch shuffling and the augmentation hook each draw from
their own stream spawned from ``MLPConfig.seed``. A hook that draws random
numbers therefore never shifts the shuffling order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..anchors import CenteredDataset, center_dataset
from ..exceptions import ConfigError, TrainingDivergedError

ACTIVATIONS = ("relu", "sigmoid")
OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class MLPConfig:
    layer_widths: Sequence[int] = (50,)
    activation: str = "relu"
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    optimizer: str = "adam"
    seed: int = 0
    augmentation_hook: Optional[Callable] = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if any(w < 1 for w in self.layer_widths):
            raise ConfigError(f"layer widths must be >= 1, got {self.layer_widths}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass
class TrainReport:
    train_loss_curve: list = field(default_factory=list)
    val_mse_curve: list = field(default_factory=list)
    final_val_mse: float = float("nan")
    best_epoch: int = -1
    epochs_run: int = 0
    wall_time: float = 0.0


class MLP:
    """Weights and biases of a fully connected network with a scalar output."""

    def __init__(self, weights, biases, activation="relu"):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activation = activation

    @classmethod
    def init(cls, n_features, layer_widths, activation, rng):
        """Glorot-uniform weights, zero biases."""
        sizes = [n_features, *layer_widths, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, activation)

    @property
    def params(self):
        return self.weights + self.biases

    def copy(self):
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                   self.activation)

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return expit(z)

    def _act_grad(self, z, a):
        if self.activation == "relu":
            return (z > 0).astype(np.float64)
        return a * (1.0 - a)

    def forward(self, x, cache=False):
        a = x
        zs, acts = [], [x]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            a = z if i == last else self._act(z)
            if cache:
                zs.append(z)
                acts.append(a)
        out = a[:, 0]
        return (out, zs, acts) if cache else out

    def loss_and_grads(self, x, y):
        """Mean squared error on the batch and its gradient for every parameter.

        Gradients are returned in the order of :attr:`params`.
        """
        out, zs, acts = self.forward(x, cache=True)
        err = out - y
        loss = float(np.mean(err**2))
        delta = (2.0 / y.shape[0]) * err[:, None]
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * self._act_grad(zs[i - 1], acts[i])
        return loss, gw + gb


class _Adam:
    def __init__(self, params, lr, b1, b2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def mlp_train(cfg: MLPConfig, train: CenteredDataset, val: CenteredDataset | None = None):
    """Minibatch training on centred data.

    Each epoch reshuffles the training set; every minibatch goes through
    ``cfg.augmentation_hook`` (if any) before the forward pass. When ``val``
    is given the parameters of the epoch with the lowest validation MSE are
    returned, otherwise those after the last epoch.

    Returns
    -------
    model : MLP
    report : TrainReport

    Raises
    ------
    TrainingDivergedError
        If a batch loss becomes non-finite. The partial report is attached.
    """
    start = time.perf_counter()
    x, y = train.x, train.y
    n, d = x.shape
    init_ss, shuffle_ss, aug_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    model = MLP.init(d, cfg.layer_widths, cfg.activation, np.random.default_rng(init_ss))
    shuffle_rng = np.random.default_rng(shuffle_ss)
    aug_rng = np.random.default_rng(aug_ss)
    params = model.params
    if cfg.optimizer == "adam":
        opt = _Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    else:
        opt = _SGD(cfg.learning_rate)
    hook = cfg.augmentation_hook
    report = TrainReport()
    best = None
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = perm[s : s + cfg.batch_size]
            bx, by = x[idx], y[idx]
            if hook is not None:
                bx, by = hook(bx, by, idx, aug_rng)
            # overflow is caught by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = model.loss_and_grads(bx, by)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                report.epochs_run = epoch
                report.wall_time = time.perf_counter() - start
                raise TrainingDivergedError(
                    f"non-finite loss in epoch {epoch}", report
                )
            opt.step(params, grads)
            total += loss * len(idx)
        report.train_loss_curve.append(total / n)
        report.epochs_run = epoch + 1
        if val is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                vm = float(np.mean((model.forward(val.x) - val.y) ** 2))
            if not np.isfinite(vm):
                report.wall_time = time.perf_counter() - start
                raise TrainingDivergedError(f"non-finite validation MSE in epoch {epoch}", report)
            report.val_mse_curve.append(vm)
            if best is None or vm < report.final_val_mse:
                report.final_val_mse = vm
                report.best_epoch = epoch
                best = model.copy()
    if best is None:
        best = model
        report.best_epoch = cfg.epochs - 1
    report.wall_time = time.perf_counter() - start
    return best, report


def mlp_predict(model: MLP, x) -> np.ndarray:
    return model.forward(np.asarray(x, dtype=np.float64))


class MLPRegressor(RegressorMixin, BaseEstimator):
    """Fully connected regressor with optional per-minibatch augmentation.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(50,)
        Empty tuple gives a linear model.
    activation : {"relu", "sigmoid"}, default="relu"
    learning_rate : float, default=1e-3
    epochs : int, default=100
    batch_size : int, default=32
    optimizer : {"adam", "sgd"}, default="adam"
    augmenter : object with ``make_hook(X, y)``, optional
        E.g. :class:`~anchoraug.augment.AnchorAugmenter`. The hook is built
        on the centred training data.
    random_state : int, default=0

    Attributes
    ----------
    model_ : MLP
    report_ : TrainReport
    dataset_ : CenteredDataset
        Training data after centring; its means are used by ``predict``.
    """

    def __init__(self, hidden_layer_sizes=(50,), activation="relu", learning_rate=1e-3,
                 epochs=100, batch_size=32, optimizer="adam", augmenter=None,
                 random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.augmenter = augmenter
        self.random_state = random_state

    def _config(self, hook):
        return MLPConfig(self.hidden_layer_sizes, self.activation, self.learning_rate,
                         self.epochs, self.batch_size, self.optimizer,
                         int(self.random_state or 0), hook)

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        train = center_dataset(X, y)
        val = None
        if X_val is not None and len(X_val):
            xv, yv = train.center(X_val, y_val)
            val = replace(train, x=xv, y=yv)
        hook = None
        if self.augmenter is not None:
            hook = self.augmenter.make_hook(train.x, train.y)
        self.model_, self.report_ = mlp_train(self._config(hook), train, val)
        self.dataset_ = train
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return mlp_predict(self.model_, X - self.dataset_.x_mean) + self.dataset_.y_mean
