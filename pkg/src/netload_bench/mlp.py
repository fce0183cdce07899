"""One-hidden-layer sigmoid network for load regression.

The hidden layer uses the logistic sigmoid and the output unit is linear.
Inputs are standardised (or min-max scaled, see ``TrainConfig.input_scaling``)
and the target is min-max scaled to [0, 1], all with statistics from the
training partition; the network itself only ever sees scaled values.

Training minimises the per-sample squared error ``0.5 * (target - output)**2``
by mini-batch gradient descent with a constant learning rate, averaging the
per-sample gradients over each batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import SupervisedDataset
from .errors import DimensionMismatch, DivergenceDetected, EmptyTrainSet, InvalidHyperparameter, SchemaMismatch

FORMAT_VERSION = 1


INPUT_SCALINGS = ("standard", "minmax")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    hidden_units: int = 200
    input_scaling: str = "standard"

    def __post_init__(self):
        if self.input_scaling not in INPUT_SCALINGS:
            raise InvalidHyperparameter(f"input_scaling must be one of {INPUT_SCALINGS}, got {self.input_scaling!r}")
        if not self.learning_rate > 0:
            raise InvalidHyperparameter(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidHyperparameter(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise InvalidHyperparameter(f"batch_size must be >= 1, got {self.batch_size}")
        if self.hidden_units < 1:
            raise InvalidHyperparameter(f"hidden_units must be >= 1, got {self.hidden_units}")


@dataclass(frozen=True)
class MlpModel:
    w_ih: np.ndarray  # (hidden_units, n_features)
    b_h: np.ndarray  # (hidden_units,)
    w_ho: np.ndarray  # (hidden_units,)
    b_o: float
    input_offset: np.ndarray  # scaled = (x - offset) / scale
    input_scale: np.ndarray
    target_min: float = 0.0
    target_max: float = 1.0

    def __post_init__(self):
        for name in ("w_ih", "b_h", "w_ho", "input_offset", "input_scale"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b_o", float(self.b_o))
        if self.w_ih.ndim != 2:
            raise DimensionMismatch("w_ih must be 2-D")
        h, f = self.w_ih.shape
        if self.b_h.shape != (h,) or self.w_ho.shape != (h,):
            raise DimensionMismatch("bias/output weights do not match hidden_units")
        if self.input_offset.shape != (f,) or self.input_scale.shape != (f,):
            raise DimensionMismatch("input scaler does not match n_features")
        if np.any(self.input_scale <= 0):
            raise ValueError("input scales must be > 0")
        if self.target_max < self.target_min:
            raise ValueError("target scaler max must be >= min")

    @property
    def hidden_units(self) -> int:
        return self.w_ih.shape[0]

    @property
    def n_features(self) -> int:
        return self.w_ih.shape[1]

    def scale_inputs(self, X: np.ndarray) -> np.ndarray:
        return (X - self.input_offset) / self.input_scale

    def unscale_target(self, z):
        return z * _span(self.target_max - self.target_min) + self.target_min

    def scale_target(self, y):
        return (y - self.target_min) / _span(self.target_max - self.target_min)


def _span(width: float) -> float:
    # a constant target maps to 0 instead of dividing by zero
    return width if width > 0 else 1.0


def sigmoid(x):
    """Logistic function ``1 / (1 + exp(-x))``.

    Evaluated as ``0.5 * (1 + tanh(x / 2))``, which is algebraically identical
    and never overflows.
    """
    out = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))
    return out if out.ndim else float(out)


def loss(target: float, output: float) -> float:
    return 0.5 * (target - output) ** 2


def _raw_forward(w_ih, b_h, w_ho, b_o, Xs):
    hidden = sigmoid(Xs @ w_ih.T + b_h)
    return hidden, hidden @ w_ho + b_o


def forward_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    _, z = _raw_forward(model.w_ih, model.b_h, model.w_ho, model.b_o, model.scale_inputs(X))
    return model.unscale_target(z)


def forward(model: MlpModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("forward() takes a single feature vector")
    return float(forward_batch(model, x[None, :])[0])


def loss_and_gradients(w_ih, b_h, w_ho, b_o, Xs, ys):
    """Summed squared-error loss over the rows of ``Xs`` and its gradients.

    Works on already scaled data. Returns ``(loss, (g_w_ih, g_b_h, g_w_ho, g_b_o))``.
    """
    hidden, out = _raw_forward(w_ih, b_h, w_ho, b_o, Xs)
    err = out - ys
    g_w_ho = hidden.T @ err
    g_b_o = float(err.sum())
    delta = np.outer(err, w_ho) * hidden * (1.0 - hidden)
    g_w_ih = delta.T @ Xs
    g_b_h = delta.sum(axis=0)
    return 0.5 * float(err @ err), (g_w_ih, g_b_h, g_w_ho, g_b_o)


def fit_scalers(X: np.ndarray, y: np.ndarray, input_scaling: str = "standard"):
    """Input (offset, scale) per feature and target (min, max).

    Constant features get scale 1 so they map to 0.
    """
    if input_scaling == "standard":
        offset, scale = X.mean(axis=0), X.std(axis=0)
    else:
        offset, scale = X.min(axis=0), X.max(axis=0) - X.min(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return offset, scale, float(y.min()), float(y.max())


def train(dataset: SupervisedDataset, config: TrainConfig = TrainConfig(), history: list | None = None) -> MlpModel:
    """Fit a network on the training partition of ``dataset``.

    If ``history`` is given, the mean per-sample training loss over the whole
    partition (scaled units) is appended before the first epoch and after
    every epoch.
    """
    X, y = dataset.X("train"), dataset.y("train")
    if len(y) == 0:
        raise EmptyTrainSet("training partition is empty")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise SchemaMismatch("training data contains NaN or infinite values")

    rng = np.random.default_rng(config.seed)
    h, f = config.hidden_units, X.shape[1]
    w_ih = rng.uniform(-0.5, 0.5, size=(h, f))
    b_h = rng.uniform(-0.5, 0.5, size=h)
    w_ho = rng.uniform(-0.5, 0.5, size=h)
    b_o = float(rng.uniform(-0.5, 0.5))

    offset, scale, t_min, t_max = fit_scalers(X, y, config.input_scaling)
    shell = MlpModel(np.zeros((1, f)), np.zeros(1), np.zeros(1), 0.0, offset, scale, t_min, t_max)
    Xs, ys = shell.scale_inputs(X), shell.scale_target(y)
    n, lr, bs = len(ys), config.learning_rate, config.batch_size

    def mean_loss():
        return loss_and_gradients(w_ih, b_h, w_ho, b_o, Xs, ys)[0] / n

    if history is not None:
        history.append(mean_loss())
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                batch_loss, (g_w_ih, g_b_h, g_w_ho, g_b_o) = loss_and_gradients(w_ih, b_h, w_ho, b_o, Xs[idx], ys[idx])
                epoch_loss += batch_loss
                step = lr / len(idx)
                w_ih -= step * g_w_ih
                b_h -= step * g_b_h
                w_ho -= step * g_w_ho
                b_o -= step * g_b_o
            final = mean_loss() if history is not None or epoch == config.epochs - 1 else epoch_loss
        if not (np.isfinite(epoch_loss) and np.isfinite(final)):
            raise DivergenceDetected(
                f"training loss became non-finite at epoch {epoch + 1}; learning rate {lr} is too large"
            )
        if history is not None:
            history.append(final)

    return MlpModel(w_ih, b_h, w_ho, b_o, offset, scale, t_min, t_max)


def predict_series(model: MlpModel, dataset: SupervisedDataset, partition: str = "test") -> np.ndarray:
    X = dataset.X(partition)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model has {model.n_features} features, dataset has {X.shape[1]}")
    if len(X) == 0:
        return np.empty(0)
    return forward_batch(model, X)


# -- serialisation -----------------------------------------------------------------
#
# Plain text, one record per line:
#   netload-mlp <version>
#   hidden_units <H>
#   n_features <F>
#   target_scaler <min> <max>
#   input_offset <F values>
#   input_scale <F values>
#   w_ih <H*F values, row-major>
#   b_h <H values>
#   w_ho <H values>
#   b_o <value>
# Values are written with repr() and therefore reload bit-identically.

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_model(model: MlpModel, path) -> None:
    lines = [
        f"netload-mlp {FORMAT_VERSION}",
        f"hidden_units {model.hidden_units}",
        f"n_features {model.n_features}",
        f"target_scaler {_fmt([model.target_min, model.target_max])}",
        f"input_offset {_fmt(model.input_offset)}",
        f"input_scale {_fmt(model.input_scale)}",
        f"w_ih {_fmt(model.w_ih)}",
        f"b_h {_fmt(model.b_h)}",
        f"w_ho {_fmt(model.w_ho)}",
        f"b_o {_fmt([model.b_o])}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> MlpModel:
    records = {}
    lines = Path(path).read_text().splitlines()
    magic = lines[0].split()
    if magic[:1] != ["netload-mlp"] or int(magic[1]) != FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: not a version {FORMAT_VERSION} netload-mlp file")
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        records[key] = np.array([float(v) for v in rest.split()]) if rest else np.empty(0)
    h, f = int(records["hidden_units"][0]), int(records["n_features"][0])
    t_min, t_max = records["target_scaler"]
    return MlpModel(
        records["w_ih"].reshape(h, f),
        records["b_h"],
        records["w_ho"],
        records["b_o"][0],
        records["input_offset"],
        records["input_scale"],
        t_min,
        t_max,
    )
