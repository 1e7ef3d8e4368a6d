"""Two-hidden-layer MLP regressor for valence/arousal, built on bare numpy.

The network is deliberately small and explicit: ReLU activations, a dual
linear output head, inverted dropout, Adam, and early stopping on a
validation split. All gradients are hand-derived and checked against finite
differences in the test suite, so keep forward() and gradient() in sync.

Loss convention: mse is the mean over every scalar residual. For (n, 2)
targets that is sum(r^2) / (2n), and the output-layer error signal is
residual / n.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

CHECKPOINT_MAGIC = b"MLP1"
CHECKPOINT_VERSION = 1

N_OUTPUTS = 2  # valence, arousal


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during optimization."""


class CheckpointError(ValueError):
    """Structurally invalid MLP1 checkpoint."""


@dataclass
class MlpParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dims(self) -> tuple:
        return (self.w1.shape[1], self.w2.shape[1])

    def fields(self) -> tuple:
        return ("w1", "b1", "w2", "b2", "w_out", "b_out")

    def copy(self) -> "MlpParams":
        return MlpParams(**{k: getattr(self, k).copy() for k in self.fields()})


@dataclass(frozen=True)
class TrainConfig:
    hidden1: int = 1024
    hidden2: int = 512
    dropout_in: float = 0.1
    dropout_hidden: float = 0.3
    learning_rate: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 300
    patience: int = 20
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.dropout_in < 1.0 and 0.0 <= self.dropout_hidden < 1.0):
            raise ValueError("dropout rates must be in [0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be positive")


@dataclass(frozen=True)
class TrainReport:
    train_loss: float
    val_loss: float
    best_epoch: int
    epochs_run: int
    stopping_reason: str  # "early_stop" or "max_epochs"


def init_params(input_dim: int, hidden1: int, hidden2: int, seed: int = 0) -> MlpParams:
    """Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases."""
    rng = np.random.Generator(np.random.PCG64(seed))

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    return MlpParams(
        w1=glorot(input_dim, hidden1),
        b1=np.zeros(hidden1),
        w2=glorot(hidden1, hidden2),
        b2=np.zeros(hidden2),
        w_out=glorot(hidden2, N_OUTPUTS),
        b_out=np.zeros(N_OUTPUTS),
    )


@dataclass(frozen=True)
class DropoutMasks:
    """Inverted-dropout masks: entries are 0 or 1/(1-p), applied by multiply."""

    input_mask: np.ndarray
    hidden1_mask: np.ndarray
    hidden2_mask: np.ndarray


def make_masks(rng: np.random.Generator, n: int, params: MlpParams,
               dropout_in: float, dropout_hidden: float) -> DropoutMasks:
    h1, h2 = params.hidden_dims

    def mask(shape, p):
        if p <= 0.0:
            return np.ones(shape)
        return (rng.random(shape) >= p) / (1.0 - p)

    return DropoutMasks(
        input_mask=mask((n, params.input_dim), dropout_in),
        hidden1_mask=mask((n, h1), dropout_hidden),
        hidden2_mask=mask((n, h2), dropout_hidden),
    )


def forward(params: MlpParams, x: np.ndarray, masks: Optional[DropoutMasks] = None):
    """Run the network; returns (prediction, cache) where cache feeds gradient()."""
    x = np.asarray(x, dtype=np.float64)
    if masks is not None:
        x_d = x * masks.input_mask
    else:
        x_d = x
    z1 = x_d @ params.w1 + params.b1
    a1 = np.maximum(z1, 0.0)
    a1_d = a1 * masks.hidden1_mask if masks is not None else a1
    z2 = a1_d @ params.w2 + params.b2
    a2 = np.maximum(z2, 0.0)
    a2_d = a2 * masks.hidden2_mask if masks is not None else a2
    pred = a2_d @ params.w_out + params.b_out
    cache = (x_d, z1, a1_d, z2, a2_d, masks)
    return pred, cache


def predict(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Inference pass: dropout off."""
    pred, _ = forward(params, x)
    return pred


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over every scalar residual."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("prediction and target shapes differ")
    return float(np.mean((pred - target) ** 2))


def gradient(params: MlpParams, x: np.ndarray, y: np.ndarray,
             masks: Optional[DropoutMasks] = None):
    """Backprop for mse_loss(forward(x), y); returns (loss, grads dict)."""
    pred, (x_d, z1, a1_d, z2, a2_d, _) = forward(params, x, masks)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    resid = pred - y
    loss = float(np.mean(resid ** 2))
    dout = resid / n  # d(mean over 2n scalars)/dpred = 2r/(2n)
    g_w_out = a2_d.T @ dout
    g_b_out = dout.sum(axis=0)
    da2_d = dout @ params.w_out.T
    da2 = da2_d * masks.hidden2_mask if masks is not None else da2_d
    dz2 = da2 * (z2 > 0.0)
    g_w2 = a1_d.T @ dz2
    g_b2 = dz2.sum(axis=0)
    da1_d = dz2 @ params.w2.T
    da1 = da1_d * masks.hidden1_mask if masks is not None else da1_d
    dz1 = da1 * (z1 > 0.0)
    g_w1 = x_d.T @ dz1
    g_b1 = dz1.sum(axis=0)
    grads = {"w1": g_w1, "b1": g_b1, "w2": g_w2, "b2": g_b2,
             "w_out": g_w_out, "b_out": g_b_out}
    return loss, grads


def flatten_params(params: MlpParams) -> np.ndarray:
    return np.concatenate([getattr(params, k).ravel() for k in params.fields()])


def unflatten_params(vec: np.ndarray, like: MlpParams) -> MlpParams:
    out = {}
    pos = 0
    for k in like.fields():
        ref = getattr(like, k)
        out[k] = vec[pos : pos + ref.size].reshape(ref.shape).copy()
        pos += ref.size
    if pos != vec.size:
        raise ValueError("flat vector length does not match parameter shapes")
    return MlpParams(**out)


class AdamState:
    """Per-parameter first/second moment accumulators with bias correction."""

    def __init__(self, params: MlpParams, config: TrainConfig):
        self.m = {k: np.zeros_like(getattr(params, k)) for k in params.fields()}
        self.v = {k: np.zeros_like(getattr(params, k)) for k in params.fields()}
        self.t = 0
        self.config = config

    def step(self, params: MlpParams, grads: dict) -> None:
        c = self.config
        self.t += 1
        for k in params.fields():
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            m_hat = self.m[k] / (1.0 - c.beta1 ** self.t)
            v_hat = self.v[k] / (1.0 - c.beta2 ** self.t)
            value = getattr(params, k)
            value -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def _check_xy(x: np.ndarray, y: np.ndarray, what: str):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or y.shape[1] != N_OUTPUTS:
        raise ValueError(f"{what}: expected x (n, d) and y (n, {N_OUTPUTS})")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{what}: x and y row counts differ")
    if x.shape[0] == 0:
        raise ValueError(f"{what}: empty")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError(f"{what}: non-finite values")
    return x, y


def train(x_train: np.ndarray, y_train: np.ndarray,
          x_val: np.ndarray, y_val: np.ndarray,
          config: Optional[TrainConfig] = None):
    """Minibatch Adam with early stopping on validation mse.

    Keeps the best-validation snapshot and returns it, not the last epoch.
    Stops once the best epoch is `patience` epochs old. Raises
    TrainingDivergedError if any loss turns non-finite.
    """
    config = config or TrainConfig()
    x_train, y_train = _check_xy(x_train, y_train, "train data")
    x_val, y_val = _check_xy(x_val, y_val, "validation data")
    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = init_params(x_train.shape[1], config.hidden1, config.hidden2, seed=config.seed)
    adam = AdamState(params, config)
    use_dropout = config.dropout_in > 0.0 or config.dropout_hidden > 0.0

    n = x_train.shape[0]
    best = params.copy()
    best_val = np.inf
    best_train = np.inf
    best_epoch = 0
    stopping_reason = "max_epochs"
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            xb, yb = x_train[batch], y_train[batch]
            masks = None
            if use_dropout:
                masks = make_masks(rng, len(batch), params,
                                   config.dropout_in, config.dropout_hidden)
            loss, grads = gradient(params, xb, yb, masks)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"batch loss non-finite at epoch {epoch}")
            adam.step(params, grads)

        train_loss = mse_loss(predict(params, x_train), y_train)
        val_loss = mse_loss(predict(params, x_val), y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(f"epoch {epoch} loss non-finite")
        if val_loss < best_val:
            best_val = val_loss
            best_train = train_loss
            best_epoch = epoch
            best = params.copy()
        if epoch - best_epoch >= config.patience:
            stopping_reason = "early_stop"
            break

    report = TrainReport(
        train_loss=best_train,
        val_loss=best_val,
        best_epoch=best_epoch,
        epochs_run=epoch,
        stopping_reason=stopping_reason,
    )
    return best, report


def save_checkpoint(params: MlpParams, path, config: Optional[TrainConfig] = None) -> None:
    """Binary weights in MLP1 layout plus a JSON config sidecar at <path>.json."""
    h1, h2 = params.hidden_dims
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IIII", CHECKPOINT_VERSION, params.input_dim, h1, h2))
        for k in params.fields():
            fh.write(np.ascontiguousarray(getattr(params, k), dtype=np.float32).tobytes())
    if config is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(asdict(config), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_checkpoint(path):
    """Returns (params, config_dict_or_None)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic (not an MLP1 checkpoint)")
    if len(data) < 20:
        raise CheckpointError(f"{path}: truncated header")
    version, input_dim, h1, h2 = struct.unpack("<IIII", data[4:20])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    shapes = [(input_dim, h1), (h1,), (h1, h2), (h2,), (h2, N_OUTPUTS), (N_OUTPUTS,)]
    expected = 20 + 4 * sum(int(np.prod(s)) for s in shapes)
    if len(data) != expected:
        raise CheckpointError(f"{path}: size {len(data)} does not match header (want {expected})")
    pos = 20
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
        arrays.append(arr.reshape(shape).astype(np.float64))
        pos += 4 * count
    params = MlpParams(*arrays)
    config = None
    sidecar = str(path) + ".json"
    try:
        with open(sidecar) as fh:
            config = json.load(fh)
    except FileNotFoundError:
        pass
    return params, config
