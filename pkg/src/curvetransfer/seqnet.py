"""From-scratch LSTM sequence regressor: forward pass, BPTT, optimizers, training loop.

One LSTM layer (forget/input/output gates, persistent cell state) followed by
a fully connected layer that maps the final hidden state to a single stress
output. Everything is double precision numpy; gradients are exact and checked
against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDivergenceError

GATES = ("f", "i", "c", "o")

# Fixed parameter order: drives initialization draws, optimizer state layout,
# serialization, and gradient-check iteration.
PARAM_NAMES = (
    "W_fh", "W_fx", "b_f",
    "W_ih", "W_ix", "b_i",
    "W_ch", "W_cx", "b_c",
    "W_oh", "W_ox", "b_o",
    "W_out", "b_out",
)

OPTIMIZERS = ("sgd", "adam")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ModelParams:
    """All learnable parameters of the LSTM regressor.

    Hidden-to-gate matrices are (hidden_dim, hidden_dim), input-to-gate
    matrices (hidden_dim, input_dim), biases (hidden_dim,). The output layer
    is W_out (1, hidden_dim) and b_out (1,).
    """

    input_dim: int
    hidden_dim: int
    W_fh: np.ndarray
    W_fx: np.ndarray
    b_f: np.ndarray
    W_ih: np.ndarray
    W_ix: np.ndarray
    b_i: np.ndarray
    W_ch: np.ndarray
    W_cx: np.ndarray
    b_c: np.ndarray
    W_oh: np.ndarray
    W_ox: np.ndarray
    b_o: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        h, d = self.hidden_dim, self.input_dim
        expected = self._expected_shapes(d, h)
        for name in PARAM_NAMES:
            arr = getattr(self, name)
            if arr.shape != expected[name]:
                raise ValueError(f"{name}: expected shape {expected[name]}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")

    @staticmethod
    def _expected_shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
        h, d = hidden_dim, input_dim
        shapes: dict[str, tuple[int, ...]] = {}
        for g in GATES:
            shapes[f"W_{g}h"] = (h, h)
            shapes[f"W_{g}x"] = (h, d)
            shapes[f"b_{g}"] = (h,)
        shapes["W_out"] = (1, h)
        shapes["b_out"] = (1,)
        return shapes

    def as_dict(self) -> dict[str, np.ndarray]:
        """Name -> live array view, in the fixed parameter order."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ModelParams":
        arrays = {name: getattr(self, name).copy() for name in PARAM_NAMES}
        return ModelParams(input_dim=self.input_dim, hidden_dim=self.hidden_dim, **arrays)


@dataclass
class CellState:
    """LSTM hidden and cell state vectors, each of length hidden_dim."""

    h: np.ndarray
    c: np.ndarray

    @staticmethod
    def zeros(hidden_dim: int) -> "CellState":
        return CellState(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class CellCache:
    """Per-step activations retained for backpropagation through time."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray  # candidate cell state, tanh-activated
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; loss is fixed to mean squared error."""

    epochs: int
    learning_rate: float = 1e-3
    sequence_length: int = 5
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.sequence_length < 1:
            raise ValueError(f"sequence_length must be >= 1, got {self.sequence_length}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")


def init_params(seed: int, input_dim: int, hidden_dim: int = 32) -> ModelParams:
    """Seed-determined initial parameters.

    Each weight matrix is drawn uniformly from [-s, s] with
    s = sqrt(6 / (fan_in + fan_out)); biases start at zero.
    """
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError("dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in ModelParams._expected_shapes(input_dim, hidden_dim).items():
        if name.startswith("b"):
            arrays[name] = np.zeros(shape)
        else:
            fan_out, fan_in = shape
            s = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[name] = rng.uniform(-s, s, size=shape)
    return ModelParams(input_dim=input_dim, hidden_dim=hidden_dim, **arrays)


def lstm_cell_forward(
    params: ModelParams, x_t: np.ndarray, prev: CellState
) -> tuple[CellState, CellCache]:
    """One LSTM cell step in the standard forget-gate form."""
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape != (params.input_dim,):
        raise ValueError(f"x_t: expected shape ({params.input_dim},), got {x_t.shape}")
    h_prev, c_prev = prev.h, prev.c
    f = _sigmoid(params.W_fh @ h_prev + params.W_fx @ x_t + params.b_f)
    i = _sigmoid(params.W_ih @ h_prev + params.W_ix @ x_t + params.b_i)
    g = np.tanh(params.W_ch @ h_prev + params.W_cx @ x_t + params.b_c)
    c = f * c_prev + i * g
    o = _sigmoid(params.W_oh @ h_prev + params.W_ox @ x_t + params.b_o)
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = CellCache(x=x_t, h_prev=h_prev, c_prev=c_prev, f=f, i=i, g=g, o=o, c=c, tanh_c=tanh_c)
    return CellState(h=h, c=c), cache


def _stacked_weights(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Gate order (f, i, o, c) so the three sigmoid gates are contiguous.
    W_h = np.concatenate((params.W_fh, params.W_ih, params.W_oh, params.W_ch), axis=0)
    W_x = np.concatenate((params.W_fx, params.W_ix, params.W_ox, params.W_cx), axis=0)
    b = np.concatenate((params.b_f, params.b_i, params.b_o, params.b_c))
    return W_h, W_x, b


def forward_sequence(
    params: ModelParams, window: np.ndarray
) -> tuple[float, list[CellCache]]:
    """Run the cell over all rows of a window from a zero initial state.

    Returns the scalar prediction W_out . h_n + b_out (normalized-stress
    units) and the per-step caches needed by :func:`backward`. Equivalent to
    iterating :func:`lstm_cell_forward`, with the four gate products fused
    into one stacked matrix multiply per step.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim != 2 or window.shape[0] == 0:
        raise ValueError(f"window must be a non-empty 2-D matrix, got shape {window.shape}")
    if window.shape[1] != params.input_dim:
        raise ValueError(f"window columns {window.shape[1]} != input_dim {params.input_dim}")
    hd = params.hidden_dim
    W_h, W_x, b = _stacked_weights(params)
    xz = W_x @ window.T + b[:, None]  # input contributions for every step at once
    h = np.zeros(hd)
    c = np.zeros(hd)
    caches = []
    for t in range(window.shape[0]):
        z = W_h @ h + xz[:, t]
        gates = _sigmoid(z[: 3 * hd])
        f, i, o = gates[:hd], gates[hd : 2 * hd], gates[2 * hd :]
        g = np.tanh(z[3 * hd :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        caches.append(
            CellCache(x=window[t], h_prev=h, c_prev=c, f=f, i=i, g=g, o=o, c=c_new, tanh_c=tanh_c)
        )
        h = o * tanh_c
        c = c_new
    prediction = float(params.W_out[0] @ h + params.b_out[0])
    return prediction, caches


def loss_mse(predictions, targets) -> float:
    """Mean squared error."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape:
        raise ValueError(f"length mismatch: {predictions.shape} vs {targets.shape}")
    if predictions.size == 0:
        raise ValueError("empty input")
    return float(np.mean((predictions - targets) ** 2))


def backward(
    params: ModelParams,
    caches: list[CellCache],
    window: np.ndarray,
    target: float,
) -> dict[str, np.ndarray]:
    """Exact gradients of the squared error (pred - target)^2 for one window.

    Backpropagates through the output layer and all time steps; the returned
    dict mirrors the ModelParams arrays.
    """
    window = np.asarray(window, dtype=float)
    n = window.shape[0]
    if len(caches) != n:
        raise ValueError(f"cache/window mismatch: {len(caches)} caches for {n} rows")
    hd = params.hidden_dim
    W_h, _, _ = _stacked_weights(params)

    h_last = caches[-1].o * caches[-1].tanh_c
    prediction = float(params.W_out[0] @ h_last + params.b_out[0])
    dpred = 2.0 * (prediction - target)

    dh = dpred * params.W_out[0, :]
    dc = np.zeros(hd)
    dz = np.empty((n, 4 * hd))  # per-step pre-activation gradients, gate order (f, i, o, c)
    h_prevs = np.empty((n, hd))
    for t in range(n - 1, -1, -1):
        cache = caches[t]
        h_prevs[t] = cache.h_prev
        do = dh * cache.tanh_c
        dc = dc + dh * cache.o * (1.0 - cache.tanh_c ** 2)
        dz[t, :hd] = dc * cache.c_prev * cache.f * (1.0 - cache.f)
        dz[t, hd : 2 * hd] = dc * cache.g * cache.i * (1.0 - cache.i)
        dz[t, 2 * hd : 3 * hd] = do * cache.o * (1.0 - cache.o)
        dz[t, 3 * hd :] = dc * cache.i * (1.0 - cache.g ** 2)
        dh = W_h.T @ dz[t]
        dc = dc * cache.f

    g_h = dz.T @ h_prevs  # (4 hd, hd): summed outer products over all steps
    g_x = dz.T @ window
    g_b = dz.sum(axis=0)
    grads = {
        "W_fh": g_h[:hd], "W_ih": g_h[hd : 2 * hd], "W_oh": g_h[2 * hd : 3 * hd], "W_ch": g_h[3 * hd :],
        "W_fx": g_x[:hd], "W_ix": g_x[hd : 2 * hd], "W_ox": g_x[2 * hd : 3 * hd], "W_cx": g_x[3 * hd :],
        "b_f": g_b[:hd], "b_i": g_b[hd : 2 * hd], "b_o": g_b[2 * hd : 3 * hd], "b_c": g_b[3 * hd :],
        "W_out": (dpred * h_last)[None, :],
        "b_out": np.array([dpred]),
    }
    return grads


def gradient_check(
    params: ModelParams,
    window: np.ndarray,
    target: float,
    delta: float = 1e-5,
    grads: dict[str, np.ndarray] | None = None,
) -> float:
    """Worst relative error between BPTT gradients and central finite differences.

    The relative error uses denominator max(|g|, |g_fd|, 1e-8) per parameter
    entry. Pass precomputed ``grads`` to check a candidate gradient (fault
    injection); otherwise :func:`backward` is called.
    """
    window = np.asarray(window, dtype=float)
    if grads is None:
        _, caches = forward_sequence(params, window)
        grads = backward(params, caches, window, target)

    def loss_at() -> float:
        prediction, _ = forward_sequence(params, window)
        return (prediction - target) ** 2

    worst = 0.0
    for name in PARAM_NAMES:
        arr = getattr(params, name)
        grad = grads[name]
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + delta
            loss_plus = loss_at()
            flat[idx] = original - delta
            loss_minus = loss_at()
            flat[idx] = original
            g_fd = (loss_plus - loss_minus) / (2.0 * delta)
            g = gflat[idx]
            rel = abs(g - g_fd) / max(abs(g), abs(g_fd), 1e-8)
            if rel > worst:
                worst = rel
    return worst


@dataclass
class OptimizerState:
    """Adam moment estimates and step counter (empty for sgd)."""

    kind: str
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_optimizer_state(params: ModelParams, config: TrainConfig) -> OptimizerState:
    state = OptimizerState(kind=config.optimizer)
    if config.optimizer == "adam":
        for name in PARAM_NAMES:
            state.m[name] = np.zeros_like(getattr(params, name))
            state.v[name] = np.zeros_like(getattr(params, name))
    return state


def optimizer_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    config: TrainConfig,
    state: OptimizerState,
) -> ModelParams:
    """Apply one parameter update in place; returns the same ModelParams.

    sgd is the plain update theta <- theta - lr * grad; adam keeps
    bias-corrected first/second moment estimates.
    """
    lr = config.learning_rate
    if state.kind == "sgd":
        for name in PARAM_NAMES:
            arr = getattr(params, name)
            g = grads[name]
            if arr.shape != g.shape:
                raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {arr.shape}")
            arr -= lr * g
        return params

    state.step += 1
    t = state.step
    bias1 = 1.0 - ADAM_BETA1 ** t
    bias2 = 1.0 - ADAM_BETA2 ** t
    for name in PARAM_NAMES:
        arr = getattr(params, name)
        g = grads[name]
        if arr.shape != g.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {arr.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        arr -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
    return params


def train(
    params: ModelParams,
    windows,
    targets,
    config: TrainConfig,
) -> tuple[ModelParams, list[float]]:
    """Per-window (batch size 1) training over seed-shuffled epochs.

    Each epoch visits every window once in a freshly shuffled order and
    records the mean squared error observed during the pass. Deterministic
    for a fixed seed; aborts with a diagnostic if the loss goes non-finite.
    """
    windows = [np.asarray(w, dtype=float) for w in windows]
    targets = np.asarray(targets, dtype=float)
    if len(windows) == 0 or len(windows) != len(targets):
        raise ValueError(f"need matching non-empty windows/targets, got {len(windows)}/{len(targets)}")
    rng = np.random.default_rng(config.seed)
    state = init_optimizer_state(params, config)
    loss_history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(windows))
        total = np.float64(0.0)
        # Divergence produces huge residuals; let them saturate to inf quietly
        # and abort on the non-finite epoch mean.
        with np.errstate(over="ignore", invalid="ignore"):
            for idx in order:
                window = windows[idx]
                target = float(targets[idx])
                prediction, caches = forward_sequence(params, window)
                residual = np.float64(prediction) - np.float64(target)
                total += residual * residual
                grads = backward(params, caches, window, target)
                optimizer_step(params, grads, config, state)
        epoch_loss = float(total / len(windows))
        if not np.isfinite(epoch_loss):
            raise TrainingDivergenceError(
                f"training diverged: non-finite loss {epoch_loss} at epoch {epoch + 1}"
            )
        loss_history.append(epoch_loss)
    return params, loss_history


def evaluate_loss(params: ModelParams, windows, targets) -> float:
    """Forward-only mean squared error of the model on a supervised set."""
    predictions = [forward_sequence(params, w)[0] for w in windows]
    return loss_mse(predictions, targets)
