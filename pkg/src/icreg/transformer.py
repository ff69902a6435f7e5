"""A desk-scale decoder-only transformer for in-context regression.

Implemented directly on NumPy arrays: interleaved x/y token embeddings,
learned positional embeddings, pre-layer-norm blocks with causal
multi-head attention and a GELU MLP, and a scalar readout at every
x-token position. The backward pass is hand-written reverse mode, which
keeps the whole model checkable against finite differences.

Sequences are (x_1, y_1, ..., x_n, y_n, x_query); the readout at each
x-position is trained to predict the y that follows it, so one sequence
supervises every context length from 0 to n at once.
"""

from __future__ import annotations

import enum
import io
import json
import math
import os
import tempfile
import zipfile
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import erf

from .predict import Prediction, Prompt

INIT_STD = 0.02
LN_EPS = 1e-5
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# plain-float constants: numpy scalars would silently promote float32
# activations back to float64
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

CHECKPOINT_FORMAT = "icl-checkpoint-v1"


@dataclass(frozen=True)
class ICLConfig:
    """Shape and training hyperparameters of the in-context model.

    `dtype` selects the training precision; float32 roughly halves the
    wall time per step while gradient checks always require float64.
    """

    input_dim: int
    embed_dim: int = 64
    layers: int = 2
    heads: int = 2
    n_max: int = 40
    learning_rate: float = 1e-3
    batch_size: int = 64
    steps: int = 5000
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self):
        if not 1 <= self.input_dim <= 10:
            raise ValueError("input_dim must be between 1 and 10")
        for name in ("embed_dim", "layers", "heads", "n_max", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.embed_dim % self.heads != 0:
            raise ValueError(
                f"embed_dim ({self.embed_dim}) must be divisible by heads ({self.heads})"
            )
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.heads

    @property
    def max_sequence(self) -> int:
        return 2 * self.n_max + 1

    @property
    def np_dtype(self) -> np.dtype:
        return np.dtype(self.dtype)


def _init_params(cfg: ICLConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    d, D = cfg.input_dim, cfg.embed_dim
    dt = cfg.np_dtype

    def w(*shape):
        return rng.normal(0.0, INIT_STD, size=shape).astype(dt)

    params: dict[str, np.ndarray] = {
        "embed_x/W": w(d, D),
        "embed_x/b": np.zeros(D, dtype=dt),
        "embed_y/W": w(1, D),
        "embed_y/b": np.zeros(D, dtype=dt),
        "pos": w(cfg.max_sequence, D),
    }
    for i in range(cfg.layers):
        p = f"block{i}"
        params[f"{p}/ln1/g"] = np.ones(D, dtype=dt)
        params[f"{p}/ln1/b"] = np.zeros(D, dtype=dt)
        for proj in ("q", "k", "v", "o"):
            params[f"{p}/attn/W{proj}"] = w(D, D)
            params[f"{p}/attn/b{proj}"] = np.zeros(D, dtype=dt)
        params[f"{p}/ln2/g"] = np.ones(D, dtype=dt)
        params[f"{p}/ln2/b"] = np.zeros(D, dtype=dt)
        params[f"{p}/mlp/W1"] = w(D, 4 * D)
        params[f"{p}/mlp/b1"] = np.zeros(4 * D, dtype=dt)
        params[f"{p}/mlp/W2"] = w(4 * D, D)
        params[f"{p}/mlp/b2"] = np.zeros(D, dtype=dt)
    params["ln_f/g"] = np.ones(D, dtype=dt)
    params["ln_f/b"] = np.zeros(D, dtype=dt)
    params["readout/W"] = w(D, 1)
    params["readout/b"] = np.zeros(1, dtype=dt)
    return params


@dataclass
class ICLModel:
    """Parameters plus Adam state; mutated in place by train_step."""

    config: ICLConfig
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] = field(repr=False, default=None)
    adam_v: dict[str, np.ndarray] = field(repr=False, default=None)
    step_count: int = 0

    def __post_init__(self):
        if self.adam_m is None:
            self.adam_m = {k: np.zeros_like(v) for k, v in self.params.items()}
        if self.adam_v is None:
            self.adam_v = {k: np.zeros_like(v) for k, v in self.params.items()}

    @property
    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())


def init_model(cfg: ICLConfig) -> ICLModel:
    """Fresh model: N(0, 0.02^2) weights, zero biases, unit layer-norm gains."""
    rng = np.random.default_rng(cfg.seed)
    return ICLModel(config=cfg, params=_init_params(cfg, rng))


# ---------------------------------------------------------------------------
# forward / backward


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def _layer_norm_grad(dout, cache):
    xhat, inv, g = cache
    dg = np.sum(dout * xhat, axis=(0, 1))
    db = np.sum(dout, axis=(0, 1))
    dxhat = dout * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
    )
    return dx, dg, db


def _linear(x, W, b):
    return x @ W + b


def _linear_grad(dout, x, W):
    din = x.shape[-1]
    dW = x.reshape(-1, din).T @ dout.reshape(-1, W.shape[1])
    db = dout.sum(axis=(0, 1))
    dx = dout @ W.T
    return dx, dW, db


def _gelu(u):
    c = 0.5 * (1.0 + erf(u / _SQRT2))
    return u * c, (u, c)


def _gelu_grad(dout, cache):
    u, c = cache
    return dout * (c + u * _INV_SQRT_2PI * np.exp(-0.5 * u * u))


def _split_heads(x, heads):
    b, s, dim = x.shape
    return x.reshape(b, s, heads, dim // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, s, hd = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, s, h * hd)


def _validate_batch(cfg: ICLConfig, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=cfg.np_dtype)
    ys = np.asarray(ys, dtype=cfg.np_dtype)
    if xs.ndim != 3 or xs.shape[2] != cfg.input_dim:
        raise ValueError(f"xs must have shape (batch, n+1, {cfg.input_dim}); got {xs.shape}")
    n = xs.shape[1] - 1
    if n < 0:
        raise ValueError("xs must contain at least the query point")
    if n > cfg.n_max:
        raise ValueError(f"context length {n} exceeds n_max {cfg.n_max}")
    if ys.shape != (xs.shape[0], n):
        raise ValueError(f"ys must have shape ({xs.shape[0]}, {n}); got {ys.shape}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ValueError("batch must be finite")
    return xs, ys


def _forward(params: dict, cfg: ICLConfig, xs: np.ndarray, ys: np.ndarray, keep: bool):
    """Run the network; returns predictions at x-positions and, if `keep`,
    the intermediate cache required by the backward pass."""
    B, np1, _ = xs.shape
    n = np1 - 1
    S = 2 * n + 1
    D = cfg.embed_dim

    ex = _linear(xs, params["embed_x/W"], params["embed_x/b"])
    ey = _linear(ys[..., None], params["embed_y/W"], params["embed_y/b"])
    h = np.empty((B, S, D), dtype=ex.dtype)
    h[:, 0::2] = ex
    h[:, 1::2] = ey
    h = h + params["pos"][:S]

    # strictly-upper-triangular -inf mask: position i attends to j <= i
    mask = np.triu(np.full((S, S), -np.inf, dtype=ex.dtype), k=1)
    scale = 1.0 / math.sqrt(cfg.head_dim)

    blocks = []
    for i in range(cfg.layers):
        p = f"block{i}"
        a, ln1_cache = _layer_norm(h, params[f"{p}/ln1/g"], params[f"{p}/ln1/b"])
        q = _linear(a, params[f"{p}/attn/Wq"], params[f"{p}/attn/bq"])
        k = _linear(a, params[f"{p}/attn/Wk"], params[f"{p}/attn/bk"])
        v = _linear(a, params[f"{p}/attn/Wv"], params[f"{p}/attn/bv"])
        qh, kh, vh = (_split_heads(t, cfg.heads) for t in (q, k, v))
        scores = qh @ kh.transpose(0, 1, 3, 2) * scale + mask
        scores -= scores.max(axis=-1, keepdims=True)
        att = np.exp(scores)
        att /= att.sum(axis=-1, keepdims=True)
        ctx = _merge_heads(att @ vh)
        o = _linear(ctx, params[f"{p}/attn/Wo"], params[f"{p}/attn/bo"])
        h1 = h + o

        m, ln2_cache = _layer_norm(h1, params[f"{p}/ln2/g"], params[f"{p}/ln2/b"])
        u = _linear(m, params[f"{p}/mlp/W1"], params[f"{p}/mlp/b1"])
        gact, gelu_cache = _gelu(u)
        mlp_out = _linear(gact, params[f"{p}/mlp/W2"], params[f"{p}/mlp/b2"])
        h2 = h1 + mlp_out

        if keep:
            blocks.append(
                dict(
                    ln1=ln1_cache, a=a, qh=qh, kh=kh, vh=vh, att=att, ctx=ctx,
                    ln2=ln2_cache, m=m, gelu=gelu_cache, gact=gact,
                )
            )
        h = h2

    f, lnf_cache = _layer_norm(h, params["ln_f/g"], params["ln_f/b"])
    out = _linear(f, params["readout/W"], params["readout/b"])
    preds = out[:, 0::2, 0]
    cache = None
    if keep:
        cache = dict(xs=xs, ys=ys, blocks=blocks, lnf=lnf_cache, f=f, S=S, scale=scale)
    return preds, cache


def _backward(params: dict, cfg: ICLConfig, cache: dict, dpreds: np.ndarray) -> dict[str, np.ndarray]:
    xs, ys = cache["xs"], cache["ys"]
    B = xs.shape[0]
    S = cache["S"]
    scale = cache["scale"]
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    dout = np.zeros((B, S, 1), dtype=dpreds.dtype)
    dout[:, 0::2, 0] = dpreds
    df, grads["readout/W"], grads["readout/b"] = _linear_grad(dout, cache["f"], params["readout/W"])
    dh, grads["ln_f/g"], grads["ln_f/b"] = _layer_norm_grad(df, cache["lnf"])

    for i in reversed(range(cfg.layers)):
        p = f"block{i}"
        blk = cache["blocks"][i]

        dgact, grads[f"{p}/mlp/W2"], grads[f"{p}/mlp/b2"] = _linear_grad(
            dh, blk["gact"], params[f"{p}/mlp/W2"]
        )
        du = _gelu_grad(dgact, blk["gelu"])
        dm, grads[f"{p}/mlp/W1"], grads[f"{p}/mlp/b1"] = _linear_grad(
            du, blk["m"], params[f"{p}/mlp/W1"]
        )
        dh1, grads[f"{p}/ln2/g"], grads[f"{p}/ln2/b"] = _layer_norm_grad(dm, blk["ln2"])
        dh1 += dh  # residual

        dctx, grads[f"{p}/attn/Wo"], grads[f"{p}/attn/bo"] = _linear_grad(
            dh1, blk["ctx"], params[f"{p}/attn/Wo"]
        )
        dctx_h = _split_heads(dctx, cfg.heads)
        att, qh, kh, vh = blk["att"], blk["qh"], blk["kh"], blk["vh"]
        datt = dctx_h @ vh.transpose(0, 1, 3, 2)
        dvh = att.transpose(0, 1, 3, 2) @ dctx_h
        dscores = att * (datt - np.sum(datt * att, axis=-1, keepdims=True))
        dqh = dscores @ kh * scale
        dkh = dscores.transpose(0, 1, 3, 2) @ qh * scale
        da = np.zeros_like(blk["a"])
        for name, dproj in (("q", dqh), ("k", dkh), ("v", dvh)):
            dflat = _merge_heads(dproj)
            dx, dW, db = _linear_grad(dflat, blk["a"], params[f"{p}/attn/W{name}"])
            grads[f"{p}/attn/W{name}"] = dW
            grads[f"{p}/attn/b{name}"] = db
            da += dx
        dh_pre, grads[f"{p}/ln1/g"], grads[f"{p}/ln1/b"] = _layer_norm_grad(da, blk["ln1"])
        dh = dh_pre + dh1  # residual

    grads["pos"][:S] = dh.sum(axis=0)
    dex = dh[:, 0::2]
    dey = dh[:, 1::2]
    _, grads["embed_x/W"], grads["embed_x/b"] = _linear_grad(dex, xs, params["embed_x/W"])
    _, grads["embed_y/W"], grads["embed_y/b"] = _linear_grad(dey, ys[..., None], params["embed_y/W"])
    return grads


def forward(model: ICLModel, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Predictions at every x-position.

    Parameters
    ----------
    xs : (batch, n+1, d) context inputs followed by the query input.
    ys : (batch, n) context labels.

    Returns
    -------
    (batch, n+1) array; entry j is the model's estimate of the label that
    follows the j-th x-token, so the last column answers the query.
    """
    xs, ys = _validate_batch(model.config, xs, ys)
    preds, _ = _forward(model.params, model.config, xs, ys, keep=False)
    return preds


def loss_mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over every batch row and x-position."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {targets.shape}")
    diff = predictions - targets
    return float(np.mean(diff * diff))


def loss_and_grads(
    model: ICLModel, xs: np.ndarray, ys_full: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE over all x-positions plus gradients for every parameter.

    `ys_full` has shape (batch, n+1): context labels followed by the true
    query label; the first n columns are also fed to the network as tokens.
    """
    ys_full = np.asarray(ys_full, dtype=model.config.np_dtype)
    xs, ctx_y = _validate_batch(model.config, xs, ys_full[:, :-1])
    preds, cache = _forward(model.params, model.config, xs, ctx_y, keep=True)
    loss = loss_mse(preds, ys_full)
    dpreds = 2.0 * (preds - ys_full) / preds.size
    grads = _backward(model.params, model.config, cache, dpreds)
    return loss, grads


def train_step(model: ICLModel, xs: np.ndarray, ys_full: np.ndarray, lr: float | None = None) -> float:
    """One Adam update in place; returns the pre-update batch loss.

    Raises FloatingPointError if the loss goes non-finite, reporting the
    optimizer step at which training halted.
    """
    loss, grads = loss_and_grads(model, xs, ys_full)
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite loss at optimizer step {model.step_count + 1}; training halted"
        )
    lr = model.config.learning_rate if lr is None else float(lr)
    model.step_count += 1
    t = model.step_count
    bias1 = 1.0 - ADAM_BETA1**t
    bias2 = 1.0 - ADAM_BETA2**t
    for name, g in grads.items():
        m = model.adam_m[name]
        v = model.adam_v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        model.params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
    return loss


class FunctionClass(enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass
class TaskSampler:
    """Streams synthetic regression tasks: fresh weights and inputs per draw.

    Linear tasks are y = w @ x; quadratic tasks square the linear response.
    Both use standard-normal x and w, plus optional label noise.
    """

    input_dim: int
    function_class: FunctionClass = FunctionClass.LINEAR
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        self._rng = np.random.default_rng(self.seed)

    def sample_batch(self, batch_size: int, n_context: int) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys_full) with xs (B, n+1, d) and ys_full (B, n+1)."""
        rng = self._rng
        xs = rng.normal(size=(batch_size, n_context + 1, self.input_dim))
        w = rng.normal(size=(batch_size, self.input_dim))
        ys = np.einsum("bnd,bd->bn", xs, w)
        if self.function_class is FunctionClass.QUADRATIC:
            ys = ys * ys
        if self.noise_std > 0:
            ys = ys + rng.normal(0.0, self.noise_std, size=ys.shape)
        return xs, ys


def train(
    cfg: ICLConfig,
    sampler: TaskSampler,
    steps: int | None = None,
    checkpoint_dir: str | None = None,
    log_every: int = 0,
) -> tuple[ICLModel, np.ndarray]:
    """Train a fresh model for `steps` batches of fresh tasks.

    Returns the model and the per-step loss curve. When `checkpoint_dir`
    is set, a checkpoint is written every steps/10 updates plus at the end.
    """
    steps = cfg.steps if steps is None else int(steps)
    model = init_model(cfg)
    losses = np.empty(steps)
    every = max(1, steps // 10) if steps else 0
    for step in range(steps):
        xs, ys_full = sampler.sample_batch(cfg.batch_size, cfg.n_max)
        losses[step] = train_step(model, xs, ys_full)
        if log_every and (step + 1) % log_every == 0:
            print(f"step {step + 1}/{steps} loss {losses[step]:.6f}", flush=True)
        if checkpoint_dir and ((step + 1) % every == 0 or step + 1 == steps):
            save_checkpoint(model, os.path.join(checkpoint_dir, f"step{step + 1:06d}.npz"))
    return model, losses


class EvalPoint(NamedTuple):
    k: int
    model_mse: float
    baseline_mse: float


def evaluate_incontext(
    model: ICLModel,
    sampler: TaskSampler,
    context_lengths: list[int],
    tasks_per_point: int = 256,
) -> list[EvalPoint]:
    """Query MSE versus context length, paired with the label-averaging baseline.

    Each requested length draws fresh tasks; the baseline predicts the mean
    context label (0 when the context is empty).
    """
    points = []
    for k in context_lengths:
        if k > model.config.n_max:
            raise ValueError(f"context length {k} exceeds n_max {model.config.n_max}")
        xs, ys_full = sampler.sample_batch(tasks_per_point, k)
        preds = forward(model, xs, ys_full[:, :-1])
        truth = ys_full[:, -1]
        model_mse = float(np.mean((preds[:, -1] - truth) ** 2))
        baseline = ys_full[:, :-1].mean(axis=1) if k > 0 else np.zeros_like(truth)
        baseline_mse = float(np.mean((baseline - truth) ** 2))
        points.append(EvalPoint(k=k, model_mse=model_mse, baseline_mse=baseline_mse))
    return points


def gradient_check(
    model: ICLModel, xs: np.ndarray, ys_full: np.ndarray, h: float = 1e-4
) -> dict[str, float]:
    """Relative error between analytic and central-finite-difference gradients.

    For each parameter tensor: ||g_analytic - g_fd|| / max(||g_analytic||,
    ||g_fd||, 1e-12). All arithmetic is 64-bit.
    """
    if model.config.np_dtype != np.float64:
        raise ValueError("gradient check requires a float64 model")
    ys_full = np.asarray(ys_full, dtype=np.float64)
    _, grads = loss_and_grads(model, xs, ys_full)

    def loss_at() -> float:
        preds, _ = _forward(model.params, model.config, np.asarray(xs, dtype=np.float64),
                            ys_full[:, :-1], keep=False)
        return loss_mse(preds, ys_full)

    errors: dict[str, float] = {}
    for name, tensor in model.params.items():
        fd = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        fd_flat = fd.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            up = loss_at()
            flat[idx] = original - h
            down = loss_at()
            flat[idx] = original
            fd_flat[idx] = (up - down) / (2.0 * h)
        num = np.linalg.norm(grads[name] - fd)
        den = max(np.linalg.norm(grads[name]), np.linalg.norm(fd), 1e-12)
        errors[name] = float(num / den)
    return errors


def as_predictor(model: ICLModel) -> Callable[[Prompt], Prediction]:
    """Adapt a trained model to the Prompt interface.

    The prompt dimension must equal the model's input_dim; wrap with
    predict.chunked to serve wider features.
    """

    def run(prompt: Prompt) -> Prediction:
        if prompt.dim != model.config.input_dim:
            raise ValueError(
                f"prompt dimension {prompt.dim} does not match model input_dim "
                f"{model.config.input_dim}; wrap with chunked()"
            )
        if prompt.k > model.config.n_max:
            raise ValueError(f"context length {prompt.k} exceeds n_max {model.config.n_max}")
        xs = np.vstack([prompt.context_x, prompt.query[None, :]])[None]
        preds = forward(model, xs, prompt.context_y[None, :])
        return Prediction(value=float(preds[0, -1]), predictor="icl")

    return run


# ---------------------------------------------------------------------------
# checkpoints


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, arr, allow_pickle=False)
    return buf.getvalue()


def save_checkpoint(model: ICLModel, path: str) -> None:
    """Write config + parameters + optimizer state as a zip of .npy entries."""
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "step_count": model.step_count,
        "tensors": sorted(model.params),
    }
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            with zipfile.ZipFile(fh, "w", zipfile.ZIP_DEFLATED) as zf:

                def put(name: str, data: bytes):
                    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
                    info.compress_type = zipfile.ZIP_DEFLATED
                    zf.writestr(info, data)

                put("manifest.json", json.dumps(manifest, indent=2, sort_keys=True).encode())
                for name in sorted(model.params):
                    put(f"params/{name}.npy", _npy_bytes(model.params[name]))
                    put(f"adam_m/{name}.npy", _npy_bytes(model.adam_m[name]))
                    put(f"adam_v/{name}.npy", _npy_bytes(model.adam_v[name]))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> ICLModel:
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json").decode())
        if manifest.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a model checkpoint")
        cfg = ICLConfig(**manifest["config"])

        def get(group: str, name: str) -> np.ndarray:
            return np.load(io.BytesIO(zf.read(f"{group}/{name}.npy")), allow_pickle=False)

        names = manifest["tensors"]
        model = ICLModel(
            config=cfg,
            params={n: get("params", n) for n in names},
            adam_m={n: get("adam_m", n) for n in names},
            adam_v={n: get("adam_v", n) for n in names},
            step_count=int(manifest["step_count"]),
        )
    return model
