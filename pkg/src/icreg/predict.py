"""Prediction heads that map a retrieved context to a scalar estimate.

All heads consume the same Prompt shape, so harness code can swap them
freely: a label-averaging baseline, per-prompt ridge regression, a global
least-squares baseline fitted once on the train pool, a wrapper that
ensembles a base head over fixed-width feature chunks, and a line-protocol
bridge to an external predictor process.
"""

from __future__ import annotations

import json
import math
import subprocess
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, cho_factor, cho_solve

from .data import Dataset
from .errors import ExternalPredictorError

RIDGE_LAMBDA = 1e-3
RIDGE_RETRIES = 3


@dataclass
class Prompt:
    """One prediction task: k context pairs and a query point."""

    context_x: np.ndarray
    context_y: np.ndarray
    query: np.ndarray

    def __post_init__(self):
        self.context_x = np.asarray(self.context_x, dtype=np.float64)
        self.context_y = np.asarray(self.context_y, dtype=np.float64)
        self.query = np.asarray(self.query, dtype=np.float64)
        if self.context_x.ndim != 2:
            raise ValueError("context_x must be 2-D (k, d)")
        if self.context_y.shape != (self.context_x.shape[0],):
            raise ValueError("context_y must have one label per context row")
        if self.query.shape != (self.context_x.shape[1],):
            raise ValueError(
                f"query dimension {self.query.shape} does not match context "
                f"dimension {self.context_x.shape[1]}"
            )
        for name, arr in (("context_x", self.context_x), ("context_y", self.context_y), ("query", self.query)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")

    @property
    def k(self) -> int:
        return self.context_x.shape[0]

    @property
    def dim(self) -> int:
        return self.context_x.shape[1]


@dataclass
class Prediction:
    """A scalar estimate, optionally with the per-chunk values behind it."""

    value: float
    predictor: str
    per_chunk: list[float] | None = None


Predictor = Callable[[Prompt], Prediction]


def _require_context(prompt: Prompt, name: str) -> None:
    if prompt.k == 0:
        raise ValueError(f"{name} needs at least one context example")


def predict_average(prompt: Prompt) -> Prediction:
    """Mean of the context labels; ignores features entirely."""
    _require_context(prompt, "average predictor")
    return Prediction(value=float(np.mean(prompt.context_y)), predictor="average")


def predict_ridge(prompt: Prompt, lam: float = RIDGE_LAMBDA) -> Prediction:
    """Ridge regression fitted on the context alone, then applied to the query.

    The intercept is unpenalized. A non-positive-definite normal system is
    retried with lambda scaled by 10, up to 3 times, before giving up.
    """
    _require_context(prompt, "ridge predictor")
    k, d = prompt.context_x.shape
    design = np.hstack([prompt.context_x, np.ones((k, 1))])
    gram = design.T @ design
    rhs = design.T @ prompt.context_y
    penalty = np.ones(d + 1)
    penalty[-1] = 0.0
    attempt_lam = float(lam)
    for attempt in range(RIDGE_RETRIES + 1):
        try:
            factor = cho_factor(gram + attempt_lam * np.diag(penalty), lower=True)
            coef = cho_solve(factor, rhs)
            break
        except np.linalg.LinAlgError:
            attempt_lam *= 10.0
    else:
        raise np.linalg.LinAlgError(
            f"ridge normal equations stayed non-positive-definite up to lambda={attempt_lam / 10.0:g}"
        )
    value = float(prompt.query @ coef[:-1] + coef[-1])
    return Prediction(value=value, predictor="ridge")


@dataclass
class GlobalLeastSquares:
    """Ordinary least squares fitted once on a pool; context is ignored at query time."""

    coef: np.ndarray
    intercept: float

    @classmethod
    def fit(cls, pool: Dataset) -> "GlobalLeastSquares":
        n, d = pool.features.shape
        design = np.hstack([pool.features, np.ones((n, 1))])
        solution, _, rank, _ = np.linalg.lstsq(design, pool.labels, rcond=None)
        if rank < d + 1:
            warnings.warn(
                f"least-squares design is rank deficient ({rank} < {d + 1}); "
                "using the minimum-norm solution",
                LinAlgWarning,
                stacklevel=2,
            )
        return cls(coef=solution[:-1], intercept=float(solution[-1]))

    def __call__(self, prompt: Prompt) -> Prediction:
        value = float(prompt.query @ self.coef + self.intercept)
        return Prediction(value=value, predictor="global-ols")


def predict_ols_global(train: Dataset, query: np.ndarray) -> Prediction:
    """Fit ordinary least squares on `train` and evaluate it at `query`."""
    model = GlobalLeastSquares.fit(train)
    query = np.asarray(query, dtype=float)
    value = float(query @ model.coef + model.intercept)
    return Prediction(value=value, predictor="global-ols")


def chunked(base: Predictor, chunk_dim: int) -> Predictor:
    """Ensemble `base` over feature chunks of width `chunk_dim`.

    Features are split into ceil(d / chunk_dim) contiguous chunks, the last
    zero-padded to full width; the returned value is the mean of the
    per-chunk predictions. With a single chunk the wrapper is exact
    passthrough of the base value.
    """
    if chunk_dim < 1:
        raise ValueError("chunk_dim must be >= 1")

    def run(prompt: Prompt) -> Prediction:
        d = prompt.dim
        n_chunks = math.ceil(d / chunk_dim)
        if n_chunks <= 1:
            inner = base(prompt)
            return Prediction(
                value=inner.value,
                predictor=f"chunked({inner.predictor})",
                per_chunk=[inner.value],
            )
        width = n_chunks * chunk_dim
        ctx = np.zeros((prompt.k, width))
        ctx[:, :d] = prompt.context_x
        qry = np.zeros(width)
        qry[:d] = prompt.query
        values: list[float] = []
        name = ""
        for c in range(n_chunks):
            lo, hi = c * chunk_dim, (c + 1) * chunk_dim
            inner = base(Prompt(ctx[:, lo:hi], prompt.context_y, qry[lo:hi]))
            values.append(inner.value)
            name = inner.predictor
        return Prediction(
            value=float(np.mean(values)),
            predictor=f"chunked({name})",
            per_chunk=values,
        )

    return run


@dataclass(frozen=True)
class ExternalPredictorSpec:
    """How to launch and talk to an out-of-process predictor.

    `input_dim`, when declared, is the feature width the external model
    expects; harness code uses it to chunk wider features.
    """

    command: tuple[str, ...]
    timeout_s: float = 30.0
    workdir: str | None = None
    input_dim: int | None = None

    @classmethod
    def from_file(cls, path: str) -> "ExternalPredictorSpec":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        command = payload.get("command")
        if not isinstance(command, list) or not command or not all(isinstance(c, str) for c in command):
            raise ExternalPredictorError(f"{path}: 'command' must be a non-empty list of strings")
        input_dim = payload.get("input_dim")
        return cls(
            command=tuple(command),
            timeout_s=float(payload.get("timeout_s", 30.0)),
            workdir=payload.get("workdir"),
            input_dim=None if input_dim is None else int(input_dim),
        )


def _prompt_request(prompt: Prompt) -> str:
    context = [
        [[float(v) for v in x], float(y)]
        for x, y in zip(prompt.context_x, prompt.context_y)
    ]
    return json.dumps({"context": context, "query": [float(v) for v in prompt.query]})


class ExternalPredictor:
    """Line-oriented JSON bridge to a subprocess predictor.

    One request line per prompt on stdin ({"context": [[x, y], ...],
    "query": [...]}), one reply line per prompt on stdout
    ({"prediction": value}). The process is started lazily and kept alive
    across prompts; protocol violations and timeouts raise
    ExternalPredictorError.
    """

    def __init__(self, spec: ExternalPredictorSpec):
        self.spec = spec
        self._proc: subprocess.Popen | None = None
        self._stderr_file = None
        self._line = 0

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        import tempfile

        self._stderr_file = tempfile.TemporaryFile(mode="w+", encoding="utf-8")
        try:
            self._proc = subprocess.Popen(
                self.spec.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=self._stderr_file,
                cwd=self.spec.workdir,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalPredictorError(
                f"failed to start external predictor {self.spec.command}: {exc}"
            ) from exc
        return self._proc

    def _diagnostics(self) -> str:
        if self._stderr_file is None:
            return ""
        try:
            self._stderr_file.seek(0)
            tail = self._stderr_file.read()[-500:].strip()
        except (OSError, ValueError):
            return ""
        return f"; child stderr: {tail}" if tail else ""

    def __call__(self, prompt: Prompt) -> Prediction:
        proc = self._ensure_started()
        line = _prompt_request(prompt)
        self._line += 1
        try:
            proc.stdin.write(line + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ExternalPredictorError(
                f"external predictor closed its stdin{self._diagnostics()}"
            ) from exc
        reply = self._read_reply(proc)
        try:
            payload = json.loads(reply)
            value = float(payload["prediction"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ExternalPredictorError(
                f"external predictor sent an invalid reply at line {self._line}: {reply!r}"
            ) from exc
        if not math.isfinite(value):
            raise ExternalPredictorError(
                f"external predictor sent a non-finite value at line {self._line}: {value!r}"
            )
        return Prediction(value=value, predictor="external")

    def _read_reply(self, proc: subprocess.Popen) -> str:
        import threading

        box: list[str | None] = [None]

        def read():
            box[0] = proc.stdout.readline()

        reader = threading.Thread(target=read, daemon=True)
        reader.start()
        reader.join(self.spec.timeout_s)
        if reader.is_alive():
            self.close()
            raise ExternalPredictorError(
                f"external predictor timed out after {self.spec.timeout_s:g}s on line {self._line}"
            )
        reply = box[0]
        if not reply:
            detail = self._diagnostics()
            code = proc.poll()
            self.close()
            raise ExternalPredictorError(
                f"external predictor exited (code {code}) without replying to line "
                f"{self._line}{detail}"
            )
        return reply

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.terminate()
            proc.wait(timeout=5)
        except Exception:
            proc.kill()
        finally:
            if self._stderr_file is not None:
                try:
                    self._stderr_file.close()
                except OSError:
                    pass
                self._stderr_file = None

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_predict(spec: ExternalPredictorSpec, prompts: Sequence[Prompt]) -> list[Prediction]:
    """Run a batch of prompts through one external predictor process."""
    with ExternalPredictor(spec) as predictor:
        return [predictor(p) for p in prompts]
