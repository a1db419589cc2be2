"""Conditional flow-matching objective and training loop.

Probability path: linear interpolant x_t = (1 - t) x0 + t x1 with prior
x0 ~ N(0, I) and constant conditional target u = x1 - x0. The loss is
the batch mean of the squared Euclidean residual between the model field
at (x_t, t) and u.

Test loss is computed on frozen (t, x0, x1) triples drawn once per
(dataset, seed); the triple stream's SHA-256 digest is recorded so
paired comparisons across model variants can be asserted. Training is
single-threaded and fully seeded: rerunning a config reproduces the loss
curves bit-identically.
"""

import hashlib
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .field import field_batched
from .nn import AdamState, Tape, adam_step

VARIANTS = ("plain", "gauge", "hgfm")


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; parameters are rolled back."""

    def __init__(self, step, loss):
        super().__init__(
            f"non-finite loss ({loss}) at step {step}; "
            f"parameters rolled back to the last finite step"
        )
        self.step = step


@dataclass
class TrainConfig:
    variant: str
    n: int
    batch_size: int = 256
    steps: int = 20000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    eval_every: int = 500
    n_eval_pairs: int = 2048
    deterministic: bool = True
    hidden: int | None = None
    independent_direction: bool = False
    two_field: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if min(self.batch_size, self.n_eval_pairs) < 1 or self.steps < 0:
            raise ValueError("sizes must be positive")


@dataclass
class PathBatch:
    """A batch of interpolant samples: x_t = (1-t) x0 + t x1, u = x1 - x0."""

    t: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    x_t: np.ndarray
    u_target: np.ndarray

    def __len__(self):
        return self.x1.shape[0]


def sample_path(rng, data_batch):
    """Draw (t, x0) for each data row and form the interpolant batch."""
    x1 = np.asarray(data_batch, dtype=np.float64)
    if x1.ndim != 2 or x1.shape[0] == 0:
        raise ValueError("data batch must be a non-empty (B, N) array")
    batch = x1.shape[0]
    t = rng.uniform(0.0, 1.0, size=(batch, 1))
    x0 = rng.standard_normal(x1.shape)
    x_t = (1.0 - t) * x0 + t * x1
    return PathBatch(t=t, x0=x0, x1=x1, x_t=x_t, u_target=x1 - x0)


def cfm_loss(model, batch, with_grad=False):
    """Mean squared field-vs-target residual; optionally backpropagates."""
    tape = Tape()
    pred = field_batched(tape, model, batch.x_t, batch.t)
    loss = tape.mse(pred, batch.u_target)
    if not np.isfinite(loss.value):
        raise FloatingPointError(f"non-finite flow-matching loss: {loss.value}")
    if with_grad:
        tape.backward(loss)
    return loss.value


@dataclass
class RunMetrics:
    variant: str
    n: int
    train_curve: list = field(default_factory=list)  # (step, loss)
    test_curve: list = field(default_factory=list)  # (step, loss)
    final_train: float = float("nan")
    final_test: float = float("nan")
    param_count: int = 0
    wall_time: float = 0.0
    eval_digest: str = ""

    def to_json(self):
        return asdict(self)


def _eval_triples(dataset, n_pairs, seed):
    """Frozen (t, x0, x1) triples for paired evaluation, plus their digest."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xE7A1)))
    idx = rng.integers(0, dataset.points.shape[0], size=n_pairs)
    x1 = dataset.points[idx]
    t = rng.uniform(0.0, 1.0, size=(n_pairs, 1))
    x0 = rng.standard_normal(x1.shape)
    digest = hashlib.sha256()
    for arr in (t, x0, x1):
        digest.update(np.ascontiguousarray(arr).tobytes())
    batch = PathBatch(t=t, x0=x0, x1=x1, x_t=(1.0 - t) * x0 + t * x1,
                      u_target=x1 - x0)
    return batch, digest.hexdigest()


def evaluate(model, dataset, n_eval_pairs=2048, seed=0, max_batch=4096):
    """CFM loss over frozen triples; identical triples for every model."""
    batch, _ = _eval_triples(dataset, n_eval_pairs, seed)
    return _eval_on(model, batch, max_batch)


def _eval_on(model, batch, max_batch=4096):
    total = 0.0
    rows = len(batch)
    for lo in range(0, rows, max_batch):
        hi = min(lo + max_batch, rows)
        piece = PathBatch(
            t=batch.t[lo:hi], x0=batch.x0[lo:hi], x1=batch.x1[lo:hi],
            x_t=batch.x_t[lo:hi], u_target=batch.u_target[lo:hi],
        )
        total += cfm_loss(model, piece) * (hi - lo)
    return total / rows


def train(model, dataset, config, test_dataset=None, on_step=None):
    """Run the optimizer; returns (model, RunMetrics).

    Train loss is recorded every step; test loss every ``eval_every``
    steps on frozen triples from ``test_dataset`` (skipped when absent).
    A non-finite loss rolls parameters back one step and raises
    ``TrainingDiverged``.
    """
    if dataset.points.shape[1] != model.n:
        raise ValueError("dataset dimension does not match the model")
    params = model.parameters()
    for p in params:
        p.zero_grad()
    state = AdamState(params, lr=config.lr, beta1=config.beta1,
                      beta2=config.beta2, eps=config.eps)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0x7EA1)))
    metrics = RunMetrics(variant=config.variant, n=config.n,
                         param_count=sum(p.size for p in params))

    eval_batch = None
    if test_dataset is not None:
        eval_batch, metrics.eval_digest = _eval_triples(
            test_dataset, config.n_eval_pairs, config.seed
        )

    n_rows = dataset.points.shape[0]
    order = np.empty(0, dtype=np.int64)
    cursor = 0
    last_good = None
    started = time.perf_counter()
    for step in range(1, config.steps + 1):
        if cursor + config.batch_size > order.size:
            order = rng.permutation(n_rows)
            cursor = 0
        idx = order[cursor : cursor + config.batch_size]
        cursor += config.batch_size
        batch = sample_path(rng, dataset.points[idx])

        last_good = [p.values.copy() for p in params]
        try:
            loss = cfm_loss(model, batch, with_grad=True)
        except FloatingPointError:
            for p, saved in zip(params, last_good):
                p.values[...] = saved
                p.zero_grad()
            raise TrainingDiverged(step, float("nan")) from None
        adam_step(state)

        metrics.train_curve.append((step, loss))
        if eval_batch is not None and (
            step % config.eval_every == 0 or step == config.steps
        ):
            metrics.test_curve.append((step, _eval_on(model, eval_batch)))
        if on_step is not None:
            on_step(step, metrics)

    metrics.wall_time = time.perf_counter() - started
    if metrics.train_curve:
        tail = [loss for _, loss in metrics.train_curve[-100:]]
        metrics.final_train = float(np.mean(tail))
    if metrics.test_curve:
        metrics.final_test = metrics.test_curve[-1][1]
    return model, metrics
