"""Mini-batch SGD for multiclass logistic regression, with optional DP noise.

The model is softmax regression with the bias folded in as a trailing
constant-1 feature, so the flattened weight vector has dimension
``(num_features + 1) * num_classes``.  Three training modes share one
loop: ``none`` (clip only), ``dp`` and ``geodp``.

A per-example softmax gradient is the outer product of the augmented
input and the probability error, so its norm factors as
``||x|| * ||p - y||``; the trainer exploits this to clip per example
without materializing one gradient per example.
``lr_loss_and_gradient`` keeps the explicit per-example form for callers
that need the rows themselves (gradient capture, oracle tests).

Runs are sequential and deterministic given the config seed; independent
runs can execute concurrently since all state is local.
"""

from dataclasses import dataclass

import numpy as np

from geodp import mechanisms
from geodp.data import GradientDataset, LabeledDataset, batch_iter
from geodp.errors import EmptyBatch, ShapeMismatch
from geodp.mechanisms import PerturbConfig, clip_gradient

TRAIN_MODES = ("none", "dp", "geodp")


@dataclass
class ModelState:
    """Flattened weights of shape (num_features + 1) * num_classes."""

    weights: np.ndarray
    num_features: int
    num_classes: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.dim,):
            raise ShapeMismatch(
                f"weights shape {self.weights.shape} does not match "
                f"({self.num_features}+1) x {self.num_classes}"
            )
        if not np.isfinite(self.weights).all():
            raise ValueError("weights must be finite")

    @property
    def dim(self) -> int:
        return (self.num_features + 1) * self.num_classes

    @property
    def matrix(self) -> np.ndarray:
        """Weights as an (num_features+1, num_classes) view."""
        return self.weights.reshape(self.num_features + 1, self.num_classes)

    @classmethod
    def zeros(cls, num_features: int, num_classes: int) -> "ModelState":
        return cls(np.zeros((num_features + 1) * num_classes), num_features, num_classes)


@dataclass
class TrainConfig:
    mode: str
    perturb: PerturbConfig
    learning_rate: float
    iterations: int
    seed: int

    def __post_init__(self):
        if self.mode not in TRAIN_MODES:
            raise ValueError(f"mode must be one of {TRAIN_MODES}, got {self.mode!r}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


@dataclass
class Trajectory:
    """Per-iteration training record plus the final model."""

    losses: np.ndarray  # (T,) batch loss at w_t
    grad_norms: np.ndarray  # (T,) norm of the averaged clipped gradient
    me: np.ndarray | None  # (T,) ||w_{t+1} - w_ref||^2 when a reference is given
    acc_steps: np.ndarray  # iterations at which accuracy was evaluated
    acc_values: np.ndarray
    final_model: ModelState
    final_accuracy: float | None


def _augment(features: np.ndarray) -> np.ndarray:
    n = features.shape[0]
    return np.hstack([features, np.ones((n, 1))])


def _forward(W: np.ndarray, xa: np.ndarray, labels: np.ndarray):
    """Return (mean loss, probability-error matrix p - onehot)."""
    logits = xa @ W
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    denom = expl.sum(axis=1)
    idx = np.arange(xa.shape[0])
    loss = float(np.mean(np.log(denom) - logits[idx, labels]))
    err = expl / denom[:, None]
    err[idx, labels] -= 1.0
    return loss, err


def lr_loss_and_gradient(model: ModelState, features, labels):
    """Mean cross-entropy loss and one flattened gradient per example.

    The per-example rows are what per-example clipping consumes; their
    mean is the batch gradient.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ShapeMismatch(f"features {features.shape} do not pair with labels {labels.shape}")
    if features.shape[0] == 0:
        raise EmptyBatch("batch must contain at least one example")
    if features.shape[1] != model.num_features:
        raise ShapeMismatch(
            f"model expects {model.num_features} features, batch has {features.shape[1]}"
        )
    xa = _augment(features)
    loss, err = _forward(model.matrix, xa, labels)
    grads = (xa[:, :, None] * err[:, None, :]).reshape(features.shape[0], model.dim)
    return loss, grads


def _fused_clipped_mean(W, xa, xa_norms, labels, clip):
    """Batch loss and averaged per-example-clipped gradient in O(B*d).

    Uses ||outer(x, e)|| = ||x||*||e|| to find each example's clip factor
    without building per-example gradient rows.
    """
    loss, err = _forward(W, xa, labels)
    norms = xa_norms * np.linalg.norm(err, axis=1)
    scale = 1.0 / np.maximum(1.0, norms / clip)
    gt = (xa * scale[:, None]).T @ err / xa.shape[0]
    return loss, gt.ravel()


def sgd_step(model: ModelState, gradient, learning_rate: float) -> ModelState:
    """One descent step: w - eta * g."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != model.weights.shape:
        raise ShapeMismatch(
            f"gradient shape {gradient.shape} does not match weights {model.weights.shape}"
        )
    return ModelState(
        model.weights - learning_rate * gradient, model.num_features, model.num_classes
    )


def evaluate(model: ModelState, test: LabeledDataset) -> float:
    """Fraction of argmax-correct predictions (ties resolve to the lowest class)."""
    if test.num_features != model.num_features:
        raise ShapeMismatch(
            f"model expects {model.num_features} features, test set has {test.num_features}"
        )
    logits = _augment(test.features) @ model.matrix
    return float(np.mean(np.argmax(logits, axis=1) == test.labels))


def train(
    data: LabeledDataset,
    cfg: TrainConfig,
    test: LabeledDataset | None = None,
    reference: ModelState | None = None,
    eval_every: int = 10,
) -> Trajectory:
    """Run T iterations of (optionally private) mini-batch SGD.

    Every mode clips per example and averages; the mode only selects the
    perturbation applied to the averaged clipped gradient before the
    step.  Fully deterministic given ``cfg.seed``: one child stream
    drives batch shuffling, another the mechanism noise.
    """
    pcfg = cfg.perturb
    model = ModelState.zeros(data.num_features, data.num_classes)
    if pcfg.dim != model.dim:
        raise ShapeMismatch(f"perturb config dim {pcfg.dim} != model dim {model.dim}")
    if reference is not None and reference.dim != model.dim:
        raise ShapeMismatch("reference optimum does not match the model shape")

    batch_seed, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    batches = batch_iter(data, pcfg.batch_size, batch_seed)
    noise_rng = np.random.default_rng(noise_seed)

    xa = _augment(data.features)
    xa_norms = np.linalg.norm(xa, axis=1)

    T = cfg.iterations
    losses = np.empty(T)
    grad_norms = np.empty(T)
    me = np.empty(T) if reference is not None else None
    acc_steps, acc_values = [], []

    w = model.weights.copy()
    W = w.reshape(model.num_features + 1, model.num_classes)
    for t in range(T):
        idx = next(batches)
        loss, gtilde = _fused_clipped_mean(W, xa[idx], xa_norms[idx], data.labels[idx], pcfg.clip)
        losses[t] = loss
        grad_norms[t] = np.linalg.norm(gtilde)

        if cfg.mode == "dp":
            g = mechanisms.dp_perturb(gtilde, pcfg, noise_rng)
        elif cfg.mode == "geodp":
            g = mechanisms.geodp_perturb(gtilde, pcfg, noise_rng)
        else:
            g = gtilde
        w -= cfg.learning_rate * g

        if me is not None:
            delta = w - reference.weights
            me[t] = float(delta @ delta)
        if test is not None and (t + 1) % eval_every == 0:
            state = ModelState(w.copy(), model.num_features, model.num_classes)
            acc_steps.append(t + 1)
            acc_values.append(evaluate(state, test))

    final = ModelState(w, model.num_features, model.num_classes)
    final_acc = evaluate(final, test) if test is not None else None
    return Trajectory(
        losses=losses,
        grad_norms=grad_norms,
        me=me,
        acc_steps=np.asarray(acc_steps, dtype=np.int64),
        acc_values=np.asarray(acc_values, dtype=np.float64),
        final_model=final,
        final_accuracy=final_acc,
    )


def collect_gradients(
    data: LabeledDataset,
    epochs: int,
    clip: float,
    seed: int,
    learning_rate: float = 0.1,
) -> GradientDataset:
    """Capture every per-example clipped gradient of a noise-free B=1 run.

    One dataset row per visited example, epochs * n rows total; the model
    descends along the same clipped gradients it records.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    model = ModelState.zeros(data.num_features, data.num_classes)
    w = model.weights.copy()
    rows = np.empty((epochs * data.size, model.dim))
    xa = _augment(data.features)

    pos = 0
    W = w.reshape(model.num_features + 1, model.num_classes)
    for idx in batch_iter(data, 1, seed, epochs=epochs):
        i = idx[0]
        logits = xa[i] @ W
        logits -= logits.max()
        expl = np.exp(logits)
        err = expl / expl.sum()
        err[data.labels[i]] -= 1.0
        grad = clip_gradient(np.outer(xa[i], err).ravel(), clip)
        rows[pos] = grad
        w -= learning_rate * grad
        pos += 1

    meta = {
        "source_model": "logistic_regression",
        "num_features": data.num_features,
        "num_classes": data.num_classes,
        "clip": clip,
        "seed": seed,
        "epochs": epochs,
        "learning_rate": learning_rate,
    }
    return GradientDataset(rows, meta)
