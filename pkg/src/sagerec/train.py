"""Loss, metrics, and the deterministic full-batch training loop.

Ratings are optimized on their native 1-10 scale with plain MSE; clamping
is an evaluation/serving concern (``clamp_eval``). Message passing during
training and evaluation uses train-split edges only, so test labels never
leak into the aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError, ValidationError
from .gnn import ModelConfig, ModelParams, build_adjacency, init_model, model_backward, model_forward
from .graph import EdgeSplit, HeteroGraph, RATING_MAX, RATING_MIN
from .numkit import AdamState, Rng, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr: float = 0.01
    seed: int = 0
    hidden: int = 32
    log_every: int = 100
    clamp_eval: bool = False

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        # lr 0 is allowed: a zero step leaves parameters at their init values
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.log_every < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")


@dataclass(frozen=True)
class Metrics:
    rmse: float
    weighted_rmse: float
    accuracy: float
    loss: float
    n: int


def mse_loss(pred, label) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient 2(p - y)/n on the predictions."""
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if p.shape != y.shape:
        raise ValidationError(f"mse_loss: {p.shape} predictions vs {y.shape} labels")
    n = p.shape[0]
    if n == 0:
        raise ValidationError("mse_loss: empty input")
    diff = p - y
    return float((diff * diff).mean()), 2.0 * diff / n


def rmse(pred, label, weights=None) -> float:
    """sqrt(sum w*(p-y)^2 / sum w); uniform weights reduce to plain RMSE."""
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if p.shape != y.shape:
        raise ValidationError(f"rmse: {p.shape} predictions vs {y.shape} labels")
    if p.shape[0] == 0:
        raise ValidationError("rmse: empty input")
    sq = (p - y) ** 2
    if weights is None:
        return math.sqrt(float(sq.mean()))
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != p.shape:
        raise ValidationError(f"rmse: {w.shape} weights for {p.shape} predictions")
    if not (w > 0).all():
        raise ValidationError("rmse: weights must all be > 0")
    return math.sqrt(float((w * sq).sum() / w.sum()))


def clamp_ratings(pred) -> np.ndarray:
    return np.clip(np.asarray(pred, dtype=np.float64), RATING_MIN, RATING_MAX)


def accuracy(pred, label) -> float:
    """Exact-match accuracy: round(clamp(pred, 1, 10)) == label.

    Rounding is half away from zero. Labels are expected to be integers in
    [1, 10]; non-integer labels simply never match.
    """
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if p.shape != y.shape:
        raise ValidationError(f"accuracy: {p.shape} predictions vs {y.shape} labels")
    if p.shape[0] == 0:
        raise ValidationError("accuracy: empty input")
    rounded = np.floor(clamp_ratings(p) + 0.5)  # all values positive after clamping
    return float((rounded == y).mean())


def compute_metrics(pred, label, weights=None, clamp_eval: bool = False) -> Metrics:
    """Metrics bundle; clamping always applies to accuracy, and to the
    RMSE/loss figures only when clamp_eval is set."""
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    p_eval = clamp_ratings(p) if clamp_eval else p
    loss = float(((p_eval - y) ** 2).mean())
    return Metrics(
        rmse=rmse(p_eval, y),
        weighted_rmse=rmse(p_eval, y, weights) if weights is not None else rmse(p_eval, y),
        accuracy=accuracy(p, y),
        loss=loss,
        n=int(p.shape[0]),
    )


def _split_part(split: EdgeSplit, part: str) -> list[tuple[int, int, float, float]]:
    if part == "train":
        rows = split.train
    elif part == "test":
        rows = split.test
    else:
        raise ValidationError(f"split part must be 'train' or 'test', got {part!r}")
    if not rows:
        raise ValidationError(f"the {part} split is empty")
    return rows


def _columns(rows) -> tuple[list[tuple[int, int]], np.ndarray, np.ndarray]:
    pairs = [(u, a) for (u, a, _, _) in rows]
    labels = np.array([y for (_, _, y, _) in rows], dtype=np.float64)
    weights = np.array([w for (_, _, _, w) in rows], dtype=np.float64)
    return pairs, labels, weights


def train(graph: HeteroGraph, split: EdgeSplit, model_config: ModelConfig,
          train_config: TrainConfig) -> tuple[ModelParams, list[tuple[int, Metrics]]]:
    """Full-batch Adam loop over the train split.

    Per epoch: encoder over train-split message edges, decoder on the train
    label pairs, MSE backward, one Adam step per parameter. Deterministic
    given (config, seed). Emits ``epoch=<k> loss=<v> rmse=<v>`` to stdout
    whenever log_every divides the epoch, and aborts with DivergenceError
    on a non-finite loss.
    """
    train_config.validate()
    model_config.validate()
    if train_config.hidden != model_config.hidden:
        raise ConfigError(
            f"train config hidden={train_config.hidden} disagrees with model hidden={model_config.hidden}"
        )
    rows = _split_part(split, "train")
    pairs, labels, weights = _columns(rows)
    adj = build_adjacency(pairs, graph.num_users, graph.num_anime)

    params = init_model(model_config, Rng(train_config.seed))
    states = {name: AdamState.fresh(arr.shape, lr=train_config.lr)
              for name, arr in params.named().items()}

    history: list[tuple[int, Metrics]] = []
    for epoch in range(1, train_config.epochs + 1):
        preds, cache = model_forward(params, model_config, graph, pairs, adj=adj)
        loss, dpred = mse_loss(preds, labels)
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss} at epoch {epoch}")
        grads = model_backward(params, model_config, graph, pairs, dpred, cache)
        for name, arr in params.named().items():
            new_param, states[name] = adam_step(arr, grads[name], states[name])
            params.set_named(name, new_param)
        if epoch % train_config.log_every == 0:
            m = compute_metrics(preds, labels, weights)
            history.append((epoch, m))
            print(f"epoch={epoch} loss={m.loss:.6f} rmse={m.rmse:.6f}")
    return params, history


def evaluate(params: ModelParams, model_config: ModelConfig, graph: HeteroGraph,
             split: EdgeSplit, part: str = "test", clamp_eval: bool = False) -> Metrics:
    """Metrics on one split part, with message passing over train edges only."""
    rows = _split_part(split, part)
    pairs, labels, weights = _columns(rows)
    train_pairs = [(u, a) for (u, a, _, _) in split.train]
    adj = build_adjacency(train_pairs, graph.num_users, graph.num_anime)
    preds, _ = model_forward(params, model_config, graph, pairs, adj=adj)
    return compute_metrics(preds, labels, weights, clamp_eval=clamp_eval)


def baseline_global_mean(split: EdgeSplit, part: str = "test",
                         clamp_eval: bool = False) -> Metrics:
    """Constant predictor at the train-split mean rating, as a sanity floor."""
    train_rows = _split_part(split, "train")
    rows = _split_part(split, part)
    mean = float(np.mean([y for (_, _, y, _) in train_rows]))
    _, labels, weights = _columns(rows)
    preds = np.full(labels.shape, mean)
    return compute_metrics(preds, labels, weights, clamp_eval=clamp_eval)
