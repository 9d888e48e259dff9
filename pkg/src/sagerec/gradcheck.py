"""Finite-difference verification of the hand-written backward pass.

Builds a small random graph, computes analytic gradients of the MSE
training loss, and compares every parameter entry against central finite
differences. Relative error uses max(|analytic|, |fd|, 1e-8) as the
denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gnn import ModelConfig, build_adjacency, init_model, model_backward, model_forward
from .graph import IdMap, build_graph
from .numkit import Rng
from .train import mse_loss

DEFAULT_TOL = 1e-4


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    worst_param: str
    worst_index: int
    n_entries: int

    def passed(self, tol: float = DEFAULT_TOL) -> bool:
        return self.max_rel_err <= tol


def random_graph(seed: int, num_users: int = 6, num_anime: int = 8, num_edges: int = 20,
                 embed_dim: int = 9, genre_dim: int = 3):
    """Seeded random check fixture: identity users, dense random anime features."""
    max_edges = num_users * num_anime
    if num_edges > max_edges:
        raise ValidationError(f"cannot place {num_edges} distinct edges in a {num_users}x{num_anime} graph")
    rng = Rng(seed)
    anime_dim = embed_dim + genre_dim
    user_x = np.eye(num_users, dtype=np.float64)
    anime_x = np.empty((num_anime, anime_dim), dtype=np.float64)
    flat = anime_x.reshape(-1)
    for i in range(flat.size):
        flat[i] = 2.0 * rng.uniform() - 1.0

    chosen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    while len(edges) < num_edges:
        pair = (rng.below(num_users), rng.below(num_anime))
        if pair not in chosen:
            chosen.add(pair)
            edges.append(pair)
    labels = [float(1 + rng.below(10)) for _ in edges]

    graph = build_graph(
        user_x, anime_x, edges, labels,
        user_ids=IdMap([f"u{i}" for i in range(num_users)]),
        anime_ids=IdMap([f"a{i}" for i in range(num_anime)]),
    )
    return graph, labels


def gradient_check(seed: int = 7, num_users: int = 6, num_anime: int = 8,
                   num_edges: int = 20, hidden: int = 8, embed_dim: int = 9,
                   genre_dim: int = 3, aggr: str = "sum", normalize: bool = True,
                   h: float = 1e-4, corrupt=None) -> GradCheckReport:
    """Compare model_backward against central finite differences of the loss.

    ``corrupt``, if given, mutates the analytic gradient dict before the
    comparison; the tests use it as a negative control.
    """
    graph, labels = random_graph(seed, num_users, num_anime, num_edges, embed_dim, genre_dim)
    config = ModelConfig(hidden=hidden, aggr=aggr, normalize=normalize,
                         embed_dim=embed_dim, genre_dim=genre_dim, num_users=num_users)
    params = init_model(config, Rng(seed + 1))
    pairs = list(graph.edges)
    y = np.asarray(labels)
    adj = build_adjacency(pairs, graph.num_users, graph.num_anime)

    preds, cache = model_forward(params, config, graph, pairs, adj=adj)
    _, dpred = mse_loss(preds, y)
    grads = model_backward(params, config, graph, pairs, dpred, cache)
    if corrupt is not None:
        corrupt(grads)

    def loss_at() -> float:
        p, _ = model_forward(params, config, graph, pairs, adj=adj)
        return mse_loss(p, y)[0]

    max_rel = 0.0
    worst_param = ""
    worst_index = -1
    n_entries = 0
    for name, arr in params.named().items():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_at()
            flat[i] = orig - h
            lm = loss_at()
            flat[i] = orig
            fd = (lp - lm) / (2.0 * h)
            a = gflat[i]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            n_entries += 1
            if rel > max_rel:
                max_rel = rel
                worst_param = name
                worst_index = i
    return GradCheckReport(max_rel_err=max_rel, worst_param=worst_param,
                           worst_index=worst_index, n_entries=n_entries)
