"""Two-layer heterogeneous GraphSAGE encoder plus edge-MLP decoder.

Each relation (user->anime, anime->user) carries its own weights:
h_dst = x_dst @ w_self + mean(x_src over inbound neighbors) @ w_neigh + bias.
Layer 1 output is optionally L2-row-normalized, then ReLU'd, then fed to
layer 2; the decoder concatenates a (user, anime) embedding pair and maps
it through a small MLP to one raw rating per pair.

The backward pass is written by hand and returns exact reverse-mode
gradients for every parameter; the test suite checks it against central
finite differences. Aggregation gathers neighbors in ascending (dst, src)
index order, which makes forward outputs invariant to edge-list order.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConsistencyError, FormatError, ShapeError, ValidationError
from .graph import A2U, U2A, HeteroGraph, neighbor_lists_from_edges
from .numkit import NORM_FLOOR, Rng, xavier_uniform

AGGRS = ("sum", "mean", "max")

MODEL_FILE_VERSION = 1

PARAM_NAMES = (
    "l1.u2a.w_self", "l1.u2a.w_neigh", "l1.u2a.bias",
    "l1.a2u.w_self", "l1.a2u.w_neigh", "l1.a2u.bias",
    "l2.u2a.w_self", "l2.u2a.w_neigh", "l2.u2a.bias",
    "l2.a2u.w_self", "l2.a2u.w_neigh", "l2.a2u.bias",
    "dec.w1", "dec.b1", "dec.w2", "dec.b2",
)


@dataclass(eq=False)
class SageParams:
    """Weights of one relation's SAGE convolution."""

    w_self: np.ndarray   # (in_dim_dst, out_dim)
    w_neigh: np.ndarray  # (in_dim_src, out_dim)
    bias: np.ndarray     # (1, out_dim)


@dataclass(frozen=True)
class ModelConfig:
    hidden: int
    aggr: str = "sum"          # cross-relation combine
    normalize: bool = True     # L2-normalize rows after layer 1
    embed_dim: int = 384
    genre_dim: int = 0
    num_users: int = 0

    @property
    def anime_dim(self) -> int:
        return self.embed_dim + self.genre_dim

    def validate(self) -> None:
        if self.hidden < 1:
            raise ConfigError(f"hidden must be >= 1, got {self.hidden}")
        if self.aggr not in AGGRS:
            raise ConfigError(f"aggr must be one of {AGGRS}, got {self.aggr!r}")
        if self.anime_dim < 1 or self.num_users < 1:
            raise ConfigError(
                f"invalid dims: embed_dim={self.embed_dim} genre_dim={self.genre_dim} "
                f"num_users={self.num_users}"
            )


@dataclass(eq=False)
class ModelParams:
    layer1: dict[str, SageParams]
    layer2: dict[str, SageParams]
    dec_w1: np.ndarray  # (2*hidden, hidden)
    dec_b1: np.ndarray  # (1, hidden)
    dec_w2: np.ndarray  # (hidden, 1)
    dec_b2: np.ndarray  # (1, 1)

    def named(self) -> dict[str, np.ndarray]:
        """Parameters keyed by canonical name, in PARAM_NAMES order."""
        out: dict[str, np.ndarray] = {}
        for prefix, layer in (("l1", self.layer1), ("l2", self.layer2)):
            for rel in (U2A, A2U):
                if rel not in layer:
                    raise ConfigError(f"layer {prefix} is missing relation {rel!r}")
                p = layer[rel]
                out[f"{prefix}.{rel}.w_self"] = p.w_self
                out[f"{prefix}.{rel}.w_neigh"] = p.w_neigh
                out[f"{prefix}.{rel}.bias"] = p.bias
        out["dec.w1"] = self.dec_w1
        out["dec.b1"] = self.dec_b1
        out["dec.w2"] = self.dec_w2
        out["dec.b2"] = self.dec_b2
        return out

    def set_named(self, name: str, value: np.ndarray) -> None:
        if name.startswith(("l1.", "l2.")):
            prefix, rel, leaf = name.split(".")
            layer = self.layer1 if prefix == "l1" else self.layer2
            setattr(layer[rel], leaf, value)
        elif name == "dec.w1":
            self.dec_w1 = value
        elif name == "dec.b1":
            self.dec_b1 = value
        elif name == "dec.w2":
            self.dec_w2 = value
        elif name == "dec.b2":
            self.dec_b2 = value
        else:
            raise ConfigError(f"unknown parameter name {name!r}")


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, int]]:
    """Canonical parameter shapes implied by a config."""
    h = config.hidden
    return {
        "l1.u2a.w_self": (config.anime_dim, h),
        "l1.u2a.w_neigh": (config.num_users, h),
        "l1.u2a.bias": (1, h),
        "l1.a2u.w_self": (config.num_users, h),
        "l1.a2u.w_neigh": (config.anime_dim, h),
        "l1.a2u.bias": (1, h),
        "l2.u2a.w_self": (h, h),
        "l2.u2a.w_neigh": (h, h),
        "l2.u2a.bias": (1, h),
        "l2.a2u.w_self": (h, h),
        "l2.a2u.w_neigh": (h, h),
        "l2.a2u.bias": (1, h),
        "dec.w1": (2 * h, h),
        "dec.b1": (1, h),
        "dec.w2": (h, 1),
        "dec.b2": (1, 1),
    }


class Adjacency:
    """Flattened gather/scatter indices for one relation.

    Built from per-destination ascending-sorted neighbor lists, so the
    accumulation order is ascending (dst, src) regardless of the edge-list
    order the lists came from. Duplicate edges contribute once per
    occurrence (multigraph).
    """

    def __init__(self, neighbors: list[list[int]], num_src: int):
        dst_idx: list[int] = []
        src_idx: list[int] = []
        for d, lst in enumerate(neighbors):
            for s in lst:
                if not (0 <= s < num_src):
                    raise ValidationError(f"neighbor index {s} out of range [0, {num_src})")
                dst_idx.append(d)
                src_idx.append(s)
        self.num_dst = len(neighbors)
        self.num_src = num_src
        self.dst_idx = np.asarray(dst_idx, dtype=np.int64)
        self.src_idx = np.asarray(src_idx, dtype=np.int64)
        self.counts = np.bincount(self.dst_idx, minlength=self.num_dst).astype(np.float64)

    def mean_aggregate(self, x_src: np.ndarray) -> np.ndarray:
        """Per-destination mean of source rows; zero rows for empty neighborhoods."""
        out = np.zeros((self.num_dst, x_src.shape[1]), dtype=np.float64)
        if self.dst_idx.size:
            np.add.at(out, self.dst_idx, x_src[self.src_idx])
            nz = self.counts > 0
            out[nz] /= self.counts[nz, None]
        return out

    def mean_backward(self, d_agg: np.ndarray) -> np.ndarray:
        """Scatter aggregate gradients back onto source rows."""
        dx = np.zeros((self.num_src, d_agg.shape[1]), dtype=np.float64)
        if self.dst_idx.size:
            contrib = d_agg[self.dst_idx] / self.counts[self.dst_idx, None]
            np.add.at(dx, self.src_idx, contrib)
        return dx


@dataclass(frozen=True)
class GraphAdjacency:
    u2a: Adjacency  # src=user, dst=anime
    a2u: Adjacency  # src=anime, dst=user


def build_adjacency(edges: list[tuple[int, int]], num_users: int, num_anime: int) -> GraphAdjacency:
    return GraphAdjacency(
        u2a=Adjacency(neighbor_lists_from_edges(edges, num_users, num_anime, U2A), num_users),
        a2u=Adjacency(neighbor_lists_from_edges(edges, num_users, num_anime, A2U), num_anime),
    )


def _check_sage_dims(p: SageParams, x_dst: np.ndarray, x_src: np.ndarray) -> None:
    out_dim = p.w_self.shape[1]
    if p.w_neigh.shape[1] != out_dim or p.bias.shape != (1, out_dim):
        raise ShapeError(
            f"inconsistent SAGE params: w_self {p.w_self.shape}, "
            f"w_neigh {p.w_neigh.shape}, bias {p.bias.shape}"
        )
    if x_dst.shape[1] != p.w_self.shape[0]:
        raise ShapeError(f"x_dst dim {x_dst.shape[1]} != w_self rows {p.w_self.shape[0]}")
    if x_src.shape[1] != p.w_neigh.shape[0]:
        raise ShapeError(f"x_src dim {x_src.shape[1]} != w_neigh rows {p.w_neigh.shape[0]}")


def _sage(p: SageParams, x_dst: np.ndarray, x_src: np.ndarray,
          adj: Adjacency) -> tuple[np.ndarray, np.ndarray]:
    """SAGE convolution returning (output, cached neighbor aggregate)."""
    _check_sage_dims(p, x_dst, x_src)
    agg = adj.mean_aggregate(x_src)
    return x_dst @ p.w_self + agg @ p.w_neigh + p.bias, agg


def sage_forward(p: SageParams, x_dst: np.ndarray, x_src: np.ndarray, neighbors) -> np.ndarray:
    """Single-relation convolution: self term + mean-of-neighbors term + bias.

    ``neighbors`` is either per-destination sorted source index lists or a
    prebuilt Adjacency.
    """
    if not isinstance(neighbors, Adjacency):
        if len(neighbors) != x_dst.shape[0]:
            raise ShapeError(f"{len(neighbors)} neighbor lists for {x_dst.shape[0]} destinations")
        neighbors = Adjacency([sorted(lst) for lst in neighbors], x_src.shape[0])
    out, _ = _sage(p, x_dst, x_src, neighbors)
    return out


def combine_relations(outs: list[np.ndarray], aggr: str) -> np.ndarray:
    """Cross-relation combine. Vacuous here (one inbound relation per node
    type) but implemented per config for schema extensions."""
    if aggr not in AGGRS:
        raise ConfigError(f"aggr must be one of {AGGRS}, got {aggr!r}")
    if not outs:
        raise ConfigError("no relation outputs to combine")
    if aggr == "sum":
        return np.add.reduce(outs)
    if aggr == "mean":
        return np.add.reduce(outs) / len(outs)
    return np.maximum.reduce(outs)


def hetero_layer_forward(layer: dict[str, SageParams], user_x: np.ndarray, anime_x: np.ndarray,
                         adj: GraphAdjacency, aggr: str = "sum") -> tuple[np.ndarray, np.ndarray]:
    """One hetero layer: anime nodes aggregate users (u2a), users aggregate anime (a2u)."""
    for rel in (U2A, A2U):
        if rel not in layer:
            raise ConfigError(f"layer params missing relation {rel!r}")
    anime_h = combine_relations([_sage(layer[U2A], anime_x, user_x, adj.u2a)[0]], aggr)
    user_h = combine_relations([_sage(layer[A2U], user_x, anime_x, adj.a2u)[0]], aggr)
    return user_h, anime_h


def _l2norm_cached(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row normalization that keeps (output, norms, normalized-row mask) for backward."""
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    mask = norms[:, 0] > NORM_FLOOR
    y = x.copy()
    y[mask] = x[mask] / norms[mask]
    return y, norms, mask


@dataclass(eq=False)
class ForwardCache:
    """Every intermediate the backward pass needs, plus consistency stamps."""

    adj: GraphAdjacency
    user_x: np.ndarray
    anime_x: np.ndarray
    agg1_u2a: np.ndarray     # mean user features per anime
    agg1_a2u: np.ndarray     # mean anime features per user
    pre1_u: np.ndarray
    pre1_a: np.ndarray
    n1_u: np.ndarray         # post-normalize (== pre1 when normalize off)
    n1_a: np.ndarray
    norms_u: np.ndarray | None
    norms_a: np.ndarray | None
    mask_u: np.ndarray | None
    mask_a: np.ndarray | None
    h1_u: np.ndarray         # post-ReLU
    h1_a: np.ndarray
    agg2_u2a: np.ndarray
    agg2_a2u: np.ndarray
    user_z: np.ndarray
    anime_z: np.ndarray
    u_idx: np.ndarray        # decoder pair indices
    a_idx: np.ndarray
    Z: np.ndarray            # (E, 2H) concatenated pair embeddings
    A1: np.ndarray           # (E, H) decoder pre-activation
    R1: np.ndarray           # (E, H) decoder post-ReLU
    param_shapes: tuple
    config_key: tuple


def encoder_forward(params: ModelParams, config: ModelConfig, graph: HeteroGraph,
                    edges: list[tuple[int, int]] | None = None,
                    adj: GraphAdjacency | None = None,
                    ) -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Layer 1 -> optional L2 row-normalize -> ReLU -> layer 2.

    Message passing runs over ``edges`` (default: all labeled graph edges);
    pass a prebuilt ``adj`` to amortize adjacency construction across epochs.
    Returns final embeddings plus the cache consumed by model_backward.
    """
    config.validate()
    if adj is None:
        msg_edges = graph.edges if edges is None else edges
        adj = build_adjacency(msg_edges, graph.num_users, graph.num_anime)

    user_x, anime_x = graph.user_x, graph.anime_x
    l1, l2 = params.layer1, params.layer2
    for layer in (l1, l2):
        for rel in (U2A, A2U):
            if rel not in layer:
                raise ConfigError(f"layer params missing relation {rel!r}")

    pre1_a, agg1_u2a = _sage(l1[U2A], anime_x, user_x, adj.u2a)
    pre1_u, agg1_a2u = _sage(l1[A2U], user_x, anime_x, adj.a2u)
    pre1_a = combine_relations([pre1_a], config.aggr)
    pre1_u = combine_relations([pre1_u], config.aggr)

    if config.normalize:
        n1_u, norms_u, mask_u = _l2norm_cached(pre1_u)
        n1_a, norms_a, mask_a = _l2norm_cached(pre1_a)
    else:
        n1_u, norms_u, mask_u = pre1_u, None, None
        n1_a, norms_a, mask_a = pre1_a, None, None

    h1_u = np.maximum(n1_u, 0.0)
    h1_a = np.maximum(n1_a, 0.0)

    z_a, agg2_u2a = _sage(l2[U2A], h1_a, h1_u, adj.u2a)
    z_u, agg2_a2u = _sage(l2[A2U], h1_u, h1_a, adj.a2u)
    z_a = combine_relations([z_a], config.aggr)
    z_u = combine_relations([z_u], config.aggr)

    cache = ForwardCache(
        adj=adj, user_x=user_x, anime_x=anime_x,
        agg1_u2a=agg1_u2a, agg1_a2u=agg1_a2u,
        pre1_u=pre1_u, pre1_a=pre1_a,
        n1_u=n1_u, n1_a=n1_a,
        norms_u=norms_u, norms_a=norms_a, mask_u=mask_u, mask_a=mask_a,
        h1_u=h1_u, h1_a=h1_a,
        agg2_u2a=agg2_u2a, agg2_a2u=agg2_a2u,
        user_z=z_u, anime_z=z_a,
        u_idx=np.zeros(0, dtype=np.int64), a_idx=np.zeros(0, dtype=np.int64),
        Z=np.zeros((0, 2 * config.hidden)), A1=np.zeros((0, config.hidden)),
        R1=np.zeros((0, config.hidden)),
        param_shapes=tuple(a.shape for a in params.named().values()),
        config_key=(config.hidden, config.aggr, config.normalize),
    )
    return z_u, z_a, cache


def _pair_arrays(pairs, num_users: int, num_anime: int) -> tuple[np.ndarray, np.ndarray]:
    u_idx = np.asarray([p[0] for p in pairs], dtype=np.int64)
    a_idx = np.asarray([p[1] for p in pairs], dtype=np.int64)
    if u_idx.size:
        if u_idx.min() < 0 or u_idx.max() >= num_users:
            raise ValidationError(f"pair user index out of range [0, {num_users})")
        if a_idx.min() < 0 or a_idx.max() >= num_anime:
            raise ValidationError(f"pair anime index out of range [0, {num_anime})")
    return u_idx, a_idx


def decoder_forward(params: ModelParams, user_z: np.ndarray, anime_z: np.ndarray,
                    pairs) -> np.ndarray:
    """Per-pair prediction: relu([z_u || z_a] @ w1 + b1) @ w2 + b2, unclamped."""
    u_idx, a_idx = _pair_arrays(pairs, user_z.shape[0], anime_z.shape[0])
    Z = np.concatenate([user_z[u_idx], anime_z[a_idx]], axis=1)
    A1 = Z @ params.dec_w1 + params.dec_b1
    R1 = np.maximum(A1, 0.0)
    return (R1 @ params.dec_w2 + params.dec_b2)[:, 0]


def model_forward(params: ModelParams, config: ModelConfig, graph: HeteroGraph, pairs,
                  edges: list[tuple[int, int]] | None = None,
                  adj: GraphAdjacency | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Encoder plus decoder in one pass, caching decoder intermediates too."""
    user_z, anime_z, cache = encoder_forward(params, config, graph, edges=edges, adj=adj)
    u_idx, a_idx = _pair_arrays(pairs, user_z.shape[0], anime_z.shape[0])
    Z = np.concatenate([user_z[u_idx], anime_z[a_idx]], axis=1)
    A1 = Z @ params.dec_w1 + params.dec_b1
    R1 = np.maximum(A1, 0.0)
    preds = (R1 @ params.dec_w2 + params.dec_b2)[:, 0]
    cache.u_idx, cache.a_idx = u_idx, a_idx
    cache.Z, cache.A1, cache.R1 = Z, A1, R1
    return preds, cache


def _l2norm_backward(d_y: np.ndarray, y: np.ndarray, norms: np.ndarray,
                     mask: np.ndarray) -> np.ndarray:
    dx = d_y.copy()
    yd = (y[mask] * d_y[mask]).sum(axis=1, keepdims=True)
    dx[mask] = (d_y[mask] - y[mask] * yd) / norms[mask]
    return dx


def model_backward(params: ModelParams, config: ModelConfig, graph: HeteroGraph, pairs,
                   grad_on_predictions, cache: ForwardCache) -> dict[str, np.ndarray]:
    """Exact gradients of sum(grad_on_predictions * predictions) w.r.t. all params.

    Requires the cache produced by the matching model_forward call; a cache
    from different params, config, or pairs raises ConsistencyError.
    ReLU uses subgradient 0 at exactly 0.
    """
    named = params.named()
    if cache.param_shapes != tuple(a.shape for a in named.values()):
        raise ConsistencyError("forward cache was built for differently shaped parameters")
    if cache.config_key != (config.hidden, config.aggr, config.normalize):
        raise ConsistencyError("forward cache was built under a different model config")
    dpred = np.asarray(grad_on_predictions, dtype=np.float64)
    if dpred.shape != (len(pairs),) or len(pairs) != cache.u_idx.shape[0]:
        raise ConsistencyError(
            f"gradient length {dpred.shape} does not match cached pairs ({cache.u_idx.shape[0]})"
        )

    l1, l2 = params.layer1, params.layer2
    grads: dict[str, np.ndarray] = {}

    # decoder
    d_w2 = cache.R1.T @ dpred[:, None]
    d_b2 = np.array([[dpred.sum()]])
    d_R1 = dpred[:, None] * params.dec_w2[:, 0][None, :]
    d_A1 = d_R1 * (cache.A1 > 0.0)
    d_w1 = cache.Z.T @ d_A1
    d_b1 = d_A1.sum(axis=0, keepdims=True)
    d_Z = d_A1 @ params.dec_w1.T

    h = config.hidden
    d_user_z = np.zeros_like(cache.user_z)
    d_anime_z = np.zeros_like(cache.anime_z)
    np.add.at(d_user_z, cache.u_idx, d_Z[:, :h])
    np.add.at(d_anime_z, cache.a_idx, d_Z[:, h:])

    grads["dec.w1"], grads["dec.b1"] = d_w1, d_b1
    grads["dec.w2"], grads["dec.b2"] = d_w2, d_b2

    # layer 2 (single inbound relation per node type, so the cross-relation
    # combine is the identity for every aggr mode)
    d_h1_u = np.zeros_like(cache.h1_u)
    d_h1_a = np.zeros_like(cache.h1_a)

    grads["l2.u2a.w_self"] = cache.h1_a.T @ d_anime_z
    grads["l2.u2a.w_neigh"] = cache.agg2_u2a.T @ d_anime_z
    grads["l2.u2a.bias"] = d_anime_z.sum(axis=0, keepdims=True)
    d_h1_a += d_anime_z @ l2[U2A].w_self.T
    d_h1_u += cache.adj.u2a.mean_backward(d_anime_z @ l2[U2A].w_neigh.T)

    grads["l2.a2u.w_self"] = cache.h1_u.T @ d_user_z
    grads["l2.a2u.w_neigh"] = cache.agg2_a2u.T @ d_user_z
    grads["l2.a2u.bias"] = d_user_z.sum(axis=0, keepdims=True)
    d_h1_u += d_user_z @ l2[A2U].w_self.T
    d_h1_a += cache.adj.a2u.mean_backward(d_user_z @ l2[A2U].w_neigh.T)

    # ReLU, then optional row normalization
    d_n1_u = d_h1_u * (cache.n1_u > 0.0)
    d_n1_a = d_h1_a * (cache.n1_a > 0.0)
    if config.normalize:
        d_pre1_u = _l2norm_backward(d_n1_u, cache.n1_u, cache.norms_u, cache.mask_u)
        d_pre1_a = _l2norm_backward(d_n1_a, cache.n1_a, cache.norms_a, cache.mask_a)
    else:
        d_pre1_u, d_pre1_a = d_n1_u, d_n1_a

    # layer 1 (graph features are inputs, not parameters: stop here)
    grads["l1.u2a.w_self"] = cache.anime_x.T @ d_pre1_a
    grads["l1.u2a.w_neigh"] = cache.agg1_u2a.T @ d_pre1_a
    grads["l1.u2a.bias"] = d_pre1_a.sum(axis=0, keepdims=True)

    grads["l1.a2u.w_self"] = cache.user_x.T @ d_pre1_u
    grads["l1.a2u.w_neigh"] = cache.agg1_a2u.T @ d_pre1_u
    grads["l1.a2u.bias"] = d_pre1_u.sum(axis=0, keepdims=True)

    return {name: grads[name] for name in PARAM_NAMES}


def init_model(config: ModelConfig, rng: Rng) -> ModelParams:
    """Xavier-uniform weights, zero biases; draw order is fixed so a given
    (config, seed) always produces the same parameters."""
    config.validate()
    h = config.hidden

    def sage(in_dst: int, in_src: int) -> SageParams:
        return SageParams(
            w_self=xavier_uniform(in_dst, h, rng),
            w_neigh=xavier_uniform(in_src, h, rng),
            bias=np.zeros((1, h)),
        )

    layer1 = {U2A: sage(config.anime_dim, config.num_users),
              A2U: sage(config.num_users, config.anime_dim)}
    layer2 = {U2A: sage(h, h), A2U: sage(h, h)}
    return ModelParams(
        layer1=layer1, layer2=layer2,
        dec_w1=xavier_uniform(2 * h, h, rng), dec_b1=np.zeros((1, h)),
        dec_w2=xavier_uniform(h, 1, rng), dec_b2=np.zeros((1, 1)),
    )


def save_model(params: ModelParams, config: ModelConfig, path: str) -> None:
    """Write the model as one JSON document; atomic, full float precision."""
    doc = {
        "version": MODEL_FILE_VERSION,
        "config": {
            "hidden": config.hidden, "aggr": config.aggr, "normalize": config.normalize,
            "embed_dim": config.embed_dim, "genre_dim": config.genre_dim,
            "num_users": config.num_users,
        },
        "params": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}
            for name, arr in params.named().items()
        },
    }
    try:
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    except ValueError as e:
        raise FormatError(f"model contains non-finite values: {e}") from None
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    os.replace(tmp, path)


def load_model(path: str) -> tuple[ModelParams, ModelConfig]:
    """Inverse of save_model; validates version, names, and shapes before
    returning anything, so a truncated file never yields a partial model."""
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not a valid model file ({e})") from None

    version = doc.get("version")
    if version != MODEL_FILE_VERSION:
        raise FormatError(f"{path}: model file version {version!r}, supported {MODEL_FILE_VERSION}")
    try:
        cfg = doc["config"]
        config = ModelConfig(
            hidden=int(cfg["hidden"]), aggr=str(cfg["aggr"]), normalize=bool(cfg["normalize"]),
            embed_dim=int(cfg["embed_dim"]), genre_dim=int(cfg["genre_dim"]),
            num_users=int(cfg["num_users"]),
        )
        raw = doc["params"]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: malformed model config ({e})") from None
    config.validate()

    shapes = expected_shapes(config)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        if name not in raw:
            raise FormatError(f"{path}: parameter {name!r} is missing")
        entry = raw[name]
        got = tuple(entry.get("shape", ()))
        if got != shape:
            raise FormatError(f"{path}: parameter {name!r} has shape {got}, expected {shape}")
        data = entry.get("data")
        if not isinstance(data, list) or len(data) != shape[0] * shape[1]:
            raise FormatError(f"{path}: parameter {name!r} data length does not match shape {shape}")
        arrays[name] = np.array(data, dtype=np.float64).reshape(shape)

    def sage(prefix: str) -> SageParams:
        return SageParams(w_self=arrays[f"{prefix}.w_self"],
                          w_neigh=arrays[f"{prefix}.w_neigh"],
                          bias=arrays[f"{prefix}.bias"])

    params = ModelParams(
        layer1={U2A: sage("l1.u2a"), A2U: sage("l1.a2u")},
        layer2={U2A: sage("l2.u2a"), A2U: sage("l2.a2u")},
        dec_w1=arrays["dec.w1"], dec_b1=arrays["dec.b1"],
        dec_w2=arrays["dec.w2"], dec_b2=arrays["dec.b2"],
    )
    return params, config
