"""Heterogeneous bipartite user-anime graph and seeded edge splitting.

Two node types (user, anime), one labeled relation user->anime with the
reverse relation generated automatically. Graphs are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numkit import Rng, round_half_away

U2A = "u2a"  # messages flow user -> anime (anime nodes aggregate user features)
A2U = "a2u"

RATING_MIN = 1.0
RATING_MAX = 10.0


def id_sort_key(ext_id: str):
    """Deterministic total order over external ids: numeric ids first, by value."""
    if ext_id.isdigit():
        return (0, int(ext_id), ext_id)
    return (1, 0, ext_id)


class IdMap:
    """Bijection between external string ids and contiguous row indices."""

    def __init__(self, ids: list[str]):
        self.to_id: list[str] = list(ids)
        self.to_index: dict[str, int] = {}
        for i, ext in enumerate(self.to_id):
            if ext in self.to_index:
                raise ValidationError(f"duplicate external id {ext!r}")
            self.to_index[ext] = i

    def __len__(self) -> int:
        return len(self.to_id)

    def __contains__(self, ext_id: str) -> bool:
        return ext_id in self.to_index

    def index(self, ext_id: str) -> int:
        return self.to_index[ext_id]

    def __eq__(self, other) -> bool:
        return isinstance(other, IdMap) and self.to_id == other.to_id


@dataclass(frozen=True, eq=False)
class HeteroGraph:
    """Typed node features plus labeled directed edges and their reversals."""

    user_x: np.ndarray
    anime_x: np.ndarray
    edges: list[tuple[int, int]]          # (user_index, anime_index)
    rev_edges: list[tuple[int, int]]      # (anime_index, user_index), auto-generated
    edge_label: list[float]               # ratings in [1, 10], parallel to edges
    user_ids: IdMap
    anime_ids: IdMap

    @property
    def num_users(self) -> int:
        return self.user_x.shape[0]

    @property
    def num_anime(self) -> int:
        return self.anime_x.shape[0]


@dataclass(frozen=True)
class EdgeSplit:
    """Disjoint train/test partitions of the labeled edges.

    Entries are (user_index, anime_index, rating, weight). Together the two
    lists hold exactly the graph's labeled edge multiset. The index lists
    record which original edge positions landed where (in split order), so
    a split can be serialized and rebuilt exactly.
    """

    train: list[tuple[int, int, float, float]]
    test: list[tuple[int, int, float, float]]
    seed: int
    ratio: float
    train_index: list[int]
    test_index: list[int]


def build_graph(user_x: np.ndarray, anime_x: np.ndarray,
                edges: list[tuple[int, int]], labels: list[float],
                user_ids: IdMap, anime_ids: IdMap) -> HeteroGraph:
    """Validate indices and labels, generate reverse edges, freeze the graph."""
    num_users = user_x.shape[0]
    num_anime = anime_x.shape[0]
    if len(user_ids) != num_users:
        raise ValidationError(f"user id map has {len(user_ids)} ids for {num_users} rows")
    if len(anime_ids) != num_anime:
        raise ValidationError(f"anime id map has {len(anime_ids)} ids for {num_anime} rows")
    if len(edges) != len(labels):
        raise ValidationError(f"{len(edges)} edges but {len(labels)} labels")
    for k, (u, a) in enumerate(edges):
        if not (0 <= u < num_users):
            raise ValidationError(f"edge {k} ({u}, {a}): user index {u} out of range [0, {num_users})")
        if not (0 <= a < num_anime):
            raise ValidationError(f"edge {k} ({u}, {a}): anime index {a} out of range [0, {num_anime})")
    for k, y in enumerate(labels):
        if not (RATING_MIN <= y <= RATING_MAX):
            raise ValidationError(f"label {k}: rating {y} outside [{RATING_MIN:g}, {RATING_MAX:g}]")
    rev = [(a, u) for (u, a) in edges]
    return HeteroGraph(user_x=user_x, anime_x=anime_x,
                       edges=list(edges), rev_edges=rev, edge_label=list(labels),
                       user_ids=user_ids, anime_ids=anime_ids)


def split_edges(g: HeteroGraph, ratio: float = 0.8, seed: int = 0,
                weights: list[float] | None = None) -> EdgeSplit:
    """Seeded shuffle then prefix/suffix partition of the labeled edges.

    |train| = round(ratio * total), half away from zero. Omitted weights
    default to 1.0 per edge. Test edges supply labels only: training-time
    message passing is restricted to the train split by the train module.
    """
    total = len(g.edges)
    if total == 0:
        raise ValidationError("cannot split a graph with no labeled edges")
    if not (0.0 < ratio < 1.0):
        raise ValidationError(f"split ratio must lie in (0, 1), got {ratio}")
    if weights is None:
        weights = [1.0] * total
    if len(weights) != total:
        raise ValidationError(f"{len(weights)} weights for {total} edges")
    for k, w in enumerate(weights):
        if not w > 0:
            raise ValidationError(f"weight {k} must be > 0, got {w}")

    order = list(range(total))
    Rng(seed).shuffle(order)
    n_train = round_half_away(ratio * total)
    rows = [(g.edges[i][0], g.edges[i][1], g.edge_label[i], weights[i]) for i in order]
    return EdgeSplit(train=rows[:n_train], test=rows[n_train:], seed=seed, ratio=ratio,
                     train_index=order[:n_train], test_index=order[n_train:])


def neighbor_lists(g: HeteroGraph, direction: str) -> list[list[int]]:
    """Per-destination ascending-sorted source index lists for one relation.

    direction U2A: for each anime node, the user indices rating it.
    direction A2U: for each user node, the anime indices they rated.
    Duplicate edges are kept (multigraph semantics), so a repeated pair
    contributes its source index once per occurrence.
    """
    return neighbor_lists_from_edges(g.edges, g.num_users, g.num_anime, direction)


def neighbor_lists_from_edges(edges: list[tuple[int, int]], num_users: int,
                              num_anime: int, direction: str) -> list[list[int]]:
    """neighbor_lists over an explicit (user, anime) edge subset."""
    if direction == U2A:
        out: list[list[int]] = [[] for _ in range(num_anime)]
        for u, a in edges:
            out[a].append(u)
    elif direction == A2U:
        out = [[] for _ in range(num_users)]
        for u, a in edges:
            out[u].append(a)
    else:
        raise ValidationError(f"unknown direction {direction!r}, expected {U2A!r} or {A2U!r}")
    for lst in out:
        lst.sort()
    return out
