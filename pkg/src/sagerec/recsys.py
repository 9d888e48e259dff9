"""Top-k recommendation: score a user's unrated anime, sort, truncate.

Candidates exclude every anime the user has a labeled edge to anywhere in
the graph (full history, not just the training split), and serving-time
message passing runs over all labeled edges. Predictions are clamped to
the 1-10 rating scale for display; ties break by ascending anime id so
lists are fully deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import UnknownIdError, ValidationError
from .gnn import ModelConfig, ModelParams, decoder_forward, encoder_forward
from .graph import HeteroGraph, id_sort_key
from .train import clamp_ratings


@dataclass(frozen=True)
class RecList:
    user_id: str
    items: list[tuple[str, float]]  # (anime external id, clamped predicted rating)


def _unknown_user(user_id: str, graph: HeteroGraph) -> UnknownIdError:
    known = graph.user_ids.to_id
    msg = f"unknown user id {user_id!r}; graph has {len(known)} known user ids"
    if user_id.isdigit():
        numeric = [ext for ext in known if ext.isdigit()]
        if numeric:
            target = int(user_id)
            nearest = sorted(numeric, key=lambda e: (abs(int(e) - target), int(e)))[:3]
            msg += f" (nearest: {', '.join(nearest)})"
    return UnknownIdError(msg)


def _topk_for_user(params: ModelParams, graph: HeteroGraph, user_z: np.ndarray,
                   anime_z: np.ndarray, user_id: str, k: int) -> RecList:
    uidx = graph.user_ids.index(user_id)
    rated = {a for (u, a) in graph.edges if u == uidx}
    candidates = [a for a in range(graph.num_anime) if a not in rated]
    if not candidates:
        return RecList(user_id=user_id, items=[])
    preds = clamp_ratings(decoder_forward(params, user_z, anime_z, [(uidx, a) for a in candidates]))
    order = sorted(range(len(candidates)),
                   key=lambda i: (-preds[i], id_sort_key(graph.anime_ids.to_id[candidates[i]])))
    items = [(graph.anime_ids.to_id[candidates[i]], float(preds[i])) for i in order[:k]]
    return RecList(user_id=user_id, items=items)


def recommend_topk(params: ModelParams, config: ModelConfig, graph: HeteroGraph,
                   user_id: str, k: int = 10) -> RecList:
    """Ranked unwatched-anime list for one user; fewer than k items only
    when the candidate pool runs out."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if user_id not in graph.user_ids:
        raise _unknown_user(user_id, graph)
    user_z, anime_z, _ = encoder_forward(params, config, graph)
    return _topk_for_user(params, graph, user_z, anime_z, user_id, k)


def batch_recommend(params: ModelParams, config: ModelConfig, graph: HeteroGraph,
                    user_ids: list[str], k: int = 10) -> list[RecList]:
    """Per-user lists identical to individual recommend_topk calls, sharing
    one encoder forward. Any unknown id fails before any output."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    for user_id in user_ids:
        if user_id not in graph.user_ids:
            raise _unknown_user(user_id, graph)
    if not user_ids:
        return []
    user_z, anime_z, _ = encoder_forward(params, config, graph)
    return [_topk_for_user(params, graph, user_z, anime_z, uid, k) for uid in user_ids]


def format_text(rec: RecList, names: dict[str, str]) -> list[str]:
    """CLI text format: a user= header then one rank= line per item."""
    lines = [f"user={rec.user_id}"]
    for rank, (anime_id, pred) in enumerate(rec.items, start=1):
        lines.append(f"rank={rank} anime={anime_id} name={names.get(anime_id, '?')} pred={pred:.2f}")
    return lines


def format_jsonl(rec: RecList, names: dict[str, str]) -> str:
    """One JSON document per user for machine consumption."""
    doc = {
        "user": rec.user_id,
        "items": [
            {"rank": rank, "anime": anime_id, "name": names.get(anime_id, "?"),
             "pred": round(pred, 2)}
            for rank, (anime_id, pred) in enumerate(rec.items, start=1)
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))
