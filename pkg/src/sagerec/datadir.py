"""Versioned on-disk data directory written by `prepare`.

Layout:
    manifest.json   counts, dims, seed, vocab, id maps, split assignment
    user_x.mat      binary matrix: magic + u64 rows + u64 cols + f64 row-major (LE)
    anime_x.mat
    edges.csv       user_idx,anime_idx,rating,weight in original edge order

Writes are staged and renamed into place, so a failed prepare never leaves
a partial directory behind. Re-running prepare with identical inputs and
seed reproduces byte-identical contents (floats are serialized with
shortest round-trip repr; the manifest has no timestamps).
"""

from __future__ import annotations

import json
import os
import shutil
import struct

import numpy as np

from .errors import FormatError, ValidationError
from .graph import EdgeSplit, HeteroGraph, IdMap, build_graph

DATADIR_VERSION = 1
_MAT_MAGIC = b"SRMAT001"
_MAT_HEADER = struct.Struct("<8sQQ")


def write_matrix(path: str, m: np.ndarray) -> None:
    m = np.ascontiguousarray(m, dtype=np.float64)
    with open(path, "wb") as f:
        f.write(_MAT_HEADER.pack(_MAT_MAGIC, m.shape[0], m.shape[1]))
        f.write(m.astype("<f8").tobytes(order="C"))


def read_matrix(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_MAT_HEADER.size)
        if len(header) != _MAT_HEADER.size:
            raise FormatError(f"{path}: truncated matrix header")
        magic, rows, cols = _MAT_HEADER.unpack(header)
        if magic != _MAT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {_MAT_MAGIC!r}")
        data = f.read()
    expected = rows * cols * 8
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} data bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8").reshape(rows, cols).astype(np.float64)


def save_datadir(path: str, graph: HeteroGraph, split: EdgeSplit, weights: list[float],
                 manifest_extra: dict, force: bool = False) -> None:
    """Stage the full directory, then atomically move it into place."""
    if os.path.exists(path):
        if not force:
            raise ValidationError(f"output directory {path} already exists (use --force to replace)")
    staging = f"{path}.staging.{os.getpid()}"
    os.makedirs(staging)
    try:
        manifest = dict(manifest_extra)
        manifest["version"] = DATADIR_VERSION
        manifest["seed"] = split.seed
        manifest["ratio"] = split.ratio
        manifest["counts"] = {
            "users": graph.num_users,
            "anime": graph.num_anime,
            "edges": len(graph.edges),
            "train": len(split.train),
            "test": len(split.test),
        }
        manifest["user_ids"] = list(graph.user_ids.to_id)
        manifest["anime_ids"] = list(graph.anime_ids.to_id)
        manifest["split"] = {"train_index": list(split.train_index),
                             "test_index": list(split.test_index)}
        with open(os.path.join(staging, "manifest.json"), "w", encoding="utf-8") as f:
            f.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

        write_matrix(os.path.join(staging, "user_x.mat"), graph.user_x)
        write_matrix(os.path.join(staging, "anime_x.mat"), graph.anime_x)

        with open(os.path.join(staging, "edges.csv"), "w", newline="", encoding="utf-8") as f:
            f.write("user_idx,anime_idx,rating,weight\n")
            for (u, a), y, w in zip(graph.edges, graph.edge_label, weights):
                f.write(f"{u},{a},{y!r},{w!r}\n")

        if os.path.exists(path):
            shutil.rmtree(path)
        os.rename(staging, path)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise


def load_datadir(path: str) -> tuple[HeteroGraph, EdgeSplit, dict]:
    """Rebuild (graph, split, manifest); every stored count is revalidated."""
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise FormatError(f"{path}: not a data directory (no manifest.json)") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"{manifest_path}: invalid JSON ({e})") from None

    version = manifest.get("version")
    if version != DATADIR_VERSION:
        raise FormatError(f"{path}: data dir version {version!r}, supported {DATADIR_VERSION}")

    user_x = read_matrix(os.path.join(path, "user_x.mat"))
    anime_x = read_matrix(os.path.join(path, "anime_x.mat"))

    edges: list[tuple[int, int]] = []
    labels: list[float] = []
    weights: list[float] = []
    edges_path = os.path.join(path, "edges.csv")
    with open(edges_path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != "user_idx,anime_idx,rating,weight":
            raise FormatError(f"{edges_path}: unexpected header {header!r}")
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 4:
                raise FormatError(f"{edges_path} line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
                labels.append(float(parts[2]))
                weights.append(float(parts[3]))
            except ValueError:
                raise FormatError(f"{edges_path} line {lineno}: non-numeric field") from None

    counts = manifest.get("counts", {})
    checks = (
        ("users", user_x.shape[0]),
        ("anime", anime_x.shape[0]),
        ("edges", len(edges)),
    )
    for key, actual in checks:
        if counts.get(key) != actual:
            raise FormatError(f"{path}: manifest counts.{key}={counts.get(key)} but stored {actual}")

    try:
        user_ids = IdMap([str(x) for x in manifest["user_ids"]])
        anime_ids = IdMap([str(x) for x in manifest["anime_ids"]])
        train_index = [int(i) for i in manifest["split"]["train_index"]]
        test_index = [int(i) for i in manifest["split"]["test_index"]]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: malformed manifest ({e})") from None

    graph = build_graph(user_x, anime_x, edges, labels, user_ids, anime_ids)

    total = len(edges)
    seen = sorted(train_index + test_index)
    if seen != list(range(total)):
        raise FormatError(f"{path}: split indices do not partition the {total} edges")
    if counts.get("train") != len(train_index) or counts.get("test") != len(test_index):
        raise FormatError(f"{path}: manifest split counts disagree with split indices")

    def rows(idx: list[int]):
        return [(edges[i][0], edges[i][1], labels[i], weights[i]) for i in idx]

    split = EdgeSplit(train=rows(train_index), test=rows(test_index),
                      seed=int(manifest.get("seed", 0)), ratio=float(manifest.get("ratio", 0.8)),
                      train_index=train_index, test_index=test_index)
    return graph, split, manifest
