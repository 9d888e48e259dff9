"""Synopsis embedding exporter.

For every anime row: split the synopsis into sentences, embed each sentence
with a pretrained sentence-embedding model, mean-pool, optionally
L2-normalize, and write one row of the embedding CSV
(header ``id,e0,...,e{D-1}``). Rows with an empty synopsis get the zero
vector. Output rows follow input row order.

Any object with an ``encode(list[str]) -> (n, D) array`` method works as
the model; by default a SentenceTransformer is loaded lazily by name.
"""

from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass

import numpy as np

ID_COLUMN = "MAL_ID"
SYNOPSIS_COLUMN = "sypnopsis"  # matches the Kaggle table's spelling
DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"  # 384-wide

_SENTENCE_BREAK = re.compile(r"(?<=[.?!])\s+")


class ExportError(Exception):
    """Anything that should abort the export with a nonzero exit."""


@dataclass(frozen=True)
class ExportConfig:
    anime_csv: str
    output: str
    model_name: str = DEFAULT_MODEL
    normalize: bool = False
    batch_size: int = 32

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")


def split_sentences(text: str) -> list[str]:
    """Period/question/exclamation segmentation; empty pieces dropped."""
    return [part.strip() for part in _SENTENCE_BREAK.split(text) if part.strip()]


def load_model(name: str):
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as e:
        raise ExportError(f"sentence-transformers is not installed: {e}") from None
    try:
        return SentenceTransformer(name)
    except Exception as e:
        raise ExportError(f"could not load model {name!r}: {e}") from None


def _model_dim(model, sample: np.ndarray | None) -> int:
    probe = getattr(model, "get_sentence_embedding_dimension", None)
    if callable(probe):
        dim = probe()
        if dim:
            return int(dim)
    if sample is not None:
        return int(sample.shape[1])
    raise ExportError("cannot determine the model's embedding width")


def read_synopses(path: str) -> list[tuple[str, str]]:
    """(id, synopsis) per row, input order. Rows without an id are dropped;
    duplicate ids are an error (the output id column must be a bijection)."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise ExportError(f"{path}: empty file, no header row")
        for col in (ID_COLUMN, SYNOPSIS_COLUMN):
            if col not in reader.fieldnames:
                raise ExportError(f"{path}: required column {col!r} is missing")
        rows: list[tuple[str, str]] = []
        seen: set[str] = set()
        for row in reader:
            ext_id = (row.get(ID_COLUMN) or "").strip()
            if not ext_id:
                continue
            if ext_id in seen:
                raise ExportError(f"{path}: duplicate anime id {ext_id!r}")
            seen.add(ext_id)
            rows.append((ext_id, row.get(SYNOPSIS_COLUMN) or ""))
    if not rows:
        raise ExportError(f"{path}: no rows with an anime id")
    return rows


def embed_rows(rows: list[tuple[str, str]], model, batch_size: int,
               normalize: bool) -> np.ndarray:
    """Sentence-mean embedding per row; zero vectors for empty synopses."""
    sentences: list[str] = []
    spans: list[tuple[int, int]] = []  # sentence range per row
    for _, synopsis in rows:
        parts = split_sentences(synopsis)
        spans.append((len(sentences), len(sentences) + len(parts)))
        sentences.extend(parts)

    encoded = None
    if sentences:
        chunks = []
        for start in range(0, len(sentences), batch_size):
            out = np.asarray(model.encode(sentences[start:start + batch_size]),
                             dtype=np.float64)
            if out.ndim != 2:
                raise ExportError(f"model returned shape {out.shape}, expected (n, dim)")
            chunks.append(out)
        encoded = np.concatenate(chunks, axis=0)

    dim = _model_dim(model, encoded)
    vectors = np.zeros((len(rows), dim), dtype=np.float64)
    for i, (start, end) in enumerate(spans):
        if end > start:
            vectors[i] = encoded[start:end].mean(axis=0)
    if normalize:
        norms = np.sqrt((vectors * vectors).sum(axis=1, keepdims=True))
        nonzero = norms[:, 0] > 0.0
        vectors[nonzero] /= norms[nonzero]
    return vectors


def write_embedding_csv(path: str, rows: list[tuple[str, str]], vectors: np.ndarray) -> None:
    dim = vectors.shape[1]
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as f:
            f.write("id," + ",".join(f"e{i}" for i in range(dim)) + "\n")
            for (ext_id, _), vec in zip(rows, vectors):
                f.write(ext_id + "," + ",".join(repr(float(v)) for v in vec) + "\n")
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ExportError(f"cannot write {path}: {e}") from None


def export_embeddings(config: ExportConfig, model=None) -> int:
    """Run the full export; returns 0 on success and prints a summary."""
    config.validate()
    try:
        rows = read_synopses(config.anime_csv)
    except FileNotFoundError:
        raise ExportError(f"cannot read {config.anime_csv}: file not found") from None
    if model is None:
        model = load_model(config.model_name)
    vectors = embed_rows(rows, model, config.batch_size, config.normalize)
    write_embedding_csv(config.output, rows, vectors)
    empty = int((np.abs(vectors).sum(axis=1) == 0.0).sum())
    print(f"rows={len(rows)} dim={vectors.shape[1]} empty_synopses={empty} "
          f"normalize={str(config.normalize).lower()} out={config.output}")
    return 0
