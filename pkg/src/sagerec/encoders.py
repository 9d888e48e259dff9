"""CSV ingestion and node feature encoders.

Three encoders feed the graph: a multi-hot genre encoder, an identity
encoder for numeric columns, and a synopsis text embedding that comes
either from a precomputed embedding CSV or from a deterministic hashing
fallback. Anime features are the embedding concatenated with the genre
multi-hot; user features are one-hot identity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParseError, SchemaError, ShapeError, ValidationError
from .graph import IdMap, RATING_MAX, RATING_MIN

@dataclass(frozen=True)
class AnimeSchema:
    """Anime CSV column names; defaults match the Kaggle table (including
    its 'sypnopsis' spelling)."""

    id: str = "MAL_ID"
    name: str = "Name"
    genres: str = "Genres"
    synopsis: str = "sypnopsis"

    @property
    def required(self) -> tuple[str, ...]:
        return (self.id, self.name, self.genres, self.synopsis)


@dataclass(frozen=True)
class RatingSchema:
    user: str = "user_id"
    anime: str = "anime_id"
    rating: str = "rating"

    @property
    def required(self) -> tuple[str, ...]:
        return (self.user, self.anime, self.rating)


ANIME_COLUMNS = AnimeSchema().required
RATING_COLUMNS = RatingSchema().required

STOP_WORDS = frozenset(
    "a an and are as at be by for from has he in is it its of on that the to was were will with".split()
)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class CsvTable:
    columns: list[str]
    rows: list[dict[str, str]]


@dataclass(frozen=True)
class GenreVocab:
    """Distinct genre tokens in first-appearance order."""

    genres: list[str]
    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.genres)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    rows: dict[str, np.ndarray]


@dataclass(frozen=True)
class NodeTable:
    features: np.ndarray
    id_map: IdMap


def read_csv(path: str) -> CsvTable:
    """Load a UTF-8 CSV with a header row into a column/row table."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        rows = [dict(r) for r in reader]
    return CsvTable(columns=list(reader.fieldnames), rows=rows)


def clean_rows(table: CsvTable, required: tuple[str, ...]) -> tuple[CsvTable, int]:
    """Drop rows with an empty/null required field; return (table, drop count)."""
    for col in required:
        if col not in table.columns:
            raise SchemaError(f"required column {col!r} is missing (have {table.columns})")
    kept = []
    for row in table.rows:
        values = (row.get(col) for col in required)
        if any(v is None or v.strip() == "" for v in values):
            continue
        kept.append(row)
    return CsvTable(columns=table.columns, rows=kept), len(table.rows) - len(kept)


def build_genre_vocab(cells: list[str], sep: str = ",") -> GenreVocab:
    """Vocabulary of trimmed distinct genre tokens in first-appearance order."""
    genres: list[str] = []
    index: dict[str, int] = {}
    for cell in cells:
        for token in cell.split(sep):
            token = token.strip()
            if token and token not in index:
                index[token] = len(genres)
                genres.append(token)
    return GenreVocab(genres=genres, index=index)


def encode_genres(cell: str, vocab: GenreVocab, sep: str = ",") -> tuple[np.ndarray, int]:
    """Multi-hot vector over the vocabulary plus a count of unknown genres.

    Genres absent from the vocabulary are ignored, not errors: the count
    lets callers surface vocabulary drift as a warning.
    """
    vec = np.zeros(len(vocab), dtype=np.float64)
    unknown = 0
    for token in cell.split(sep):
        token = token.strip()
        if not token:
            continue
        idx = vocab.index.get(token)
        if idx is None:
            unknown += 1
        else:
            vec[idx] = 1.0
    return vec, unknown


def identity_encode(column: list) -> np.ndarray:
    """Parse a column of numerics into an n-by-1 matrix."""
    out = np.zeros((len(column), 1), dtype=np.float64)
    for i, cell in enumerate(column):
        try:
            out[i, 0] = float(cell)
        except (TypeError, ValueError):
            raise ParseError(f"row {i}: cannot parse {cell!r} as a number") from None
    return out


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _tokenize(text: str) -> list[str]:
    tokens = []
    current = []
    for ch in text.lower():
        if "a" <= ch <= "z" or "0" <= ch <= "9":
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return [t for t in tokens if t not in STOP_WORDS]


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic feature-hashing text embedding.

    Lowercase, split on any character outside [a-z0-9], drop stop words,
    then signed-hash each token into ``dim`` buckets with 64-bit FNV-1a
    (sign from the top hash bit) and L2-normalize. All-stop-word or empty
    text yields the zero vector.
    """
    if dim < 1:
        raise ShapeError(f"hash_embed needs dim >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in _tokenize(text):
        h = _fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % dim] += sign
    norm = float(np.sqrt((vec * vec).sum()))
    if norm > 0.0:
        vec /= norm
    return vec


def load_embedding_file(path: str, expected_ids: list[str],
                        allow_missing: bool = False) -> tuple[EmbeddingTable, int]:
    """Read an embedding CSV (header ``id,e0,...,e{D-1}``) keyed by anime id.

    Every expected id must be present unless ``allow_missing``, in which
    case absent ids map to zero vectors; returns (table, missing count).
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        dim = len(header) - 1
        expected_header = ["id"] + [f"e{i}" for i in range(dim)]
        if dim < 1 or header != expected_header:
            raise FormatError(f"{path} line 1: header must be id,e0,...,e{{D-1}}, got {header}")
        rows: dict[str, np.ndarray] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise FormatError(f"{path} line {lineno}: expected {dim + 1} fields, got {len(row)}")
            try:
                vec = np.array([float(v) for v in row[1:]], dtype=np.float64)
            except ValueError:
                raise FormatError(f"{path} line {lineno}: non-numeric embedding value") from None
            rows[row[0]] = vec

    missing = [ext for ext in expected_ids if ext not in rows]
    if missing and not allow_missing:
        shown = ", ".join(missing[:10])
        raise FormatError(
            f"{path}: {len(missing)} expected ids missing (first {min(10, len(missing))}: {shown})"
        )
    for ext in missing:
        rows[ext] = np.zeros(dim, dtype=np.float64)
    return EmbeddingTable(dim=dim, rows=rows), len(missing)


class HashingProvider:
    """Embeds each synopsis with hash_embed; the deterministic fallback."""

    def __init__(self, dim: int = 384):
        if dim < 1:
            raise ShapeError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim

    def vector(self, anime_id: str, synopsis: str) -> np.ndarray:
        return hash_embed(synopsis, self.dim)


class FileProvider:
    """Serves precomputed per-title embeddings from an EmbeddingTable."""

    def __init__(self, table: EmbeddingTable):
        self.dim = table.dim
        self._rows = table.rows

    def vector(self, anime_id: str, synopsis: str) -> np.ndarray:
        try:
            return self._rows[anime_id]
        except KeyError:
            raise ValidationError(f"no embedding for anime id {anime_id!r}") from None


def build_anime_features(table: CsvTable, vocab: GenreVocab, provider,
                         sep: str = ",",
                         schema: AnimeSchema = AnimeSchema()) -> tuple[NodeTable, int]:
    """Fuse [synopsis embedding || genre multi-hot] per anime row.

    Feature dim = provider.dim + |vocab|; the id map follows first-appearance
    row order. Returns the node table and the unknown-genre tally.
    """
    ids = [row[schema.id].strip() for row in table.rows]
    id_map = IdMap(ids)
    dim = provider.dim + len(vocab)
    features = np.zeros((len(ids), dim), dtype=np.float64)
    unknown_total = 0
    for i, row in enumerate(table.rows):
        emb = provider.vector(ids[i], row[schema.synopsis])
        if emb.shape != (provider.dim,):
            raise ShapeError(f"provider returned shape {emb.shape}, expected ({provider.dim},)")
        hot, unknown = encode_genres(row[schema.genres], vocab, sep=sep)
        unknown_total += unknown
        features[i, : provider.dim] = emb
        features[i, provider.dim:] = hot
    return NodeTable(features=features, id_map=id_map), unknown_total


def build_user_features(user_ids: list[str]) -> NodeTable:
    """One-hot identity features: n users -> n-by-n identity matrix."""
    if not user_ids:
        raise ValidationError("user id list is empty")
    id_map = IdMap(user_ids)  # raises on duplicates
    return NodeTable(features=np.eye(len(user_ids), dtype=np.float64), id_map=id_map)


def load_edge_table(table: CsvTable, user_ids: IdMap, anime_ids: IdMap,
                    weight_column: str | None = None,
                    schema: RatingSchema = RatingSchema(),
                    ) -> tuple[list[tuple[int, int]], list[float], list[float], int]:
    """Map rating rows to index edges with validated labels.

    Rows whose user or anime id is unknown are dropped and counted, not
    errors. Returns (edges, labels, weights, skipped). Weights default to
    1.0 unless ``weight_column`` names a positive numeric column.
    """
    edges: list[tuple[int, int]] = []
    labels: list[float] = []
    weights: list[float] = []
    skipped = 0
    for i, row in enumerate(table.rows):
        user = row[schema.user].strip()
        anime = row[schema.anime].strip()
        if user not in user_ids or anime not in anime_ids:
            skipped += 1
            continue
        raw = row[schema.rating]
        try:
            rating = float(raw)
        except (TypeError, ValueError):
            raise ParseError(f"row {i}: cannot parse rating {raw!r}") from None
        if not (RATING_MIN <= rating <= RATING_MAX):
            raise ValidationError(f"row {i}: rating {rating:g} outside [{RATING_MIN:g}, {RATING_MAX:g}]")
        if weight_column is not None:
            try:
                w = float(row[weight_column])
            except KeyError:
                raise SchemaError(f"weight column {weight_column!r} is missing") from None
            except (TypeError, ValueError):
                raise ParseError(f"row {i}: cannot parse weight {row[weight_column]!r}") from None
            if not w > 0:
                raise ValidationError(f"row {i}: weight {w:g} must be > 0")
        else:
            w = 1.0
        edges.append((user_ids.index(user), anime_ids.index(anime)))
        labels.append(rating)
        weights.append(w)
    return edges, labels, weights, skipped
