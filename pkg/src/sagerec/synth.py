"""Synthetic genre-affinity dataset generator for fixtures and benchmarks.

Each user gets a per-genre affinity vector in [0, 1]; each anime gets 1-3
genres and a synopsis built from its genre words (so the hashing embedding
carries genre signal). A rating is

    clamp(3 + 6 * dot(affinity, genre_indicator / genre_count) + noise, 1, 10)

i.e. the genre-affinity dot product against the count-normalized genre
indicator, plus Gaussian noise. Everything is drawn from one seeded Rng,
so a given seed always produces the same CSV bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .numkit import Rng

GENRE_POOL = (
    "Action", "Comedy", "Drama", "Fantasy", "Horror", "Mystery",
    "Romance", "SciFi", "Sports", "Thriller", "Adventure", "Slice",
)


@dataclass(frozen=True)
class SynthData:
    anime_rows: list[dict[str, str]]   # MAL_ID, Name, Genres, sypnopsis
    rating_rows: list[dict[str, str]]  # user_id, anime_id, rating
    num_genres: int


def make_dataset(num_users: int = 200, num_anime: int = 300, num_edges: int = 5000,
                 num_genres: int = 4, seed: int = 7, noise_sigma: float = 0.5) -> SynthData:
    if num_genres > len(GENRE_POOL):
        raise ValueError(f"at most {len(GENRE_POOL)} genres available, asked for {num_genres}")
    if num_edges > num_users * num_anime:
        raise ValueError(f"cannot place {num_edges} distinct edges in {num_users}x{num_anime} pairs")
    rng = Rng(seed)
    genres = GENRE_POOL[:num_genres]

    affinity = [[rng.uniform() for _ in range(num_genres)] for _ in range(num_users)]

    anime_genres: list[list[int]] = []
    anime_rows: list[dict[str, str]] = []
    for i in range(num_anime):
        count = 1 + rng.below(3)
        picked: list[int] = []
        while len(picked) < count:
            g = rng.below(num_genres)
            if g not in picked:
                picked.append(g)
        anime_genres.append(picked)
        words = [genres[g].lower() for g in picked]
        synopsis = " ".join(words * 3) + f" chronicle episode{i % 11} volume{i}"
        anime_rows.append({
            "MAL_ID": str(1000 + i),
            "Name": f"Synth Anime {i}",
            "Genres": ", ".join(genres[g] for g in picked),
            "sypnopsis": synopsis,
        })

    chosen: set[tuple[int, int]] = set()
    rating_rows: list[dict[str, str]] = []
    while len(rating_rows) < num_edges:
        u = rng.below(num_users)
        a = rng.below(num_anime)
        if (u, a) in chosen:
            continue
        chosen.add((u, a))
        picked = anime_genres[a]
        signal = sum(affinity[u][g] for g in picked) / len(picked)
        rating = 3.0 + 6.0 * signal + noise_sigma * rng.normal()
        rating = min(10.0, max(1.0, rating))
        rating_rows.append({
            "user_id": str(u + 1),
            "anime_id": str(1000 + a),
            "rating": repr(rating),
        })
    return SynthData(anime_rows=anime_rows, rating_rows=rating_rows, num_genres=num_genres)


def write_anime_csv(path: str, data: SynthData) -> None:
    _write_csv(path, ["MAL_ID", "Name", "Genres", "sypnopsis"], data.anime_rows)


def write_ratings_csv(path: str, data: SynthData) -> None:
    _write_csv(path, ["user_id", "anime_id", "rating"], data.rating_rows)


def _write_csv(path: str, columns: list[str], rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
