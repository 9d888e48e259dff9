import numpy as np
import pytest

from sagerec.graph import IdMap, build_graph
from sagerec.numkit import Rng


def make_toy_graph(num_users=20, num_anime=30, num_edges=100, seed=5):
    """Identity features on both sides, distinct random edges, integer ratings."""
    rng = Rng(seed)
    chosen, edges = set(), []
    while len(edges) < num_edges:
        pair = (rng.below(num_users), rng.below(num_anime))
        if pair not in chosen:
            chosen.add(pair)
            edges.append(pair)
    labels = [float(1 + rng.below(10)) for _ in edges]
    return build_graph(
        np.eye(num_users), np.eye(num_anime), edges, labels,
        IdMap([f"u{i}" for i in range(num_users)]),
        IdMap([f"a{i}" for i in range(num_anime)]),
    )


def all_train_split(graph, seed=0):
    """Every labeled edge in the train partition (for overfit fixtures)."""
    rows = [(u, a, y, 1.0) for (u, a), y in zip(graph.edges, graph.edge_label)]
    from sagerec.graph import EdgeSplit
    return EdgeSplit(train=rows, test=[], seed=seed, ratio=0.8,
                     train_index=list(range(len(rows))), test_index=[])


@pytest.fixture(scope="session")
def synth_csvs(tmp_path_factory):
    """Default synthetic dataset written once per session."""
    from sagerec import synth
    d = tmp_path_factory.mktemp("synth")
    data = synth.make_dataset(seed=7)
    anime = d / "anime.csv"
    ratings = d / "ratings.csv"
    synth.write_anime_csv(str(anime), data)
    synth.write_ratings_csv(str(ratings), data)
    return {"anime": str(anime), "ratings": str(ratings), "data": data}
