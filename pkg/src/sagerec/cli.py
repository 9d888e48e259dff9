"""Operator surface: prepare, train, evaluate, recommend, gradcheck.

Exit codes: 0 success, 1 validation/argument, 2 data/format, 3 numerical
divergence or failed self-check. Human-readable output goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .datadir import load_datadir, save_datadir
from .encoders import (
    AnimeSchema,
    FileProvider,
    HashingProvider,
    RatingSchema,
    build_anime_features,
    build_genre_vocab,
    build_user_features,
    clean_rows,
    load_edge_table,
    load_embedding_file,
    read_csv,
)
from .errors import ConfigError, DataError, SageRecError, ValidationError, exit_code
from .gnn import ModelConfig, load_model, save_model
from .gradcheck import DEFAULT_TOL, gradient_check
from .graph import build_graph, id_sort_key, split_edges
from .recsys import format_jsonl, format_text, recommend_topk
from .train import TrainConfig, baseline_global_mean, evaluate, train


class _ArgumentError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    # route argparse failures through the exit-code contract (1, not 2)
    def error(self, message):
        raise _ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sagerec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build a data directory from anime + ratings CSVs")
    p.add_argument("--anime", required=True, help="anime CSV (MAL_ID, Name, Genres, sypnopsis)")
    p.add_argument("--ratings", required=True, help="ratings CSV (user_id, anime_id, rating)")
    p.add_argument("--out", required=True, help="output data directory")
    p.add_argument("--embeddings", help="precomputed embedding CSV (id,e0,...); default is hashing")
    p.add_argument("--hash-dim", type=int, default=384, help="hashing embedding width (default 384)")
    p.add_argument("--allow-missing", action="store_true",
                   help="zero-fill anime ids absent from the embedding file")
    p.add_argument("--max-users", type=int, default=None,
                   help="keep only the first N distinct user ids in file order")
    p.add_argument("--ratio", type=float, default=0.8, help="train fraction (default 0.8)")
    p.add_argument("--seed", type=int, default=0, help="split shuffle seed")
    p.add_argument("--genre-sep", default=",", help="genre list separator (default ',')")
    p.add_argument("--anime-columns", default=",".join(AnimeSchema().required),
                   help="id,name,genres,synopsis column names in the anime CSV")
    p.add_argument("--rating-columns", default=",".join(RatingSchema().required),
                   help="user,anime,rating column names in the ratings CSV")
    p.add_argument("--weight-column", default=None, help="ratings column holding per-edge weights")
    p.add_argument("--dedup", action="store_true",
                   help="drop repeated (user, anime) pairs, keeping the first")
    p.add_argument("--force", action="store_true", help="replace an existing output directory")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model on a prepared data directory")
    p.add_argument("--data", required=True, help="data directory from prepare")
    p.add_argument("--out", required=True, help="output model file (JSON)")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aggr", choices=("sum", "mean", "max"), default="sum")
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True,
                   help="L2-normalize rows after layer 1")
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="print metrics for one split plus the global-mean baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--clamp", action="store_true", help="clamp predictions to [1,10] for RMSE too")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("recommend", help="top-k unwatched anime for one user")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--user", required=True, help="external user id")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward pass")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--users", type=int, default=6)
    p.add_argument("--anime", type=int, default=8)
    p.add_argument("--edges", type=int, default=20)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def _schema_from(flag: str, names: str, fields: int):
    parts = [p.strip() for p in names.split(",")]
    if len(parts) != fields or not all(parts):
        raise _ArgumentError(f"{flag} needs {fields} comma-separated column names, got {names!r}")
    return parts


def cmd_prepare(args) -> int:
    anime_schema = AnimeSchema(*_schema_from("--anime-columns", args.anime_columns, 4))
    rating_schema = RatingSchema(*_schema_from("--rating-columns", args.rating_columns, 3))
    anime_raw = read_csv(args.anime)
    ratings_raw = read_csv(args.ratings)

    rating_required = rating_schema.required if args.weight_column is None \
        else rating_schema.required + (args.weight_column,)
    anime_table, anime_drops = clean_rows(anime_raw, anime_schema.required)
    ratings_table, rating_drops = clean_rows(ratings_raw, rating_required)
    if not anime_table.rows:
        raise DataError(f"{args.anime}: no usable anime rows after cleaning")
    if not ratings_table.rows:
        raise DataError(f"{args.ratings}: no usable rating rows after cleaning")

    # --max-users selects by first appearance in file order; row indices are
    # then assigned over the *sorted* ids so they do not depend on CSV order
    seen: list[str] = []
    seen_set: set[str] = set()
    for row in ratings_table.rows:
        uid = row[rating_schema.user].strip()
        if uid not in seen_set:
            seen_set.add(uid)
            seen.append(uid)
    selected = seen if args.max_users is None else seen[: args.max_users]
    if not selected:
        raise DataError(f"{args.ratings}: no users selected")
    user_list = sorted(selected, key=id_sort_key)
    users = build_user_features(user_list)

    vocab = build_genre_vocab([row[anime_schema.genres] for row in anime_table.rows],
                              sep=args.genre_sep)

    missing_embeddings = 0
    if args.embeddings:
        expected = [row[anime_schema.id].strip() for row in anime_table.rows]
        table, missing_embeddings = load_embedding_file(args.embeddings, expected,
                                                        allow_missing=args.allow_missing)
        provider = FileProvider(table)
        provider_desc = {"kind": "file", "path": args.embeddings, "dim": provider.dim,
                         "allow_missing": bool(args.allow_missing)}
    else:
        provider = HashingProvider(dim=args.hash_dim)
        provider_desc = {"kind": "hash", "dim": provider.dim}

    anime_nodes, unknown_genres = build_anime_features(anime_table, vocab, provider,
                                                       sep=args.genre_sep, schema=anime_schema)
    edges, labels, weights, skipped = load_edge_table(ratings_table, users.id_map,
                                                      anime_nodes.id_map,
                                                      weight_column=args.weight_column,
                                                      schema=rating_schema)

    dedup_dropped = 0
    if args.dedup:
        kept_pairs: set[tuple[int, int]] = set()
        deduped = []
        for edge, y, w in zip(edges, labels, weights):
            if edge in kept_pairs:
                dedup_dropped += 1
                continue
            kept_pairs.add(edge)
            deduped.append((edge, y, w))
        edges = [e for e, _, _ in deduped]
        labels = [y for _, y, _ in deduped]
        weights = [w for _, _, w in deduped]

    if not edges:
        raise DataError("no edges left after id mapping; nothing to train on")

    graph = build_graph(users.features, anime_nodes.features, edges, labels,
                        users.id_map, anime_nodes.id_map)
    split = split_edges(graph, ratio=args.ratio, seed=args.seed, weights=weights)

    manifest = {
        "dims": {
            "user_dim": users.features.shape[1],
            "anime_dim": anime_nodes.features.shape[1],
            "embed_dim": provider.dim,
            "genre_dim": len(vocab),
        },
        "genre_vocab": list(vocab.genres),
        "anime_names": {row[anime_schema.id].strip(): row[anime_schema.name]
                        for row in anime_table.rows},
        "provider": provider_desc,
        "stats": {
            "dropped_anime_rows": anime_drops,
            "dropped_rating_rows": rating_drops,
            "skipped_edges": skipped,
            "unknown_genres": unknown_genres,
            "dedup_dropped": dedup_dropped,
            "missing_embeddings": missing_embeddings,
        },
        "flags": {
            "genre_sep": args.genre_sep,
            "anime_columns": list(anime_schema.required),
            "rating_columns": list(rating_schema.required),
            "max_users": args.max_users,
            "weight_column": args.weight_column,
            "dedup": bool(args.dedup),
        },
    }
    save_datadir(args.out, graph, split, weights, manifest, force=args.force)

    print(f"users={graph.num_users} anime={graph.num_anime} edges={len(graph.edges)} "
          f"train={len(split.train)} test={len(split.test)}")
    print(f"user_dim={users.features.shape[1]} anime_dim={anime_nodes.features.shape[1]} "
          f"embed_dim={provider.dim} genre_dim={len(vocab)}")
    print(f"dropped_anime_rows={anime_drops} dropped_rating_rows={rating_drops} "
          f"skipped_edges={skipped} unknown_genres={unknown_genres} "
          f"dedup_dropped={dedup_dropped} missing_embeddings={missing_embeddings}")
    return 0


def _model_config_from(manifest: dict, hidden: int, aggr: str, normalize: bool) -> ModelConfig:
    dims = manifest["dims"]
    return ModelConfig(hidden=hidden, aggr=aggr, normalize=normalize,
                       embed_dim=int(dims["embed_dim"]), genre_dim=int(dims["genre_dim"]),
                       num_users=int(dims["user_dim"]))


def _check_model_dims(config: ModelConfig, manifest: dict) -> None:
    dims = manifest["dims"]
    model_dims = (config.num_users, config.embed_dim, config.genre_dim)
    data_dims = (int(dims["user_dim"]), int(dims["embed_dim"]), int(dims["genre_dim"]))
    if model_dims != data_dims:
        raise ValidationError(
            f"model dims (num_users, embed_dim, genre_dim)={model_dims} do not match "
            f"data dims {data_dims}"
        )


def cmd_train(args) -> int:
    graph, split, manifest = load_datadir(args.data)
    model_config = _model_config_from(manifest, args.hidden, args.aggr, args.normalize)
    train_config = TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed,
                               hidden=args.hidden, log_every=args.log_every)
    params, _history = train(graph, split, model_config, train_config)
    save_model(params, model_config, args.out)
    m = evaluate(params, model_config, graph, split, part="train")
    print(f"final split=train rmse={m.rmse:.6f} weighted_rmse={m.weighted_rmse:.6f} "
          f"accuracy={m.accuracy:.6f} loss={m.loss:.6f} n={m.n}")
    print(f"model={args.out}")
    return 0


def cmd_evaluate(args) -> int:
    graph, split, manifest = load_datadir(args.data)
    params, model_config = load_model(args.model)
    _check_model_dims(model_config, manifest)
    m = evaluate(params, model_config, graph, split, part=args.split, clamp_eval=args.clamp)
    b = baseline_global_mean(split, part=args.split, clamp_eval=args.clamp)
    print(f"split={args.split} rmse={m.rmse:.6f} weighted_rmse={m.weighted_rmse:.6f} "
          f"accuracy={m.accuracy:.6f} n={m.n}")
    print(f"split={args.split} baseline=global_mean rmse={b.rmse:.6f} "
          f"weighted_rmse={b.weighted_rmse:.6f} accuracy={b.accuracy:.6f} n={b.n}")
    return 0


def cmd_recommend(args) -> int:
    graph, split, manifest = load_datadir(args.data)
    params, model_config = load_model(args.model)
    _check_model_dims(model_config, manifest)
    rec = recommend_topk(params, model_config, graph, args.user, k=args.k)
    names = {str(k): str(v) for k, v in manifest.get("anime_names", {}).items()}
    if args.format == "jsonl":
        print(format_jsonl(rec, names))
    else:
        for line in format_text(rec, names):
            print(line)
    return 0


def cmd_gradcheck(args) -> int:
    if args.hidden < 1:
        raise ConfigError(f"hidden must be >= 1, got {args.hidden}")
    report = gradient_check(seed=args.seed, num_users=args.users, num_anime=args.anime,
                            num_edges=args.edges, hidden=args.hidden)
    status = "pass" if report.passed(args.tol) else "fail"
    print(f"max_rel_err={report.max_rel_err:.6e} worst={report.worst_param} "
          f"entries={report.n_entries} tol={args.tol:g} status={status}")
    if status == "fail":
        print(f"gradcheck failed: {report.worst_param} relative error "
              f"{report.max_rel_err:.6e} > {args.tol:g}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SageRecError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code(e)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
