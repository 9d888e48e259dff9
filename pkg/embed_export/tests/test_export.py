import csv
import math

import numpy as np
import pytest

from embed_export import ExportConfig, ExportError, export_embeddings, split_sentences
from embed_export import cli, exporter

# the round-trip half of the acceptance check loads through the consumer's
# public loader; the exporter package itself never imports it
from sagerec.encoders import clean_rows, load_embedding_file, read_csv


class StubEncoder:
    """Deterministic stand-in for a sentence-embedding model.

    Maps a sentence to letter-frequency counts over the first dim-1 letters
    plus a length feature, so distinct sentences get distinct, nonzero
    vectors without any model weights.
    """

    def __init__(self, dim=8):
        self.dim = dim

    def get_sentence_embedding_dimension(self):
        return self.dim

    def encode(self, sentences):
        out = np.zeros((len(sentences), self.dim))
        for i, text in enumerate(sentences):
            for ch in text.lower():
                idx = ord(ch) - ord("a")
                if 0 <= idx < self.dim - 1:
                    out[i, idx] += 1.0
            out[i, self.dim - 1] = float(len(text))
        return out


def write_anime_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["MAL_ID", "Name", "Genres", "sypnopsis"])
        writer.writeheader()
        writer.writerows(rows)


SAMPLE_ROWS = [
    {"MAL_ID": "1", "Name": "A", "Genres": "Action",
     "sypnopsis": "A hero rises. The city falls! Hope returns?"},
    {"MAL_ID": "2", "Name": "B", "Genres": "Comedy", "sypnopsis": "One single sentence"},
    {"MAL_ID": "3", "Name": "C", "Genres": "Drama", "sypnopsis": ""},
    {"MAL_ID": "4", "Name": "D", "Genres": "", "sypnopsis": "Quiet tale. Loud end."},
]


@pytest.fixture
def sample_csv(tmp_path):
    path = str(tmp_path / "anime.csv")
    write_anime_csv(path, SAMPLE_ROWS)
    return path


def run_export(sample_csv, tmp_path, normalize=False, batch_size=32, dim=8):
    out = str(tmp_path / "emb.csv")
    config = ExportConfig(anime_csv=sample_csv, output=out, normalize=normalize,
                          batch_size=batch_size)
    rc = export_embeddings(config, model=StubEncoder(dim=dim))
    assert rc == 0
    return out


class TestSplitSentences:
    def test_three_terminators(self):
        parts = split_sentences("A hero rises. The city falls! Hope returns?")
        assert parts == ["A hero rises.", "The city falls!", "Hope returns?"]

    def test_no_terminator_is_one_sentence(self):
        assert split_sentences("no punctuation here") == ["no punctuation here"]

    def test_empty(self):
        assert split_sentences("") == []
        assert split_sentences("   ") == []


class TestExport:
    def test_single_sentence_is_mean_of_one(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path)
        table, _ = load_embedding_file(out, ["2"])
        stub = StubEncoder(dim=8)
        expected = stub.encode(["One single sentence"])[0]
        assert np.allclose(table.rows["2"], expected, rtol=0, atol=1e-12)

    def test_empty_synopsis_zero_vector(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path)
        table, _ = load_embedding_file(out, ["3"])
        assert np.array_equal(table.rows["3"], np.zeros(8))

    def test_multi_sentence_mean(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path)
        table, _ = load_embedding_file(out, ["1"])
        stub = StubEncoder(dim=8)
        sentences = ["A hero rises.", "The city falls!", "Hope returns?"]
        expected = stub.encode(sentences).mean(axis=0)
        assert np.allclose(table.rows["1"], expected, rtol=0, atol=1e-12)

    def test_normalize_unit_rows(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path, normalize=True)
        table, _ = load_embedding_file(out, ["1", "2", "3", "4"])
        for ext, vec in table.rows.items():
            norm = math.sqrt(float((vec * vec).sum()))
            if norm > 0:
                assert abs(norm - 1.0) <= 1e-6
        assert np.array_equal(table.rows["3"], np.zeros(8))

    def test_batch_size_invariance(self, sample_csv, tmp_path):
        out1 = run_export(sample_csv, tmp_path, batch_size=1)
        data1 = open(out1, "rb").read()
        out2 = str(tmp_path / "emb2.csv")
        config = ExportConfig(anime_csv=sample_csv, output=out2, batch_size=64)
        assert export_embeddings(config, model=StubEncoder(dim=8)) == 0
        assert open(out2, "rb").read() == data1

    def test_header_and_width(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path, dim=5)
        lines = open(out, encoding="utf-8").read().splitlines()
        assert lines[0] == "id,e0,e1,e2,e3,e4"
        for line in lines[1:]:
            assert len(line.split(",")) == 6

    def test_row_order_preserved(self, sample_csv, tmp_path):
        out = run_export(sample_csv, tmp_path)
        ids = [line.split(",")[0] for line in open(out).read().splitlines()[1:]]
        assert ids == ["1", "2", "3", "4"]

    def test_duplicate_id_rejected(self, tmp_path):
        path = str(tmp_path / "anime.csv")
        write_anime_csv(path, [SAMPLE_ROWS[0], SAMPLE_ROWS[0]])
        config = ExportConfig(anime_csv=path, output=str(tmp_path / "e.csv"))
        with pytest.raises(ExportError, match="duplicate"):
            export_embeddings(config, model=StubEncoder())

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("MAL_ID,Name\n1,A\n", encoding="utf-8")
        config = ExportConfig(anime_csv=str(path), output=str(tmp_path / "e.csv"))
        with pytest.raises(ExportError, match="sypnopsis"):
            export_embeddings(config, model=StubEncoder())

    def test_bad_batch_size(self, sample_csv, tmp_path):
        config = ExportConfig(anime_csv=sample_csv, output=str(tmp_path / "e.csv"),
                              batch_size=0)
        with pytest.raises(ExportError, match="batch"):
            export_embeddings(config, model=StubEncoder())

    def test_missing_input_file(self, tmp_path):
        config = ExportConfig(anime_csv=str(tmp_path / "nope.csv"),
                              output=str(tmp_path / "e.csv"))
        with pytest.raises(ExportError, match="not found"):
            export_embeddings(config, model=StubEncoder())


class TestCli:
    def test_error_exit_code(self, tmp_path, capsys):
        rc = cli.main(["--anime", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "e.csv"),
                       "--model", "irrelevant"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_success_with_stubbed_loader(self, sample_csv, tmp_path, monkeypatch, capsys):
        monkeypatch.setattr(exporter, "load_model", lambda name: StubEncoder(dim=6))
        out = str(tmp_path / "e.csv")
        rc = cli.main(["--anime", sample_csv, "--out", out, "--normalize"])
        assert rc == 0
        assert "rows=4 dim=6" in capsys.readouterr().out
        table, _ = load_embedding_file(out, ["1", "2", "3", "4"])
        assert table.dim == 6


def test_acceptance_9_exporter_round_trip(sample_csv, tmp_path, capsys):
    """Exporter output loads via the consumer's load_embedding_file, has the
    model's advertised width, covers every cleaned anime id exactly once,
    and normalized nonzero rows are unit within 1e-6."""
    stub = StubEncoder(dim=8)
    out = str(tmp_path / "emb.csv")
    config = ExportConfig(anime_csv=sample_csv, output=out, normalize=True)
    assert export_embeddings(config, model=stub) == 0

    cleaned, _ = clean_rows(read_csv(sample_csv), ("MAL_ID", "Name", "Genres", "sypnopsis"))
    cleaned_ids = [row["MAL_ID"].strip() for row in cleaned.rows]
    table, missing = load_embedding_file(out, cleaned_ids)

    exported_ids = [line.split(",", 1)[0]
                    for line in open(out, encoding="utf-8").read().splitlines()[1:]]
    ok = (missing == 0
          and table.dim == stub.get_sentence_embedding_dimension()
          and len(exported_ids) == len(set(exported_ids))
          and set(cleaned_ids) <= set(exported_ids))
    for vec in table.rows.values():
        norm = math.sqrt(float((vec * vec).sum()))
        if norm > 0:
            ok = ok and abs(norm - 1.0) <= 1e-6
    with capsys.disabled():
        print(f"ACCEPTANCE 9 exporter-round-trip: {'PASS' if ok else 'FAIL'} "
              f"(dim={table.dim}, ids={len(exported_ids)})")
    assert ok


def test_exporter_output_feeds_prepare(tmp_path, capsys):
    """Full integration: exporter CSV drives sagerec prepare --embeddings."""
    from sagerec import synth
    from sagerec.cli import main as sagerec_main
    from sagerec.datadir import load_datadir

    data = synth.make_dataset(num_users=10, num_anime=15, num_edges=60, seed=3)
    anime, ratings = str(tmp_path / "anime.csv"), str(tmp_path / "ratings.csv")
    synth.write_anime_csv(anime, data)
    synth.write_ratings_csv(ratings, data)

    emb = str(tmp_path / "emb.csv")
    config = ExportConfig(anime_csv=anime, output=emb, normalize=True)
    assert export_embeddings(config, model=StubEncoder(dim=12)) == 0

    out = str(tmp_path / "datadir")
    rc = sagerec_main(["prepare", "--anime", anime, "--ratings", ratings,
                       "--out", out, "--embeddings", emb])
    assert rc == 0
    _, _, manifest = load_datadir(out)
    assert manifest["dims"]["embed_dim"] == 12


def test_real_model_if_available(sample_csv, tmp_path):
    """Runs only when pretrained weights can actually load (needs network)."""
    try:
        model = exporter.load_model(exporter.DEFAULT_MODEL)
    except ExportError as e:
        pytest.skip(f"pretrained model unavailable: {e}")
    out = str(tmp_path / "emb.csv")
    config = ExportConfig(anime_csv=sample_csv, output=out, normalize=True)
    assert export_embeddings(config, model=model) == 0
    table, _ = load_embedding_file(out, ["1", "2", "3", "4"])
    assert table.dim == model.get_sentence_embedding_dimension()
