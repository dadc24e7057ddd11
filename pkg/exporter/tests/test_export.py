import json
import struct

import numpy as np
import pytest

from embed_export.cli import main
from embed_export.export import (DEFAULT_MODEL, DIM, ExportError, ExportJob,
                                 export_embeddings, load_encoder,
                                 write_embeddings)
from hegel.corpus import load_jsonl
from hegel.embed import load_embeddings


def stub_encoder(sentences, batch_size):
    rows = []
    for s in sentences:
        rng = np.random.default_rng(len(s) * 2654435761 % (2 ** 31))
        rows.append(rng.normal(size=DIM).astype(np.float32))
    return np.stack(rows)


def write_docs(path, n_docs: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n_docs):
            doc = {
                "article_id": f"doc{i:02d}",
                "sections": [
                    [f"sentence {j} of document {i} body" for j in range(2 + i)],
                    ["tail line one", ""],  # empty sentence gets cleaned away
                ],
                "section_names": ["body", "tail"],
                "abstract_text": ["<S> summary of the findings </S>"],
            }
            fh.write(json.dumps(doc) + "\n")


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    root = tmp_path_factory.mktemp("export")
    corpus = root / "docs.jsonl"
    write_docs(corpus, 10)
    out = root / "emb"
    job = ExportJob(input_path=str(corpus), out_dir=str(out))
    manifest = export_embeddings(job, encoder=stub_encoder)
    return {"corpus": corpus, "out": out, "manifest": manifest}


class TestRoundTrip:
    def test_core_loader_accepts_every_file(self, exported):
        docs = load_jsonl(exported["corpus"]).documents
        assert len(docs) == 10
        for doc in docs:
            path = exported["out"] / f"{doc.id}.emb"
            X = load_embeddings(path, expected_n=doc.n_sentences)
            assert X.shape == (doc.n_sentences, DIM)
            assert X.dtype == np.float32

    def test_byte_size_formula(self, exported):
        docs = load_jsonl(exported["corpus"]).documents
        for doc in docs:
            path = exported["out"] / f"{doc.id}.emb"
            assert path.stat().st_size == 14 + 4 * doc.n_sentences * DIM

    def test_header_counts_match_core_parse(self, exported):
        # Independent header read: magic, then two little-endian u32 fields.
        docs = load_jsonl(exported["corpus"]).documents
        for doc in docs:
            raw = (exported["out"] / f"{doc.id}.emb").read_bytes()
            assert raw[:6] == b"HGEMB1"
            n, d = struct.unpack("<II", raw[6:14])
            assert (n, d) == (doc.n_sentences, DIM)

    def test_values_survive_the_trip(self, exported):
        docs = load_jsonl(exported["corpus"]).documents
        doc = docs[3]
        want = stub_encoder(list(doc.sentences), 32)
        got = load_embeddings(exported["out"] / f"{doc.id}.emb")
        np.testing.assert_array_equal(got, want)


class TestManifest:
    def test_entries_cover_documents(self, exported):
        manifest = json.loads((exported["out"] / "manifest.json").read_text())
        assert manifest["dim"] == DIM
        assert len(manifest["documents"]) == 10
        entry = manifest["documents"]["doc04"]
        assert entry["n"] == 6 + 1  # 6 body sentences + 1 surviving tail line
        assert entry["bytes"] == 14 + 4 * entry["n"] * DIM

    def test_reexport_is_identical(self, exported, tmp_path):
        job = ExportJob(input_path=str(exported["corpus"]),
                        out_dir=str(tmp_path / "again"))
        again = export_embeddings(job, encoder=stub_encoder)
        assert again["documents"] == exported["manifest"]["documents"]

    def test_no_temp_files_left_behind(self, exported):
        assert list(exported["out"].glob("*.tmp")) == []


class TestCleaningParity:
    def test_long_document_capped_like_the_core(self, tmp_path):
        corpus = tmp_path / "long.jsonl"
        doc = {
            "article_id": "long01",
            "sections": [[f"filler sentence number {j}" for j in range(650)]],
            "section_names": ["body"],
            "abstract_text": ["<S> short summary </S>"],
        }
        corpus.write_text(json.dumps(doc) + "\n")
        core_n = load_jsonl(corpus).documents[0].n_sentences
        out = tmp_path / "emb"
        export_embeddings(ExportJob(input_path=str(corpus), out_dir=str(out)),
                          encoder=stub_encoder)
        X = load_embeddings(out / "long01.emb")
        assert X.shape == (core_n, DIM)


class TestFailureModes:
    def test_wrong_width_encoder_rejected(self, tmp_path):
        corpus = tmp_path / "docs.jsonl"
        write_docs(corpus, 2)

        def narrow(sentences, batch_size):
            return np.zeros((len(sentences), 64), dtype=np.float32)

        with pytest.raises(ExportError, match="expected"):
            export_embeddings(
                ExportJob(input_path=str(corpus), out_dir=str(tmp_path / "o")),
                encoder=narrow)

    def test_bad_batch_size_rejected(self):
        with pytest.raises(ExportError, match="batch size"):
            ExportJob(input_path="x", out_dir="y", batch_size=0)

    def test_one_d_matrix_rejected(self, tmp_path):
        with pytest.raises(ExportError, match="2-D"):
            write_embeddings(tmp_path / "bad.emb",
                             np.zeros(5, dtype=np.float32))

    def test_empty_corpus_is_export_error(self, tmp_path):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("")
        with pytest.raises(ExportError, match="no usable documents"):
            export_embeddings(
                ExportJob(input_path=str(corpus), out_dir=str(tmp_path / "o")),
                encoder=stub_encoder)

    def test_cli_missing_model_fails_cleanly(self, tmp_path, monkeypatch,
                                             capsys):
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")
        monkeypatch.setenv("TRANSFORMERS_OFFLINE", "1")
        corpus = tmp_path / "docs.jsonl"
        write_docs(corpus, 1)
        rc = main(["--input", str(corpus), "--out", str(tmp_path / "o"),
                   "--model", "no-such-org/no-such-model"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_cli_missing_corpus_is_exit_two(self, tmp_path, capsys):
        rc = main(["--input", str(tmp_path / "nope.jsonl"),
                   "--out", str(tmp_path / "o")])
        assert rc == 2


class TestLiveEncoder:
    def test_cached_model_round_trip(self, tmp_path, monkeypatch):
        # Offline on purpose: runs only where the model weights are already
        # cached, and never tries the network.
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")
        monkeypatch.setenv("TRANSFORMERS_OFFLINE", "1")
        try:
            encoder = load_encoder(DEFAULT_MODEL)
        except ExportError as exc:
            pytest.skip(f"encoder not cached locally: {exc}")
        corpus = tmp_path / "docs.jsonl"
        write_docs(corpus, 2)
        out = tmp_path / "emb"
        export_embeddings(ExportJob(input_path=str(corpus), out_dir=str(out),
                                    batch_size=8),
                          encoder=encoder)
        docs = load_jsonl(corpus).documents
        for doc in docs:
            X = load_embeddings(out / f"{doc.id}.emb",
                                expected_n=doc.n_sentences)
            assert X.shape == (doc.n_sentences, DIM)
            assert np.isfinite(X).all()
