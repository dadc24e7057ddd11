import math

import numpy as np
import pytest

from hegel.corpus import validate
from hegel.embed import (ENCODER_DIM, PositionalConfig, hash_bucket,
                         hierarchical_offsets, initial_node_reps,
                         load_embeddings, positional_encoding,
                         save_embeddings, tfidf_embed)
from hegel.errors import ConfigError, FormatError


def make_doc(n_per_section=(3, 2), doc_id="e1"):
    sections = [[f"sentence {i} of part {j} with shared words"
                 for i in range(k)] for j, k in enumerate(n_per_section)]
    return validate({
        "article_id": doc_id,
        "sections": sections,
        "section_names": [f"sec{j}" for j in range(len(sections))],
        "abstract_text": ["shared words summary"],
    })


class TestPositionalEncoding:
    def test_matches_direct_formula(self):
        d = 8
        out = positional_encoding([0, 1, 7], d)
        for row, pos in enumerate((0, 1, 7)):
            for i in range(d // 2):
                angle = pos / (10000 ** (2 * i / d))
                assert out[row, 2 * i] == pytest.approx(math.sin(angle), abs=1e-12)
                assert out[row, 2 * i + 1] == pytest.approx(math.cos(angle), abs=1e-12)

    def test_position_zero_alternates_zero_one(self):
        out = positional_encoding([0], 6)[0]
        np.testing.assert_allclose(out[0::2], 0.0)
        np.testing.assert_allclose(out[1::2], 1.0)

    def test_odd_dimension_is_config_error(self):
        with pytest.raises(ConfigError):
            positional_encoding([0], 7)
        with pytest.raises(ConfigError):
            positional_encoding([0], 0)

    def test_rows_bounded_by_one(self):
        out = positional_encoding(range(200), 32)
        assert np.abs(out).max() <= 1.0 + 1e-12


class TestHierarchicalOffsets:
    def test_combines_both_positions_with_weights(self):
        cfg = PositionalConfig(gamma1=0.25, gamma2=0.5)
        got = hierarchical_offsets([2], [3], 8, cfg)
        expected = (0.25 * positional_encoding([2], 8)
                    + 0.5 * positional_encoding([3], 8))
        np.testing.assert_allclose(got, expected, atol=1e-15)

    def test_default_weights_are_small(self):
        cfg = PositionalConfig()
        assert cfg.gamma1 == pytest.approx(0.001)
        assert cfg.gamma2 == pytest.approx(0.001)

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigError):
            PositionalConfig(gamma1=-0.1)

    def test_initial_reps_add_offsets_rowwise(self):
        doc = make_doc((3, 2))
        X = np.zeros((5, 16), dtype=np.float32)
        reps = initial_node_reps(X, doc)
        sec_idx, sen_idx = doc.positions()
        expected = hierarchical_offsets(sec_idx, sen_idx, 16).astype(np.float32)
        np.testing.assert_allclose(reps, expected, atol=1e-7)
        assert reps.dtype == np.float32

    def test_row_count_mismatch_rejected(self):
        doc = make_doc((3, 2))
        with pytest.raises(ConfigError):
            initial_node_reps(np.zeros((4, 16), dtype=np.float32), doc)


class TestTfidfEmbed:
    def test_shape_norm_and_determinism(self):
        doc = make_doc((4, 3))
        X1 = tfidf_embed(doc, d=64, seed=3)
        X2 = tfidf_embed(doc, d=64, seed=3)
        assert X1.shape == (7, 64)
        assert X1.dtype == np.float32
        np.testing.assert_array_equal(X1, X2)
        norms = np.linalg.norm(X1, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_seed_changes_buckets(self):
        doc = make_doc((4, 3))
        assert not np.array_equal(tfidf_embed(doc, d=64, seed=1),
                                  tfidf_embed(doc, d=64, seed=2))

    def test_small_dimension_rejected(self):
        with pytest.raises(ConfigError):
            tfidf_embed(make_doc(), d=8)

    def test_rare_token_weighs_more_than_common(self):
        doc = validate({
            "article_id": "w",
            "sections": [["alpha beta", "alpha gamma", "alpha delta"]],
            "section_names": ["s"],
            "abstract_text": ["x"],
        })
        X = tfidf_embed(doc, d=512, seed=0)
        alpha_b = hash_bucket("alpha", 512, 0)
        beta_b = hash_bucket("beta", 512, 0)
        assert X[0, beta_b] > X[0, alpha_b] > 0

    def test_hash_bucket_stable_across_calls(self):
        assert hash_bucket("protein", 768, 5) == hash_bucket("protein", 768, 5)
        assert 0 <= hash_bucket("protein", 768, 5) < 768


class TestInterchangeFormat:
    def test_round_trip_and_size_formula(self, tmp_path):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(9, ENCODER_DIM)).astype(np.float32)
        path = tmp_path / "doc.emb"
        save_embeddings(path, X)
        assert path.stat().st_size == 14 + 4 * 9 * ENCODER_DIM
        back = load_embeddings(path)
        np.testing.assert_array_equal(back, X)

    def test_expected_n_checked(self, tmp_path):
        path = tmp_path / "doc.emb"
        save_embeddings(path, np.ones((3, 32), dtype=np.float32))
        assert load_embeddings(path, expected_n=3).shape == (3, 32)
        with pytest.raises(FormatError, match="'n'"):
            load_embeddings(path, expected_n=4)

    def test_bad_magic_names_field(self, tmp_path):
        path = tmp_path / "doc.emb"
        path.write_bytes(b"WRONG!" + b"\x00" * 20)
        with pytest.raises(FormatError, match="magic"):
            load_embeddings(path)

    def test_truncated_payload_names_field(self, tmp_path):
        path = tmp_path / "doc.emb"
        save_embeddings(path, np.ones((4, 16), dtype=np.float32))
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FormatError, match="data"):
            load_embeddings(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "doc.emb"
        save_embeddings(path, np.ones((2, 16), dtype=np.float32))
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FormatError, match="trailing"):
            load_embeddings(path)

    def test_zero_rows_rejected(self, tmp_path):
        import struct

        path = tmp_path / "doc.emb"
        path.write_bytes(b"HGEMB1" + struct.pack("<II", 0, 16))
        with pytest.raises(FormatError, match="positive"):
            load_embeddings(path)
