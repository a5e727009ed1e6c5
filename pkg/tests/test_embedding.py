from __future__ import annotations

import hashlib
import math
import unicodedata

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptmt.embedding import (
    Embedding,
    HashEmbedder,
    cosine,
    hash_text,
)
from adaptmt.errors import DimensionMismatch, EmptyInput, ZeroVector


def oracle_hash_vector(text: str, dim: int) -> np.ndarray:
    """Independent re-implementation of the documented hashing scheme:
    NFC + lowercase, STX/ETX boundary padding, char 3-grams, blake2b-8
    with the fixed key, bucket by little-endian value, L2 normalize."""
    key = (0x9E3779B97F4A7C15).to_bytes(8, "little")
    padded = "\x02" + unicodedata.normalize("NFC", text).lower() + "\x03"
    counts = [0.0] * dim
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3].encode("utf-8")
        value = int.from_bytes(hashlib.blake2b(gram, digest_size=8, key=key).digest(), "little")
        counts[value % dim] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    return np.array([c / norm for c in counts], dtype=np.float64)


class TestHashEmbedder:
    def test_same_text_same_vector(self):
        a, b = HashEmbedder(dim=64).embed_batch(["a", "a"])
        assert a == b

    def test_empty_text_rejected(self):
        with pytest.raises(EmptyInput):
            HashEmbedder().embed_batch([""])

    def test_matches_independent_oracle(self):
        for text in ["abc", "hello world", "Fiebre alta", "发烧", "ABC"]:
            expected = oracle_hash_vector(text, 384)
            actual = hash_text(text, 384)
            assert np.array_equal(actual, expected), text

    def test_case_and_nfc_insensitive(self):
        decomposed = "état"  # e + combining acute
        composed = "état"
        assert np.array_equal(hash_text(decomposed, 64), hash_text(composed, 64))
        assert np.array_equal(hash_text("ABC", 64), hash_text("abc", 64))

    def test_unit_norm(self):
        (v,) = HashEmbedder().embed_batch(["some sentence"])
        assert abs(v.norm - 1.0) <= 1e-6

    def test_similar_strings_are_closer(self):
        e = HashEmbedder()
        base, near, far = e.embed_batch(
            ["the patient has a fever", "the patient has a high fever", "stock market crash"]
        )
        assert cosine(base, near) > cosine(base, far)

    def test_batch_order_preserved(self):
        e = HashEmbedder(dim=32)
        texts = ["uno", "dos", "tres"]
        vectors = e.embed_batch(texts)
        for text, vector in zip(texts, vectors):
            assert vector == e.embed_batch([text])[0]


class TestCosine:
    def test_identity(self):
        (v,) = HashEmbedder().embed_batch(["hello"])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-6)

    def test_negation(self):
        (v,) = HashEmbedder().embed_batch(["hello"])
        neg = Embedding(-v.values)
        assert cosine(v, neg) == pytest.approx(-1.0, abs=1e-6)

    def test_orthogonal_basis(self):
        e1 = Embedding(np.eye(8)[0])
        e2 = Embedding(np.eye(8)[1])
        assert cosine(e1, e2) == 0.0

    def test_dimension_mismatch(self):
        a = Embedding(np.ones(8))
        b = Embedding(np.ones(16))
        with pytest.raises(DimensionMismatch):
            cosine(a, b)

    def test_zero_vector(self):
        z = Embedding(np.zeros(8))
        v = Embedding(np.ones(8))
        with pytest.raises(ZeroVector):
            cosine(z, v)

    @given(alpha=st.floats(min_value=1e-3, max_value=1e3))
    def test_scale_invariance(self, alpha):
        a = Embedding(np.array([1.0, 2.0, 3.0, 4.0, 0.5, 0.1, 2.2, 9.0]))
        b = Embedding(np.array([0.5, 0.1, 3.0, 1.0, 2.5, 4.1, 0.2, 1.0]))
        scaled = Embedding(np.asarray(a.values, dtype=np.float64) * alpha)
        assert cosine(scaled, b) == pytest.approx(cosine(a, b), abs=1e-9)
