import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reaper.embedding import (
    DimensionMismatchError,
    HashingEmbedder,
    ProviderError,
    RemoteEmbedder,
    ZeroVectorError,
    cosine,
    similarity_matrix,
)

from .httpserve import json_server


@pytest.fixture(scope="module")
def provider():
    return HashingEmbedder()


class TestHashingEmbedder:
    def test_deterministic(self, provider):
        first = provider.embed("red shoes")
        second = provider.embed("red shoes")
        assert np.array_equal(first, second)

    def test_unit_norm(self, provider):
        assert math.isclose(
            float(np.linalg.norm(provider.embed("red shoes"))), 1.0, rel_tol=1e-12
        )

    def test_cosine_in_range_for_different_texts(self, provider):
        value = cosine(provider.embed("red shoes"), provider.embed("crimson footwear"))
        assert -1.0 <= value <= 1.0

    def test_tokenization_case_and_punctuation_insensitive(self, provider):
        assert np.array_equal(
            provider.embed("Red, Shoes!"), provider.embed("red shoes")
        )

    def test_empty_text_rejected(self, provider):
        with pytest.raises(ValueError):
            provider.embed("")

    def test_dimension(self):
        assert HashingEmbedder(dim=16).embed("abc").shape == (16,)


class TestCosine:
    def test_identical_axes(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_forty_five_degrees(self):
        # sqrt(2)/2 by hand
        value = cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert abs(value - 0.7071067811865476) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine(np.array([1.0]), np.array([1.0, 0.0]))

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            cosine(np.zeros(3), np.ones(3))

    def test_self_similarity_is_exactly_one(self, provider):
        for text in ("red shoes", "a", "many words in this one"):
            vector = provider.embed(text)
            assert cosine(vector, vector) == 1.0


# components are zero or of representable magnitude: tiny values underflow
# when squared, making the norm (and so the cosine) uncomputable in float64
_component = st.one_of(
    st.just(0.0),
    st.floats(min_value=1e-3, max_value=1e6),
    st.floats(min_value=-1e6, max_value=-1e-3),
)
finite_vectors = st.lists(_component, min_size=4, max_size=4).filter(
    lambda values: any(v != 0 for v in values)
)


@settings(max_examples=200, deadline=None)
@given(finite_vectors, finite_vectors)
def test_cosine_symmetry(left, right):
    a, b = np.array(left), np.array(right)
    assert abs(cosine(a, b) - cosine(b, a)) <= 1e-12


class TestSimilarityMatrix:
    def test_identical_lists_have_unit_diagonal(self, provider):
        queries = ["red shoes", "blue hat", "green scarf"]
        matrix = similarity_matrix(provider, queries, queries)
        assert np.array_equal(np.diag(matrix.values), np.ones(3))

    def test_single_entry(self, provider):
        matrix = similarity_matrix(provider, ["red shoes"], ["crimson footwear"])
        expected = cosine(
            provider.embed("red shoes"), provider.embed("crimson footwear")
        )
        assert matrix.values.shape == (1, 1)
        assert matrix.values[0, 0] == expected

    def test_matches_brute_force_recomputation_exactly(self, provider):
        q_initial = ["red shoes", "blue hat", "garden hose"]
        q_large = [
            "crimson footwear",
            "red shoes",
            "a blue hat for winter",
            "kitchen knife set",
            "hose for the garden",
        ]
        matrix = similarity_matrix(provider, q_initial, q_large)
        for i, left in enumerate(q_initial):
            for j, right in enumerate(q_large):
                expected = cosine(provider.embed(left), provider.embed(right))
                assert matrix.values[i, j] == expected

    def test_empty_inputs_rejected(self, provider):
        with pytest.raises(ValueError):
            similarity_matrix(provider, [], ["a"])
        with pytest.raises(ValueError):
            similarity_matrix(provider, ["a"], [])


class TestRemoteEmbedder:
    def test_round_trip(self):
        def handler(path, body):
            assert path == "/embed"
            vectors = [[float(len(text)), 1.0] for text in body["texts"]]
            return 200, {"vectors": vectors, "dim": 2}

        with json_server(handler) as url:
            remote = RemoteEmbedder(url)
            assert np.array_equal(remote.embed("abc"), np.array([3.0, 1.0]))
            batch = remote.embed_batch(["a", "ab"])
            assert np.array_equal(batch[1], np.array([2.0, 1.0]))

    def test_dead_endpoint_is_provider_error(self):
        remote = RemoteEmbedder("http://127.0.0.1:9", timeout_s=0.2)
        with pytest.raises(ProviderError):
            remote.embed("red shoes")

    def test_non_200_is_provider_error(self):
        with json_server(lambda path, body: (503, {"error": "down"})) as url:
            with pytest.raises(ProviderError):
                RemoteEmbedder(url).embed("red shoes")

    def test_malformed_body_is_provider_error(self):
        with json_server(lambda path, body: (200, {"nope": []})) as url:
            with pytest.raises(ProviderError):
                RemoteEmbedder(url).embed("red shoes")
