from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adaptmt.embedding import HashEmbedder
from adaptmt.ivf import l2_normalize32
from adaptmt.errors import BadEdges, EmptyTm, IndexStale
from adaptmt.retrieval import (
    DEFAULT_HISTOGRAM_EDGES,
    ProjectIndex,
    RetrievalConfig,
    SimilarityHistogram,
    match_stats,
)
from adaptmt.store import Project
from adaptmt.types import FuzzyMatch

from conftest import EN, ES, unit


def make_project(sources: list[str]) -> Project:
    project = Project(name="t", src_lang=EN, tgt_lang=ES)
    project.add_units([unit(s, f"tgt {i}") for i, s in enumerate(sources)])
    return project


@pytest.fixture(scope="module")
def synthetic_tm() -> tuple[Project, ProjectIndex]:
    rng = np.random.default_rng(99)
    words = ["fever", "cough", "virus", "vaccine", "hospital", "patient", "dose",
             "symptom", "treatment", "clinic", "nurse", "doctor"]
    sources = []
    for i in range(200):
        picks = rng.choice(words, size=4, replace=True)
        sources.append(f"{' '.join(picks)} case {i}")
    project = make_project(sources)
    index = ProjectIndex.build(project, HashEmbedder(), nlist=8, seed=5)
    return project, index


class TestTopFuzzy:
    def test_identical_source_rank_one(self, synthetic_tm):
        project, index = synthetic_tm
        source = project.units[42].source
        matches = index.top_fuzzy(source, RetrievalConfig(top_k=3, exclude_exact_self=False))
        assert matches[0].unit.source == source
        assert matches[0].similarity == pytest.approx(1.0, abs=1e-6)

    def test_small_tm_returns_at_most_size(self):
        project = make_project(["uno dos", "tres cuatro", "cinco seis"])
        index = ProjectIndex.build(project, HashEmbedder(), nlist=1)
        matches = index.top_fuzzy("uno tres", RetrievalConfig(top_k=10))
        assert len(matches) <= 3

    def test_matches_brute_force_oracle(self, synthetic_tm):
        # Exhaustive scan with the index's documented scoring pipeline
        # (float32-normalized vectors, float64 dot, ties by ascending id).
        project, index = synthetic_tm
        embedder = HashEmbedder()
        queries = ["fever vaccine case", "doctor nurse clinic", "virus dose symptom case 3"]
        for query in queries:
            got = index.top_fuzzy(query, RetrievalConfig(top_k=10, exclude_exact_self=False))
            qv = l2_normalize32(embedder.embed_batch([query])[0].values).astype(np.float64)
            sims = []
            for position, u in enumerate(project.units):
                uv = l2_normalize32(embedder.embed_batch([u.source])[0].values)
                sims.append((-float(np.dot(uv.astype(np.float64), qv)), position))
            sims.sort()
            expected_ids = [p for _, p in sims[:10]]
            assert [project.units.index(m.unit) for m in got] == expected_ids

    def test_exclude_exact_self(self, synthetic_tm):
        project, index = synthetic_tm
        source = project.units[0].source
        matches = index.top_fuzzy(source, RetrievalConfig(top_k=5, exclude_exact_self=True))
        assert all(m.unit.source != source for m in matches)
        assert len(matches) == 5

    def test_min_similarity_filters(self, synthetic_tm):
        _, index = synthetic_tm
        matches = index.top_fuzzy(
            "fever", RetrievalConfig(top_k=50, min_similarity=0.5, exclude_exact_self=False)
        )
        assert all(m.similarity >= 0.5 for m in matches)

    def test_ordering_non_increasing(self, synthetic_tm):
        _, index = synthetic_tm
        matches = index.top_fuzzy("hospital patient", RetrievalConfig(top_k=20))
        sims = [m.similarity for m in matches]
        assert sims == sorted(sims, reverse=True)

    def test_empty_tm(self):
        project = Project(name="empty", src_lang=EN, tgt_lang=ES)
        with pytest.raises(EmptyTm):
            ProjectIndex.build(project, HashEmbedder())

    def test_stale_index_and_absorb(self):
        project = make_project(["alpha beta", "gamma delta"])
        index = ProjectIndex.build(project, HashEmbedder(), nlist=1)
        project.approve_edit("epsilon zeta", "objetivo nuevo")
        assert not index.in_sync
        with pytest.raises(IndexStale):
            index.top_fuzzy("alpha", RetrievalConfig(top_k=1))
        assert index.absorb_new_units() == 1
        assert index.in_sync
        matches = index.top_fuzzy(
            "epsilon zeta", RetrievalConfig(top_k=1, exclude_exact_self=False)
        )
        assert matches[0].unit.source == "epsilon zeta"
        assert matches[0].similarity == pytest.approx(1.0, abs=1e-6)


def fm(sim: float) -> FuzzyMatch:
    return FuzzyMatch(unit=unit("s", "t"), similarity=sim)


class TestMatchStats:
    def test_boundary_half_open(self):
        hist = match_stats([[fm(0.5)]], edges=(0.0, 0.5, 1.0))
        assert hist.counts == (0, 1)

    def test_empty_input_all_zero(self):
        hist = match_stats([], edges=(0.0, 0.5, 1.0))
        assert hist.counts == (0, 0)

    def test_random_sims_conserved(self):
        rng = np.random.default_rng(4)
        sims = rng.uniform(-1.0, 1.0, size=100)
        edges = (-1.0, -0.5, 0.0, 0.5, 1.0 + 1e-9)
        hist = match_stats([[fm(s) for s in sims]], edges=edges)
        assert hist.total == 100

    def test_bad_edges(self):
        with pytest.raises(BadEdges):
            match_stats([], edges=(0.5, 0.5, 1.0))
        with pytest.raises(BadEdges):
            match_stats([], edges=(1.0,))

    def test_default_edges_wrap_exact_match(self):
        hist = match_stats([[fm(1.0)]], edges=DEFAULT_HISTOGRAM_EDGES)
        assert hist.counts[-1] == 1
        assert isinstance(hist, SimilarityHistogram)

    @given(sims=st.lists(st.floats(min_value=-1.0, max_value=1.0), max_size=60))
    def test_conservation_property(self, sims):
        edges = (-1.0, -0.25, 0.0, 0.33, 0.75, 1.0 + 1e-9)
        hist = match_stats([[fm(s) for s in sims]], edges=edges)
        assert hist.total == len(sims)
        assert len(hist.counts) == len(edges) - 1
