"""Fuzzy-match retrieval over a project TM via the ANN index.

A ``ProjectIndex`` snapshot maps positional ids back to units; positions
are assigned in TM order so index ids stay stable between refreshes of an
append-only TM.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import Embedder
from .errors import BadEdges, EmptyTm, IndexStale
from .ivf import IvfIndex, Metric, SearchParams, default_nlist
from .store import Project
from .types import FuzzyMatch, TranslationUnit

# Upper edge sits just past 1.0 so exact matches land in the last bucket.
DEFAULT_HISTOGRAM_EDGES = (0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0 + 1e-9)


@dataclass(frozen=True)
class RetrievalConfig:
    top_k: int = 10
    exclude_exact_self: bool = True
    min_similarity: float = -1.0


@dataclass(frozen=True)
class SimilarityHistogram:
    bucket_edges: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


class ProjectIndex:
    """Searchable snapshot of a project's TM sources."""

    def __init__(self, project: Project, embedder: Embedder, index: IvfIndex,
                 indexed_count: int):
        self.project = project
        self.embedder = embedder
        self.index = index
        self.indexed_count = indexed_count

    @classmethod
    def build(cls, project: Project, embedder: Embedder, nlist: int | None = None,
              seed: int = 0, nprobe_default: int | None = None) -> "ProjectIndex":
        if len(project) == 0:
            raise EmptyTm(f"project {project.name!r} has no units")
        sources = [u.source for u in project.units]
        vectors = embedder.embed_batch(sources)
        nlist = nlist or default_nlist(len(vectors))
        index = IvfIndex.train(vectors, nlist=nlist, seed=seed, metric=Metric.COSINE)
        for position, vector in enumerate(vectors):
            index.add(position, vector)
        return cls(project, embedder, index, indexed_count=len(vectors))

    @property
    def in_sync(self) -> bool:
        return self.indexed_count == len(self.project)

    def absorb_new_units(self) -> int:
        """Assign not-yet-indexed units to their nearest existing centroid."""
        added = 0
        while self.indexed_count < len(self.project):
            unit = self.project.units[self.indexed_count]
            vector = self.embedder.embed_batch([unit.source])[0]
            self.index.add(self.indexed_count, vector)
            self.indexed_count += 1
            added += 1
        return added

    def top_fuzzy(self, source: str, cfg: RetrievalConfig,
                  nprobe: int | None = None) -> list[FuzzyMatch]:
        if len(self.project) == 0:
            raise EmptyTm(f"project {self.project.name!r} has no units")
        if not self.in_sync:
            raise IndexStale(
                f"index covers {self.indexed_count} of {len(self.project)} units"
            )
        query = self.embedder.embed_batch([source])[0]
        extra = 0
        if cfg.exclude_exact_self:
            extra = sum(1 for u in self.project.units if u.source == source)
        params = SearchParams(
            k=cfg.top_k + extra,
            nprobe=nprobe if nprobe is not None else self.index.nlist,
        )
        matches: list[FuzzyMatch] = []
        for position, score in self.index.search(query, params):
            unit: TranslationUnit = self.project.units[position]
            if cfg.exclude_exact_self and unit.source == source:
                continue
            if score < cfg.min_similarity:
                continue
            matches.append(FuzzyMatch(unit=unit, similarity=score))
            if len(matches) == cfg.top_k:
                break
        return matches


def match_stats(matches_per_query: list[list[FuzzyMatch]],
                edges: tuple[float, ...] = DEFAULT_HISTOGRAM_EDGES) -> SimilarityHistogram:
    """Bucket similarities into half-open [lo, hi) bins.

    Values outside [edges[0], edges[-1]) are not counted; pass edges
    spanning [-1, 1] (plus epsilon) to capture every cosine value.
    """
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadEdges(f"edges must be strictly ascending, got {edges}")
    counts = [0] * (len(edges) - 1)
    for matches in matches_per_query:
        for match in matches:
            sim = match.similarity
            for i in range(len(edges) - 1):
                if edges[i] <= sim < edges[i + 1]:
                    counts[i] += 1
                    break
    return SimilarityHistogram(bucket_edges=tuple(edges), counts=tuple(counts))
