"""Inverted-file flat ANN index: k-means coarse quantizer + exact per-cluster scan.

Cosine is implemented as inner product over vectors normalized at ingest,
so the cosine and L2 orderings agree up to a monotone transform. Ties on
score break by ascending external id for determinism. Snapshots are a
little-endian binary format (see ``save`` / ``load``).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .embedding import Embedding
from .errors import (
    ConfigError,
    DimensionMismatch,
    DuplicateId,
    NotTrained,
    SnapshotFormatError,
    TooFewVectors,
)

KMEANS_MAX_ITER = 25
KMEANS_SHIFT_TOL = 1e-4

_MAGIC = b"AIVF"
_VERSION = 1


class Metric(str, Enum):
    COSINE = "cosine"
    L2 = "l2"


@dataclass(frozen=True)
class SearchParams:
    k: int = 10
    nprobe: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.nprobe < 1:
            raise ConfigError(f"nprobe must be >= 1, got {self.nprobe}")


def default_nlist(n: int) -> int:
    """Cluster-count default: 4096 for corpora large enough for the 4*sqrt(N)
    rule to reach it, otherwise ceil(4*sqrt(N)) clamped to [1, N]."""
    if n < 1:
        raise ConfigError("corpus must be non-empty")
    by_rule = math.ceil(4.0 * math.sqrt(n))
    if by_rule >= 4096:
        return 4096
    return max(1, min(by_rule, n))


def _as_matrix(vectors: Sequence[Embedding], dim: int | None = None) -> np.ndarray:
    if not vectors:
        raise TooFewVectors("no vectors given")
    d = dim or vectors[0].dim
    rows = np.empty((len(vectors), d), dtype=np.float64)
    for i, v in enumerate(vectors):
        if v.dim != d:
            raise DimensionMismatch(f"vector {i} has dim {v.dim}, expected {d}")
        rows[i] = v.values
    return rows


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


def l2_normalize32(vec: np.ndarray) -> np.ndarray:
    """Ingest normalization contract: norm in float64, result float32.

    Stored vector = float32(float64(v) / ||v||_2); scores are then float64
    dot products of these float32 rows. Oracles must reproduce this exact
    pipeline for bit-stable ordering comparisons.
    """
    v64 = vec.astype(np.float64)
    n = float(np.linalg.norm(v64))
    if n > 0.0:
        v64 = v64 / n
    return v64.astype(np.float32)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = x[rng.integers(n)]
        else:
            centers[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _assign(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # Chunked ||x - c||^2 = |x|^2 - 2 x.c + |c|^2; |x|^2 constant per row.
    labels = np.empty(x.shape[0], dtype=np.int64)
    c_sq = np.sum(centers**2, axis=1)
    for start in range(0, x.shape[0], 4096):
        block = x[start : start + 4096]
        scores = block @ centers.T * -2.0 + c_sq
        labels[start : start + 4096] = np.argmin(scores, axis=1)
    return labels


def _kmeans(x: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(x, k, rng)
    for _ in range(KMEANS_MAX_ITER):
        labels = _assign(x, centers)
        sizes = np.bincount(labels, minlength=k)
        # Repair empty clusters by splitting the largest: the farthest member
        # of the biggest cluster becomes the empty cluster's new centroid.
        while np.any(sizes == 0):
            empty = int(np.argmin(sizes))
            biggest = int(np.argmax(sizes))
            members = np.nonzero(labels == biggest)[0]
            far = members[np.argmax(np.sum((x[members] - centers[biggest]) ** 2, axis=1))]
            centers[empty] = x[far]
            labels[far] = empty
            sizes = np.bincount(labels, minlength=k)
        new_centers = np.zeros_like(centers)
        np.add.at(new_centers, labels, x)
        new_centers /= sizes[:, None]
        shift = np.linalg.norm(new_centers - centers) / max(np.linalg.norm(centers), 1e-12)
        centers = new_centers
        if shift <= KMEANS_SHIFT_TOL:
            break
    return centers


@dataclass
class IvfIndex:
    dim: int
    nlist: int
    metric: Metric = Metric.COSINE
    centroids: np.ndarray | None = None
    posting_ids: list[list[int]] = field(default_factory=list)
    posting_vecs: list[list[np.ndarray]] = field(default_factory=list)
    _known_ids: set[int] = field(default_factory=set)

    @property
    def trained(self) -> bool:
        return self.centroids is not None

    @property
    def count(self) -> int:
        return len(self._known_ids)

    # -- training ---------------------------------------------------------

    @classmethod
    def train(
        cls,
        vectors: Sequence[Embedding],
        nlist: int,
        seed: int = 0,
        metric: Metric = Metric.COSINE,
    ) -> "IvfIndex":
        if nlist < 1:
            raise ConfigError(f"nlist must be >= 1, got {nlist}")
        x = _as_matrix(vectors)
        if x.shape[0] < nlist:
            raise TooFewVectors(f"{x.shape[0]} vectors for nlist={nlist}")
        if metric is Metric.COSINE:
            x = _normalize_rows(x)
        centers = x.mean(axis=0, keepdims=True) if nlist == 1 else _kmeans(x, nlist, seed)
        if metric is Metric.COSINE:
            centers = _normalize_rows(centers)
        index = cls(dim=x.shape[1], nlist=nlist, metric=metric)
        index.centroids = centers.astype(np.float32)
        index.posting_ids = [[] for _ in range(nlist)]
        index.posting_vecs = [[] for _ in range(nlist)]
        return index

    # -- ingest -----------------------------------------------------------

    def _prepare(self, vector: Embedding) -> np.ndarray:
        if vector.dim != self.dim:
            raise DimensionMismatch(f"vector dim {vector.dim}, index dim {self.dim}")
        if self.metric is Metric.COSINE:
            return l2_normalize32(vector.values)
        return vector.values.astype(np.float32)

    def _nearest_clusters(self, vec: np.ndarray, n: int) -> np.ndarray:
        assert self.centroids is not None
        if self.metric is Metric.COSINE:
            scores = -(self.centroids @ vec)  # ascending = best first
        else:
            scores = np.linalg.norm(self.centroids - vec, axis=1)
        return np.argsort(scores, kind="stable")[:n]

    def add(self, external_id: int, vector: Embedding) -> None:
        if not self.trained:
            raise NotTrained("train the index before adding vectors")
        if external_id in self._known_ids:
            raise DuplicateId(f"id {external_id} already indexed")
        vec = self._prepare(vector)
        cluster = int(self._nearest_clusters(vec, 1)[0])
        self.posting_ids[cluster].append(int(external_id))
        self.posting_vecs[cluster].append(vec)
        self._known_ids.add(int(external_id))

    # -- search -----------------------------------------------------------

    def search(self, query: Embedding, params: SearchParams) -> list[tuple[int, float]]:
        if not self.trained:
            raise NotTrained("train the index before searching")
        if self.count == 0:
            return []
        vec = self._prepare(query)
        q64 = vec.astype(np.float64)
        nprobe = min(params.nprobe, self.nlist)
        candidates: list[tuple[float, int]] = []
        # Per-row dot keeps score arithmetic bit-identical to an exhaustive
        # row-by-row oracle (BLAS gemv may accumulate in a different order).
        for cluster in self._nearest_clusters(vec, nprobe):
            for ext_id, row in zip(self.posting_ids[cluster], self.posting_vecs[cluster]):
                r64 = row.astype(np.float64)
                if self.metric is Metric.COSINE:
                    candidates.append((-float(np.dot(r64, q64)), ext_id))
                else:
                    candidates.append((float(np.linalg.norm(r64 - q64)), ext_id))
        candidates.sort(key=lambda t: (t[0], t[1]))
        top = candidates[: params.k]
        if self.metric is Metric.COSINE:
            return [(i, -s) for s, i in top]
        return [(i, s) for s, i in top]

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        if not self.trained:
            raise NotTrained("cannot snapshot an untrained index")
        with open(path, "wb") as fh:
            self._write(fh)

    def _write(self, fh: BinaryIO) -> None:
        assert self.centroids is not None
        metric_code = 0 if self.metric is Metric.COSINE else 1
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIB3xQ", _VERSION, self.dim, self.nlist, metric_code, self.count))
        fh.write(np.ascontiguousarray(self.centroids, dtype="<f4").tobytes())
        for cluster in range(self.nlist):
            ids = self.posting_ids[cluster]
            fh.write(struct.pack("<Q", len(ids)))
            if ids:
                fh.write(np.asarray(ids, dtype="<u8").tobytes())
                fh.write(np.stack(self.posting_vecs[cluster]).astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "IvfIndex":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != _MAGIC:
            raise SnapshotFormatError("not an index snapshot")
        version, dim, nlist, metric_code, count = struct.unpack_from("<IIIB3xQ", data, 4)
        if version != _VERSION:
            raise SnapshotFormatError(f"unsupported snapshot version {version}")
        offset = 4 + struct.calcsize("<IIIB3xQ")
        metric = Metric.COSINE if metric_code == 0 else Metric.L2
        centroids = np.frombuffer(data, dtype="<f4", count=nlist * dim, offset=offset)
        offset += nlist * dim * 4
        index = cls(dim=dim, nlist=nlist, metric=metric)
        index.centroids = centroids.reshape(nlist, dim).copy()
        index.posting_ids = [[] for _ in range(nlist)]
        index.posting_vecs = [[] for _ in range(nlist)]
        for cluster in range(nlist):
            (size,) = struct.unpack_from("<Q", data, offset)
            offset += 8
            if size:
                ids = np.frombuffer(data, dtype="<u8", count=size, offset=offset)
                offset += size * 8
                vecs = np.frombuffer(data, dtype="<f4", count=size * dim, offset=offset)
                offset += size * dim * 4
                index.posting_ids[cluster] = [int(i) for i in ids]
                index.posting_vecs[cluster] = [row.copy() for row in vecs.reshape(size, dim)]
                index._known_ids.update(index.posting_ids[cluster])
        if index.count != count:
            raise SnapshotFormatError(f"posting count {index.count} != header count {count}")
        return index


def brute_force_search(
    stored: Sequence[tuple[int, Embedding]],
    query: Embedding,
    k: int,
    metric: Metric = Metric.COSINE,
) -> list[tuple[int, float]]:
    """Exhaustive exact scan with the same normalization and tie rules."""
    if not stored:
        return []
    results = []
    if metric is Metric.COSINE:
        q = l2_normalize32(query.values).astype(np.float64)
    else:
        q = query.values.astype(np.float64)
    for ext_id, emb in stored:
        if metric is Metric.COSINE:
            v = l2_normalize32(emb.values).astype(np.float64)
            results.append((-float(np.dot(v, q)), ext_id))
        else:
            results.append((float(np.linalg.norm(emb.values.astype(np.float64) - q)), ext_id))
    results.sort(key=lambda t: (t[0], t[1]))
    top = results[:k]
    if metric is Metric.COSINE:
        return [(i, -s) for s, i in top]
    return [(i, s) for s, i in top]
