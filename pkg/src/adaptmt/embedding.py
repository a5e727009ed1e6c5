"""Sentence embeddings behind a provider contract.

Two providers: a remote HTTP encoder and a built-in deterministic hash
embedder for tests and air-gapped use. The hash embedder is a pure
function of (text, dim): character 3-grams of the NFC-normalized,
lowercased text padded with boundary markers, hashed into ``dim`` buckets
with a fixed-key 64-bit blake2b, then L2-normalized. Similar strings
share 3-grams and therefore land near each other in the vector space.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyInput, ProviderUnavailable, ZeroVector

DEFAULT_DIM = 384

# Fixed 64-bit key; changing it invalidates every stored index.
_HASH_KEY = (0x9E3779B97F4A7C15).to_bytes(8, "little")
_PAD_START = "\x02"
_PAD_END = "\x03"


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray
    norm: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ConfigError("embedding must be a 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("embedding values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "norm", float(np.linalg.norm(arr)))

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, Embedding) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


class Provider(str, Enum):
    REMOTE = "remote"
    DETERMINISTIC_HASH = "deterministic_hash"


@dataclass(frozen=True)
class EmbedderConfig:
    provider: Provider = Provider.DETERMINISTIC_HASH
    dim: int = DEFAULT_DIM
    normalize: bool = True
    endpoint: str = ""
    auth_token: str = ""

    def __post_init__(self):
        if self.dim < 8:
            raise ConfigError(f"embedding dim must be >= 8, got {self.dim}")


class Embedder(Protocol):
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]: ...


def _char_trigrams(text: str) -> list[str]:
    padded = _PAD_START + unicodedata.normalize("NFC", text).lower() + _PAD_END
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


def hash_text(text: str, dim: int = DEFAULT_DIM, normalize: bool = True) -> np.ndarray:
    """Deterministic 3-gram hash vector; bit-identical across runs and platforms."""
    vec = np.zeros(dim, dtype=np.float64)
    for gram in _char_trigrams(text):
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_HASH_KEY).digest()
        vec[int.from_bytes(digest, "little") % dim] += 1.0
    if normalize:
        n = np.linalg.norm(vec)
        if n > 0:
            vec = vec / n
    return vec


class HashEmbedder:
    """Stateless deterministic embedder; safe for concurrent use."""

    def __init__(self, dim: int = DEFAULT_DIM, normalize: bool = True):
        if dim < 8:
            raise ConfigError(f"embedding dim must be >= 8, got {dim}")
        self.dim = dim
        self.normalize = normalize

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        out = []
        for text in texts:
            if not isinstance(text, str) or not text.strip():
                raise EmptyInput("cannot embed empty text")
            out.append(Embedding(hash_text(text, self.dim, self.normalize)))
        return out


class RemoteEmbedder:
    """HTTP provider: POST {"texts": [...]} -> {"embeddings": [[...], ...]}."""

    def __init__(self, endpoint: str, dim: int = DEFAULT_DIM, auth_token: str = "",
                 normalize: bool = True, timeout: float = 30.0):
        if not endpoint:
            raise ConfigError("remote embedder requires an endpoint")
        self.endpoint = endpoint
        self.dim = dim
        self.auth_token = auth_token
        self.normalize = normalize
        self.timeout = timeout

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        import httpx

        for text in texts:
            if not isinstance(text, str) or not text.strip():
                raise EmptyInput("cannot embed empty text")
        headers = {"Authorization": f"Bearer {self.auth_token}"} if self.auth_token else {}
        try:
            resp = httpx.post(
                self.endpoint, json={"texts": list(texts)}, headers=headers, timeout=self.timeout
            )
            resp.raise_for_status()
            rows = resp.json()["embeddings"]
        except Exception as exc:
            raise ProviderUnavailable(f"embedding provider failed: {exc}") from exc
        if len(rows) != len(texts):
            raise ProviderUnavailable(
                f"provider returned {len(rows)} embeddings for {len(texts)} texts"
            )
        out = []
        for row in rows:
            arr = np.asarray(row, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise DimensionMismatch(f"expected dim {self.dim}, got {arr.shape}")
            if self.normalize:
                n = np.linalg.norm(arr)
                if n > 0:
                    arr = arr / n
            out.append(Embedding(arr))
        return out


def make_embedder(cfg: EmbedderConfig) -> Embedder:
    if cfg.provider is Provider.DETERMINISTIC_HASH:
        return HashEmbedder(dim=cfg.dim, normalize=cfg.normalize)
    return RemoteEmbedder(
        endpoint=cfg.endpoint, dim=cfg.dim, auth_token=cfg.auth_token, normalize=cfg.normalize
    )


def embed_batch(texts: Sequence[str], cfg: EmbedderConfig) -> list[Embedding]:
    return make_embedder(cfg).embed_batch(texts)


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity in [-1, 1]; raises on dim mismatch or zero vectors."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims differ: {a.dim} vs {b.dim}")
    if a.norm == 0.0 or b.norm == 0.0:
        raise ZeroVector("cosine undefined for zero vectors")
    value = float(np.dot(a.values.astype(np.float64), b.values.astype(np.float64)))
    return float(np.clip(value / (a.norm * b.norm), -1.0, 1.0))


def cosine_matrix(query: np.ndarray, corpus: np.ndarray) -> np.ndarray:
    """Cosine of one query against each corpus row (rows may be unnormalized)."""
    q = query.astype(np.float64)
    c = corpus.astype(np.float64)
    qn = np.linalg.norm(q)
    cn = np.linalg.norm(c, axis=1)
    if qn == 0.0 or np.any(cn == 0.0):
        raise ZeroVector("cosine undefined for zero vectors")
    return np.clip(c @ q / (cn * qn), -1.0, 1.0)

