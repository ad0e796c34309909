"""Embedding storage, cosine scoring, and top-k candidate ranking.

Vectors live in an :class:`EmbeddingStore`, persisted in the binary EMB-v1
format (16-byte magic, u32 dim, u32 count, then ``(u32 node id, dim * f32)``
records, all little-endian).  Remote encoding goes through
:class:`EmbeddingClient`, which batches requests against a ``POST /embed``
endpoint and writes results through an on-disk cache.
"""

from __future__ import annotations

import hashlib
import json
import random
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    FormatError,
    MissingEmbedding,
    ServiceUnavailable,
    ZeroVector,
)
from .selection import CandidateSet

EMB_MAGIC = b"TAGEMB1\x00" + b"\x00" * 8  # padded to 16 bytes


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict[int, np.ndarray] = field(default_factory=dict)
    source_tag: str = ""

    def add(self, node_id: int, vec) -> None:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector for node {node_id} has shape {arr.shape}, want ({self.dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise FormatError(f"non-finite values in vector for node {node_id}")
        self.vectors[node_id] = arr

    def get(self, node_id: int) -> np.ndarray:
        try:
            return self.vectors[node_id]
        except KeyError:
            raise MissingEmbedding(node_id) from None

    def __len__(self) -> int:
        return len(self.vectors)


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for an all-zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class RankedNeighbors:
    target: int
    entries: tuple[tuple[int, int, Optional[float]], ...]  # (node id, hop, score)
    k_limit: int

    def node_ids(self) -> list[int]:
        return [e[0] for e in self.entries]


def rank_and_truncate(store: EmbeddingStore, cs: CandidateSet, k: int) -> RankedNeighbors:
    """Score candidates against the target, sort by descending similarity
    (ties by ascending node id), keep the top ``k``."""
    if k < 1:
        raise FormatError("k must be >= 1")
    target_vec = store.get(cs.target)
    scored = [
        (node, hop, cosine(target_vec, store.get(node)))
        for node, hop in cs.candidates
    ]
    scored.sort(key=lambda e: (-e[2], e[0]))
    return RankedNeighbors(target=cs.target, entries=tuple(scored[:k]), k_limit=k)


def unranked_passthrough(cs: CandidateSet, k: int, seed: int) -> RankedNeighbors:
    """Similarity-free variant: a seeded uniform sample of min(k, n)
    candidates in sampled order, with no scores."""
    if k < 1:
        raise FormatError("k must be >= 1")
    rng = random.Random((seed << 32) ^ (cs.target * 0x9E3779B1))
    chosen = rng.sample(list(cs.candidates), min(k, len(cs.candidates)))
    entries = tuple((node, hop, None) for node, hop in chosen)
    return RankedNeighbors(target=cs.target, entries=entries, k_limit=k)


# -- EMB-v1 persistence -------------------------------------------------------

def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<II", store.dim, len(store.vectors)))
        for node_id in sorted(store.vectors):
            fh.write(struct.pack("<I", node_id))
            fh.write(store.vectors[node_id].astype("<f4").tobytes())
    tmp.replace(path)


def load_embeddings(path: str | Path, source_tag: str = "") -> EmbeddingStore:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 24 or data[:16] != EMB_MAGIC:
        raise FormatError(f"{path}: not an EMB-v1 file")
    dim, count = struct.unpack_from("<II", data, 16)
    store = EmbeddingStore(dim=dim, source_tag=source_tag)
    offset = 24
    rec_size = 4 + 4 * dim
    if len(data) != offset + rec_size * count:
        raise FormatError(f"{path}: truncated EMB-v1 file")
    for _ in range(count):
        (node_id,) = struct.unpack_from("<I", data, offset)
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset + 4)
        store.vectors[node_id] = vec.copy()
        offset += rec_size
    return store


# -- remote encoding with write-through cache ---------------------------------

class EmbeddingClient:
    """Client for the ``POST /embed`` endpoint.

    Results are cached on disk keyed by (source tag, sha256 of text); repeated
    fetches of the same text make no network calls.  ``requests_made`` counts
    actual HTTP requests for test observability.
    """

    def __init__(self, endpoint: str, cache_dir: Optional[str | Path] = None,
                 source_tag: str = "default", batch_size: int = 256,
                 max_retries: int = 3, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.source_tag = source_tag
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.timeout = timeout
        self.requests_made = 0
        self._dim: Optional[int] = None
        self._cache_lock = threading.Lock()

    def _cache_path(self, text: str) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        tag = hashlib.sha256(self.source_tag.encode("utf-8")).hexdigest()[:16]
        return self.cache_dir / tag / f"{digest}.json"

    def _cache_get(self, text: str) -> Optional[list[float]]:
        p = self._cache_path(text)
        if p is None or not p.exists():
            return None
        return json.loads(p.read_text())

    def _cache_put(self, text: str, vec: list[float]) -> None:
        p = self._cache_path(text)
        if p is None:
            return
        with self._cache_lock:
            p.parent.mkdir(parents=True, exist_ok=True)
            tmp = p.with_suffix(".tmp")
            tmp.write_text(json.dumps(vec))
            tmp.replace(p)

    def _post_batch(self, texts: list[str]) -> list[list[float]]:
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                self.requests_made += 1
                resp = requests.post(
                    f"{self.endpoint}/embed",
                    json={"texts": texts},
                    timeout=self.timeout,
                )
                if resp.status_code in (429, 500, 502, 503, 504):
                    last_error = f"HTTP {resp.status_code}"
                    time.sleep(min(2 ** attempt * 0.1, 5.0))
                    continue
                resp.raise_for_status()
                body = resp.json()
                dim = int(body["dim"])
                if self._dim is None:
                    self._dim = dim
                elif dim != self._dim:
                    raise DimensionMismatch(
                        f"endpoint returned dim {dim}, earlier batches had {self._dim}"
                    )
                vectors = body["vectors"]
                if len(vectors) != len(texts):
                    raise ServiceUnavailable(
                        f"endpoint returned {len(vectors)} vectors for {len(texts)} texts"
                    )
                return vectors
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = str(exc)
                time.sleep(min(2 ** attempt * 0.1, 5.0))
        raise ServiceUnavailable(
            f"embedding endpoint failed: {last_error}", attempts=self.max_retries + 1
        )

    def fetch(self, texts: Sequence[str]) -> list[list[float]]:
        """Embed ``texts``, returning vectors in input order."""
        results: list[Optional[list[float]]] = [self._cache_get(t) for t in texts]
        # first occurrence of each distinct uncached text
        pending: dict[str, list[int]] = {}
        for i, (text, got) in enumerate(zip(texts, results)):
            if got is None:
                pending.setdefault(text, []).append(i)
        order = list(pending)
        for start in range(0, len(order), self.batch_size):
            batch = order[start:start + self.batch_size]
            vectors = self._post_batch(batch)
            for text, vec in zip(batch, vectors):
                self._cache_put(text, vec)
                for i in pending[text]:
                    results[i] = vec
        return results  # type: ignore[return-value]

    def populate_store(self, nodes, store: Optional[EmbeddingStore] = None) -> EmbeddingStore:
        """Embed every node's text and collect vectors into a store."""
        texts = [n.text() for n in nodes]
        vectors = self.fetch(texts)
        if store is None:
            dim = len(vectors[0]) if vectors else (self._dim or 0)
            store = EmbeddingStore(dim=dim, source_tag=self.source_tag)
        for node, vec in zip(nodes, vectors):
            store.add(node.id, vec)
        return store
