"""Encoders behind the embedding endpoint.

Two families are supported:

* ``hashed-bow-<dim>``: a dependency-free hashed bag-of-words encoder.
  Each lowercased word token is hashed to a coordinate and a sign, counts
  are accumulated, and the vector is L2-normalized.  Deterministic,
  CPU-cheap, and good enough for similarity smoke tests offline.
* Any other identifier is treated as a sentence-transformers checkpoint
  (for example the supervised SimCSE release) and loaded lazily.

Both truncate long inputs at a fixed token boundary before encoding, so a
text and its truncation embed identically.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

_WORD = re.compile(r"[a-z0-9]+")


@dataclass
class HashedBowEncoder:
    """Deterministic hashed bag-of-words sentence encoder."""

    dim: int = 256
    max_tokens: int = 512
    model_id: str = field(init=False)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        self.model_id = f"hashed-bow-{self.dim}"

    def _tokens(self, text: str) -> list[str]:
        return _WORD.findall(text.lower())[: self.max_tokens]

    def encode_one(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for tok in self._tokens(text):
            digest = hashlib.sha256(tok.encode("utf-8")).digest()
            index = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[index] += sign
        norm = sum(x * x for x in vec) ** 0.5
        if norm == 0.0:
            # empty or all-punctuation text: fixed unit vector
            vec[0] = 1.0
            return vec
        return [x / norm for x in vec]

    def encode(self, texts: list[str]) -> list[list[float]]:
        return [self.encode_one(t) for t in texts]


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers checkpoint in inference mode."""

    def __init__(self, checkpoint: str):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(checkpoint, device="cpu")
        self.model_id = checkpoint
        probe = self._model.encode(["probe"], convert_to_numpy=True)
        self.dim = int(probe.shape[1])

    def encode(self, texts: list[str]) -> list[list[float]]:
        out = self._model.encode(texts, convert_to_numpy=True,
                                 show_progress_bar=False)
        return [[float(x) for x in row] for row in out]


def load_encoder(checkpoint: str):
    match = re.fullmatch(r"hashed-bow-(\d+)", checkpoint)
    if match:
        return HashedBowEncoder(dim=int(match.group(1)))
    return SentenceTransformerEncoder(checkpoint)
