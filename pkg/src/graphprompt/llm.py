"""Chat-completion transport, answer parsing, and the offline mock oracle.

The wire format is the de-facto standard chat API: POST ``{"model": ...,
"messages": [{"role": "user", "content": prompt}], ...}``, read back the
first choice's message content.  A process-wide token bucket enforces the
configured request rate; transient failures (429/5xx/timeouts) retry with
exponential backoff.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import requests

from .errors import AuthError, InvariantViolation, PayloadTooLarge, RetriesExhausted

INVALID = "INVALID"

API_KEY_ENV_VAR = "GRAPHPROMPT_API_KEY"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class ModelConfig:
    endpoint_url: str
    model_name: str
    temperature: float = 0.0
    max_output_tokens: int = 64
    request_timeout: float = 60.0
    max_retries: int = 3
    requests_per_minute: float = 60.0
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.temperature < 0:
            raise InvariantViolation("temperature must be >= 0")
        if self.max_retries < 0:
            raise InvariantViolation("max_retries must be >= 0")
        if self.requests_per_minute <= 0:
            raise InvariantViolation("requests_per_minute must be > 0")


@dataclass
class PredictionRecord:
    node_id: int
    raw_response: str
    parsed_label: str
    latency: float
    retries_used: int
    prompt_chars: int
    error: Optional[str] = None


class _RateLimiter:
    """Evenly spaces request start times at the configured rate."""

    def __init__(self, requests_per_minute: float):
        self.interval = 60.0 / requests_per_minute
        self._lock = threading.Lock()
        self._next_slot = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next_slot)
            self._next_slot = slot + self.interval
        delay = slot - now
        if delay > 0:
            time.sleep(delay)


class ChatClient:
    """Thread-safe client for a chat-completion endpoint."""

    def __init__(self, cfg: ModelConfig, api_key: Optional[str] = None):
        self.cfg = cfg
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR, "")
        self._limiter = _RateLimiter(cfg.requests_per_minute)
        self.last_retries_used = 0

    def complete(self, prompt: str) -> str:
        cfg = self.cfg
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        }
        last_error = "no attempt made"
        retries = 0
        for attempt in range(cfg.max_retries + 1):
            self._limiter.acquire()
            try:
                resp = requests.post(
                    cfg.endpoint_url, json=payload, headers=headers,
                    timeout=cfg.request_timeout,
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = str(exc)
                retries = attempt + 1
                time.sleep(cfg.backoff_base * 2 ** attempt)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 413:
                raise PayloadTooLarge(f"prompt of {len(prompt)} chars rejected")
            if resp.status_code in _RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                retries = attempt + 1
                time.sleep(cfg.backoff_base * 2 ** attempt)
                continue
            resp.raise_for_status()
            body = resp.json()
            self.last_retries_used = attempt
            return body["choices"][0]["message"]["content"]
        raise RetriesExhausted(last_error, attempts=retries)


_BRACKET_RE = re.compile(r"\[\s*(?:'([^']*)'|\"([^\"]*)\")")


def parse_label(raw: str, label_set: Sequence[str]) -> str:
    """Extract a categorical answer from a model response.

    Prefers the first bracketed quoted item (``['XX']`` style); failing
    that, the earliest case-insensitive label-set substring; otherwise
    :data:`INVALID`.
    """
    by_fold = {lbl.casefold(): lbl for lbl in label_set}
    m = _BRACKET_RE.search(raw)
    if m:
        item = (m.group(1) if m.group(1) is not None else m.group(2)).strip()
        hit = by_fold.get(item.casefold())
        if hit is not None:
            return hit
    folded = raw.casefold()
    best: tuple[int, str] | None = None
    for lbl in label_set:
        pos = folded.find(lbl.casefold())
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, lbl)
    return best[1] if best else INVALID


_NEIGHBOR_LABEL_RE = re.compile(r"^Neighbor Paper\d+: Category: (.+)$", re.MULTILINE)


class MockOracle:
    """Deterministic offline stand-in for the chat endpoint.

    Answers with the majority label among the prompt's neighbor blocks (ties
    broken by first appearance); with no neighbor labels in the prompt, falls
    back to the first label of the configured label set.
    """

    def __init__(self, label_set: Sequence[str]):
        if not label_set:
            raise InvariantViolation("mock oracle needs a non-empty label set")
        self.label_set = tuple(label_set)

    def complete(self, prompt: str) -> str:
        labels = _NEIGHBOR_LABEL_RE.findall(prompt)
        if not labels:
            return f"Category: ['{self.label_set[0]}']"
        counts: dict[str, int] = {}
        for lbl in labels:
            counts[lbl] = counts.get(lbl, 0) + 1
        best = max(counts.values())
        winner = next(lbl for lbl in labels if counts[lbl] == best)
        return f"Category: ['{winner}']"


def mock_complete(prompt: str, label_set: Sequence[str]) -> str:
    return MockOracle(label_set).complete(prompt)
