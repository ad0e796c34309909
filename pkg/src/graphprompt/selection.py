"""Labeled-neighbor selection strategies.

Three strategies produce a :class:`CandidateSet` of train-labeled nodes for a
target node: hop-by-hop search with layer thresholds and early stopping,
exhaustive within-radius collection, and seeded uniform sampling within a
radius.  Only ``split == "train"`` labels are ever visible to selection.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvariantViolation
from .graph import TextAttributedGraph, hop_distances


@dataclass(frozen=True)
class AlphaSchedule:
    """Per-hop cumulative thresholds for early termination.

    ``per_layer[h-1]`` is the number of labeled candidates that, once
    accumulated through hop ``h``, stops the search.  The last value repeats
    for hops beyond the list.  Default: stop at hop 1 with 2 candidates, at
    any deeper hop with 1, cap at 5 hops.
    """

    per_layer: tuple[int, ...] = (2, 1, 1, 1, 1)
    gamma_max: int = 5

    def __post_init__(self):
        if self.gamma_max < 1:
            raise InvariantViolation("gamma_max must be >= 1")
        if not self.per_layer:
            raise InvariantViolation("per_layer must be non-empty")
        if any(t < 0 for t in self.per_layer):
            raise InvariantViolation("thresholds must be >= 0")

    def threshold(self, hop: int) -> int:
        idx = min(hop - 1, len(self.per_layer) - 1)
        return self.per_layer[idx]


@dataclass(frozen=True)
class CandidateSet:
    target: int
    candidates: tuple[tuple[int, int], ...]  # (node id, minimal hop)
    terminated_at_hop: int
    failed: bool

    def node_ids(self) -> list[int]:
        return [c[0] for c in self.candidates]


def _labeled_pool(g: TextAttributedGraph) -> set[int]:
    return {n.id for n in g.nodes if n.split == "train"}


def _make_candidate_set(target, pairs, terminated_at_hop) -> CandidateSet:
    pairs = tuple(sorted(pairs, key=lambda p: (p[1], p[0])))
    return CandidateSet(
        target=target,
        candidates=pairs,
        terminated_at_hop=terminated_at_hop,
        failed=not pairs,
    )


def recursive_select(g: TextAttributedGraph, v: int, sched: AlphaSchedule = AlphaSchedule()) -> CandidateSet:
    """Expand hop-by-hop, stopping once the cumulative labeled-candidate count
    reaches the hop's threshold, or at ``gamma_max``, or when the frontier is
    exhausted."""
    labeled = _labeled_pool(g)
    dist = hop_distances(g, v, max_hop=sched.gamma_max)
    by_hop: dict[int, list[int]] = {}
    for u, d in dist.items():
        by_hop.setdefault(d, []).append(u)

    found: list[tuple[int, int]] = []
    hop = 0
    for hop in range(1, sched.gamma_max + 1):
        layer = by_hop.get(hop, [])
        found.extend((u, hop) for u in layer if u in labeled)
        if len(found) >= sched.threshold(hop):
            break
        if not layer:
            # frontier exhausted: no deeper hops exist
            break
    return _make_candidate_set(v, found, hop)


def direct_select(g: TextAttributedGraph, v: int, gamma: int) -> CandidateSet:
    """Every train-labeled node within ``gamma`` hops, no early stopping."""
    if gamma < 1:
        raise InvariantViolation("gamma must be >= 1")
    labeled = _labeled_pool(g)
    dist = hop_distances(g, v, max_hop=gamma)
    found = [(u, d) for u, d in dist.items() if u in labeled]
    return _make_candidate_set(v, found, gamma)


def random_select(g: TextAttributedGraph, v: int, gamma: int, k: int, seed: int) -> CandidateSet:
    """Uniform sample of min(k, available) train-labeled nodes within
    ``gamma`` hops.  The generator is seeded from (seed, v) so results do not
    depend on evaluation order across targets."""
    if k < 1:
        raise InvariantViolation("k must be >= 1")
    pool = direct_select(g, v, gamma)
    if pool.failed:
        return pool
    rng = random.Random((seed << 32) ^ (v * 0x9E3779B1))
    chosen = rng.sample(list(pool.candidates), min(k, len(pool.candidates)))
    return _make_candidate_set(v, chosen, gamma)


@dataclass(frozen=True)
class SelectionStrategy:
    """Configured strategy, applied uniformly across target nodes.

    ``kind`` is one of ``sns`` (recursive search + similarity ranking
    downstream), ``direct``, ``random``, or ``none``.
    """

    kind: str
    schedule: AlphaSchedule = AlphaSchedule()
    gamma: int = 2
    k: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sns", "direct", "random", "none"):
            raise InvariantViolation(f"unknown strategy kind {self.kind!r}")

    @property
    def ranked(self) -> bool:
        """Whether downstream ordering is similarity-based (affects the
        neighbor instruction wording)."""
        return self.kind in ("sns", "direct")

    def select(self, g: TextAttributedGraph, v: int) -> Optional[CandidateSet]:
        if self.kind == "sns":
            return recursive_select(g, v, self.schedule)
        if self.kind == "direct":
            return direct_select(g, v, self.gamma)
        if self.kind == "random":
            return random_select(g, v, self.gamma, self.k, self.seed)
        return None


def failure_rate(g: TextAttributedGraph, targets: list[int], strategy: SelectionStrategy) -> float:
    """Fraction of targets for which the strategy finds no labeled neighbor."""
    if not targets:
        raise InvariantViolation("targets must be non-empty")
    if strategy.kind == "none":
        raise InvariantViolation("failure rate is undefined for strategy 'none'")
    failed = 0
    for v in targets:
        cs = strategy.select(g, v)
        if cs.failed:
            failed += 1
    return failed / len(targets)
