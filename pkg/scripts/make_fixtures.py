#!/usr/bin/env python3
"""Regenerate the synthetic test fixture under tests/fixtures/.

A small graph over the cora label set with label-clustered embeddings, plus
a matching EMB-v1 file.  Fully deterministic; regenerate only on purpose.
"""

import random
from pathlib import Path

from graphprompt.graph import (
    NodeRecord,
    SplitSpec,
    TextAttributedGraph,
    apply_split,
    save_graph,
)
from graphprompt.graph import _build_adjacency
from graphprompt.profiles import get_profile
from graphprompt.ranking import EmbeddingStore, save_embeddings

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

N = 250
DIM = 16
SEED = 20240610


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    profile = get_profile("cora")
    labels = [rng.choice(profile.label_set) for _ in range(N)]
    nodes = tuple(
        NodeRecord(
            id=i,
            title=f"Study {i} on {labels[i].lower()}",
            abstract=f"Synthetic abstract {i} discussing {labels[i].lower()}.",
            label=labels[i],
        )
        for i in range(N)
    )
    # homophilous edges: same-label pairs are denser
    edges = set()
    for u in range(N):
        for v in range(u + 1, N):
            p = 0.060 if labels[u] == labels[v] else 0.012
            if rng.random() < p:
                edges.add((u, v))
    g = TextAttributedGraph(
        nodes=nodes,
        adjacency=_build_adjacency(set(range(N)), edges),
        label_set=profile.label_set,
        dataset_profile_id="cora",
    )
    g = apply_split(g, SplitSpec(train_per_class=8, val_size=30,
                                 test_size=80, seed=7))
    save_graph(g, OUT / "cora_fixture.jsonl")

    store = EmbeddingStore(dim=DIM, source_tag="fixture")
    centroids = {
        lbl: [rng.gauss(0, 1) for _ in range(DIM)] for lbl in profile.label_set
    }
    for i in range(N):
        c = centroids[labels[i]]
        store.add(i, [c[d] + rng.gauss(0, 0.4) for d in range(DIM)])
    save_embeddings(store, OUT / "cora_fixture.emb")
    print(f"wrote {N} nodes, {g.num_edges()} edges, {len(store)} vectors")


if __name__ == "__main__":
    main()
