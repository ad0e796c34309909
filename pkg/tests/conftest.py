import json
import random
from pathlib import Path

import pytest

from graphprompt.graph import NodeRecord, TextAttributedGraph
from graphprompt.graph import _build_adjacency

LABELS = ("A", "B", "C")


def make_graph(n, edges, labels=None, splits=None, label_set=LABELS,
               dataset="", titles=None, abstracts=None):
    """Build a small in-memory graph for tests.

    ``labels``/``splits`` map node id -> value; unlisted nodes stay
    unlabeled/unsplit.
    """
    labels = labels or {}
    splits = splits or {}
    titles = titles or {}
    abstracts = abstracts or {}
    nodes = tuple(
        NodeRecord(
            id=i,
            title=titles.get(i, f"Paper {i}"),
            abstract=abstracts.get(i, ""),
            label=labels.get(i),
            split=splits.get(i),
        )
        for i in range(n)
    )
    g = TextAttributedGraph(
        nodes=nodes,
        adjacency=_build_adjacency(set(range(n)), edges),
        label_set=tuple(label_set),
        dataset_profile_id=dataset,
    )
    g.validate()
    return g


def random_graph(rng: random.Random, n=None, edge_prob=None, labeled_frac=0.3,
                 label_set=LABELS):
    """Random test graph with a train-labeled subset."""
    n = n if n is not None else rng.randint(5, 60)
    edge_prob = edge_prob if edge_prob is not None else rng.uniform(0.02, 0.15)
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < edge_prob
    ]
    labels, splits = {}, {}
    for i in range(n):
        if rng.random() < labeled_frac:
            labels[i] = rng.choice(label_set)
            splits[i] = "train"
    return make_graph(n, edges, labels=labels, splits=splits, label_set=label_set)


def write_jsonl(path: Path, header: dict, lines: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for obj in lines:
            fh.write(json.dumps(obj) + "\n")
    return path


@pytest.fixture
def star_graph():
    """Center node 0 (test), three train-labeled leaves."""
    return make_graph(
        4,
        edges=[(0, 1), (0, 2), (0, 3)],
        labels={1: "A", 2: "A", 3: "B"},
        splits={0: "test", 1: "train", 2: "train", 3: "train"},
    )


@pytest.fixture
def path_graph_7():
    """Path 0-1-2-3-4-5-6 with only node 6 train-labeled."""
    return make_graph(
        7,
        edges=[(i, i + 1) for i in range(6)],
        labels={6: "A"},
        splits={0: "test", 6: "train"},
    )


FIXTURES = Path(__file__).parent / "fixtures"
