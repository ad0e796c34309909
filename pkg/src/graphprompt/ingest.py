"""Converters from public dataset distributions to JSONL-v1.

Two raw layouts are supported:

* ``linqs``: ``<name>.content`` / ``<name>.cites`` pairs (Cora, CiteSeer).
  These carry no node text, so titles are synthesized as ``"Paper <id>"``.
* ``planetoid``: the pickled ``ind.<name>.*`` files.  This layout also
  carries the standard 20-per-class/500/1000 split, which is preserved.

Dangling citations (an endpoint absent from the node table) and self-loops
are dropped with a count, matching how these distributions are commonly
cleaned.
"""

from __future__ import annotations

import pickle
from collections import defaultdict
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError
from .graph import NodeRecord, TextAttributedGraph, _build_adjacency
from .profiles import get_profile

# raw label token -> profile label string
_LINQS_LABEL_MAPS = {
    "cora": {
        "Rule_Learning": "Rule Learning",
        "Case_Based": "Case Based",
        "Genetic_Algorithms": "Genetic Algorithms",
        "Theory": "Theory",
        "Reinforcement_Learning": "Reinforcement Learning",
        "Probabilistic_Methods": "Probabilistic Methods",
        "Neural_Networks": "Neural Networks",
    },
    "citeseer": {
        "Agents": "Agents",
        "ML": "Machine Learning",
        "IR": "Information Retrieval",
        "DB": "Database",
        "HCI": "Human Computer Interaction",
        "AI": "Artificial Intelligence",
    },
}


def detect_format(raw_dir: str | Path, dataset: str) -> str:
    raw_dir = Path(raw_dir)
    short = _short_name(dataset)
    if (raw_dir / f"{short}.content").exists():
        return "linqs"
    if (raw_dir / f"ind.{short}.graph").exists():
        return "planetoid"
    raise DataError(
        f"{raw_dir}: found neither {short}.content nor ind.{short}.graph"
    )


def _short_name(dataset: str) -> str:
    return {"ogbn-arxiv": "arxiv", "ogbn-products": "products"}.get(dataset, dataset)


def convert(raw_dir: str | Path, dataset: str, fmt: str | None = None) -> TextAttributedGraph:
    fmt = fmt or detect_format(raw_dir, dataset)
    if fmt == "linqs":
        return convert_linqs(raw_dir, dataset)
    if fmt == "planetoid":
        return convert_planetoid(raw_dir, dataset)
    raise DataError(f"unknown raw format {fmt!r}")


def convert_linqs(raw_dir: str | Path, dataset: str) -> TextAttributedGraph:
    raw_dir = Path(raw_dir)
    profile = get_profile(dataset)
    label_map = _LINQS_LABEL_MAPS.get(dataset)
    if label_map is None:
        raise DataError(f"no content/cites label mapping for dataset {dataset!r}")
    short = _short_name(dataset)

    ids: dict[str, int] = {}
    nodes: list[NodeRecord] = []
    content = raw_dir / f"{short}.content"
    with content.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 2:
                raise ParseError("expected <id> <features...> <label>", line_no)
            raw_id, raw_label = parts[0], parts[-1]
            if raw_id in ids:
                raise ParseError(f"duplicate node id {raw_id!r}", line_no)
            label = label_map.get(raw_label)
            if label is None:
                raise ParseError(f"unknown label {raw_label!r}", line_no)
            ids[raw_id] = len(nodes)
            nodes.append(NodeRecord(
                id=len(nodes), title=f"Paper {raw_id}", abstract="", label=label,
            ))

    edges = set()
    dropped = 0
    cites = raw_dir / f"{short}.cites"
    with cites.open("r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            a, b = ids.get(parts[0]), ids.get(parts[1])
            if a is None or b is None or a == b:
                dropped += 1
                continue
            edges.add((min(a, b), max(a, b)))
    if dropped:
        print(f"note: dropped {dropped} dangling or self citations")

    g = TextAttributedGraph(
        nodes=tuple(nodes),
        adjacency=_build_adjacency(set(range(len(nodes))), edges),
        label_set=profile.label_set,
        dataset_profile_id=dataset,
    )
    g.validate()
    return g


def _load_pickle(path: Path):
    with path.open("rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert_planetoid(raw_dir: str | Path, dataset: str) -> TextAttributedGraph:
    raw_dir = Path(raw_dir)
    profile = get_profile(dataset)
    short = _short_name(dataset)

    y = _load_pickle(raw_dir / f"ind.{short}.y")
    ty = _load_pickle(raw_dir / f"ind.{short}.ty")
    ally = _load_pickle(raw_dir / f"ind.{short}.ally")
    graph = _load_pickle(raw_dir / f"ind.{short}.graph")
    test_idx = [int(t) for t in
                (raw_dir / f"ind.{short}.test.index").read_text().split()]

    # test indices may have gaps (isolated nodes); fill the full range
    lo, hi = min(test_idx), max(test_idx)
    full = np.zeros((hi - lo + 1, ty.shape[1]), dtype=ty.dtype)
    full[[t - lo for t in test_idx]] = np.asarray(ty)
    labels = np.vstack([np.asarray(ally), full])

    n_total = labels.shape[0]
    n_classes = labels.shape[1]
    if n_classes != len(profile.label_set):
        raise DataError(
            f"{dataset}: raw data has {n_classes} classes, "
            f"profile has {len(profile.label_set)}"
        )

    split = {}
    for i in range(y.shape[0]):
        split[i] = "train"
    for i in range(y.shape[0], y.shape[0] + 500):
        split[i] = "val"
    for t in test_idx:
        split[t] = "test"

    nodes = []
    for i in range(n_total):
        row = labels[i]
        label = profile.label_set[int(row.argmax())] if row.sum() > 0 else None
        nodes.append(NodeRecord(
            id=i, title=f"Paper {i}", abstract="", label=label,
            split=split.get(i) if label is not None else None,
        ))

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u == v or u >= n_total or v >= n_total:
                continue
            edges.add((min(u, v), max(u, v)))

    g = TextAttributedGraph(
        nodes=tuple(nodes),
        adjacency=_build_adjacency(set(range(n_total)), edges),
        label_set=profile.label_set,
        dataset_profile_id=dataset,
    )
    g.validate()
    return g
