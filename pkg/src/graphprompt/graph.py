"""Text-attributed graph loading, validation, and structural queries.

The canonical on-disk form is JSONL-v1: a header line
``{"format": "jsonl-v1", "labels": [...], "dataset": "cora"}`` followed by one
``{"node": {...}}`` or ``{"edge": [u, v]}`` object per line.  Graphs are
undirected; input edges are symmetrized and deduplicated on load.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import (
    InsufficientNodes,
    InvariantViolation,
    ParseError,
    UnknownNode,
)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class NodeRecord:
    id: int
    title: str
    abstract: str = ""
    label: Optional[str] = None
    split: Optional[str] = None

    def text(self) -> str:
        """Node text as consumed by the encoder and the prompt templates."""
        return f"{self.title}\n{self.abstract}"


@dataclass(frozen=True)
class SplitSpec:
    train_per_class: int
    val_size: int
    test_size: int
    seed: int = 0

    def __post_init__(self):
        if min(self.train_per_class, self.val_size, self.test_size) < 0:
            raise InvariantViolation("split sizes must be non-negative")


@dataclass(frozen=True)
class TextAttributedGraph:
    nodes: tuple[NodeRecord, ...]
    adjacency: dict[int, tuple[int, ...]]
    label_set: tuple[str, ...]
    dataset_profile_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> NodeRecord:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        if node_id not in self._by_id:
            raise UnknownNode(node_id)
        return self.adjacency.get(node_id, ())

    def ids_with_split(self, split: str) -> list[int]:
        return [n.id for n in self.nodes if n.split == split]

    def num_edges(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvariantViolation("duplicate node ids")
        if ids and (min(ids) != 0 or max(ids) != len(ids) - 1):
            raise InvariantViolation("node ids must be dense in [0, |V|)")
        known = set(ids)
        labels = set(self.label_set)
        for n in self.nodes:
            if not n.title.strip():
                raise InvariantViolation(f"node {n.id}: empty title")
            if n.label is not None and n.label not in labels:
                raise InvariantViolation(f"node {n.id}: unknown label {n.label!r}")
            if n.split == "train" and n.label is None:
                raise InvariantViolation(f"node {n.id}: train node without label")
            if n.split is not None and n.split not in SPLITS:
                raise InvariantViolation(f"node {n.id}: bad split {n.split!r}")
        for u, nbrs in self.adjacency.items():
            if u not in known:
                raise InvariantViolation(f"adjacency references unknown node {u}")
            for v in nbrs:
                if v not in known:
                    raise InvariantViolation(f"edge ({u},{v}): unknown endpoint {v}")
                if v == u:
                    raise InvariantViolation(f"self-loop at node {u}")
                if u not in self.adjacency.get(v, ()):
                    raise InvariantViolation(f"asymmetric edge ({u},{v})")
            if len(set(nbrs)) != len(nbrs):
                raise InvariantViolation(f"duplicate edges at node {u}")


def _build_adjacency(num_nodes_known: set[int], edges: Iterable[tuple[int, int]]):
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        if u == v:
            raise InvariantViolation(f"self-loop at node {u}")
        for a in (u, v):
            if a not in num_nodes_known:
                raise InvariantViolation(f"edge ({u},{v}): unknown endpoint {a}")
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return {u: tuple(sorted(vs)) for u, vs in adj.items()}


def load_graph(path: str | Path, format: str = "jsonl-v1") -> TextAttributedGraph:
    """Load and validate a JSONL-v1 graph file."""
    if format != "jsonl-v1":
        raise ParseError(f"unsupported format {format!r}")
    path = Path(path)
    nodes: list[NodeRecord] = []
    edges: list[tuple[int, int]] = []
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            if line_no == 1:
                if not isinstance(obj, dict) or obj.get("format") != "jsonl-v1":
                    raise ParseError("missing jsonl-v1 header", line_no)
                header = obj
                continue
            if "node" in obj:
                rec = obj["node"]
                try:
                    nodes.append(
                        NodeRecord(
                            id=int(rec["id"]),
                            title=str(rec["title"]),
                            abstract=str(rec.get("abstract") or ""),
                            label=rec.get("label"),
                            split=rec.get("split"),
                        )
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad node record: {exc}", line_no) from exc
            elif "edge" in obj:
                e = obj["edge"]
                if not (isinstance(e, list) and len(e) == 2):
                    raise ParseError("edge must be a [u, v] pair", line_no)
                edges.append((int(e[0]), int(e[1])))
            else:
                raise ParseError("line is neither a node nor an edge", line_no)
    if header is None:
        raise ParseError("empty file: missing header", 1)
    nodes.sort(key=lambda n: n.id)
    ids = {n.id for n in nodes}
    if len(ids) != len(nodes):
        raise InvariantViolation("duplicate node ids")
    g = TextAttributedGraph(
        nodes=tuple(nodes),
        adjacency=_build_adjacency(ids, edges),
        label_set=tuple(header.get("labels") or ()),
        dataset_profile_id=str(header.get("dataset") or ""),
    )
    g.validate()
    return g


def save_graph(g: TextAttributedGraph, path: str | Path) -> None:
    """Write a graph in JSONL-v1 form (atomic: write then rename)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "format": "jsonl-v1",
            "labels": list(g.label_set),
            "dataset": g.dataset_profile_id,
        }) + "\n")
        for n in g.nodes:
            fh.write(json.dumps({"node": {
                "id": n.id,
                "title": n.title,
                "abstract": n.abstract,
                "label": n.label,
                "split": n.split,
            }}) + "\n")
        for u in sorted(g.adjacency):
            for v in g.adjacency[u]:
                if u < v:
                    fh.write(json.dumps({"edge": [u, v]}) + "\n")
    tmp.replace(path)


def hop_distances(g: TextAttributedGraph, v: int, max_hop: Optional[int] = None) -> dict[int, int]:
    """Shortest-path hop distance from ``v`` to every reachable node (v itself
    excluded), optionally cut off at ``max_hop``."""
    g.node(v)
    dist = {v: 0}
    frontier = deque([v])
    while frontier:
        u = frontier.popleft()
        d = dist[u]
        if max_hop is not None and d >= max_hop:
            continue
        for w in g.adjacency.get(u, ()):
            if w not in dist:
                dist[w] = d + 1
                frontier.append(w)
    dist.pop(v)
    return dist


def neighbors_at_hop(g: TextAttributedGraph, v: int, h: int) -> set[int]:
    """Nodes at shortest-path distance exactly ``h`` from ``v``."""
    if h < 1:
        raise InvariantViolation("hop count must be >= 1")
    return {u for u, d in hop_distances(g, v, max_hop=h).items() if d == h}


def apply_split(g: TextAttributedGraph, spec: SplitSpec) -> TextAttributedGraph:
    """Assign train/val/test masks; deterministic in (graph content, seed).

    Train is sampled per class from labeled nodes; val and test are sampled
    from the remaining labeled nodes so evaluation always has gold labels.
    """
    rng = random.Random(spec.seed)
    by_class: dict[str, list[int]] = {lbl: [] for lbl in g.label_set}
    for n in g.nodes:
        if n.label is not None:
            by_class[n.label].append(n.id)

    train: list[int] = []
    for lbl in g.label_set:
        pool = sorted(by_class[lbl])
        if len(pool) < spec.train_per_class:
            raise InsufficientNodes(
                f"class {lbl!r} has {len(pool)} labeled nodes, "
                f"need {spec.train_per_class}"
            )
        train.extend(rng.sample(pool, spec.train_per_class))
    taken = set(train)

    remaining = sorted(i for ids in by_class.values() for i in ids if i not in taken)
    if len(remaining) < spec.val_size + spec.test_size:
        raise InsufficientNodes(
            f"{len(remaining)} labeled nodes left for val+test, "
            f"need {spec.val_size + spec.test_size}"
        )
    val = rng.sample(remaining, spec.val_size)
    taken.update(val)
    remaining = [i for i in remaining if i not in taken]
    test = rng.sample(remaining, spec.test_size)

    assignment = {i: "train" for i in train}
    assignment.update({i: "val" for i in val})
    assignment.update({i: "test" for i in test})
    new_nodes = tuple(
        replace(n, split=assignment.get(n.id)) for n in g.nodes
    )
    out = TextAttributedGraph(
        nodes=new_nodes,
        adjacency=g.adjacency,
        label_set=g.label_set,
        dataset_profile_id=g.dataset_profile_id,
    )
    out.validate()
    return out
