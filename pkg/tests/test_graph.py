import json
import random

import networkx as nx
import pytest

from graphprompt.errors import (
    InsufficientNodes,
    InvariantViolation,
    ParseError,
)
from graphprompt.graph import (
    SplitSpec,
    apply_split,
    hop_distances,
    load_graph,
    neighbors_at_hop,
    save_graph,
)

from conftest import make_graph, random_graph, write_jsonl

HEADER = {"format": "jsonl-v1", "labels": ["A", "B", "C"], "dataset": ""}


def node_line(i, label=None, split=None, title=None):
    return {"node": {"id": i, "title": title or f"Paper {i}", "abstract": "",
                     "label": label, "split": split}}


class TestLoadGraph:
    def test_edges_are_symmetrized(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER, [
            node_line(0), node_line(1), node_line(2),
            {"edge": [0, 1]}, {"edge": [1, 2]},
        ])
        g = load_graph(p)
        assert g.neighbors(1) == (0, 2)
        assert g.neighbors(0) == (1,)

    def test_self_loop_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER,
                        [node_line(0), {"edge": [0, 0]}])
        with pytest.raises(InvariantViolation, match="self-loop"):
            load_graph(p)

    def test_duplicate_edges_collapse(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER, [
            node_line(0), node_line(1),
            {"edge": [0, 1]}, {"edge": [1, 0]}, {"edge": [0, 1]},
        ])
        assert load_graph(p).num_edges() == 1

    def test_malformed_line_reports_line_number(self, tmp_path):
        p = tmp_path / "g.jsonl"
        p.write_text(json.dumps(HEADER) + "\n{not json\n")
        with pytest.raises(ParseError, match="line 2"):
            load_graph(p)

    def test_unknown_label_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER, [node_line(0, label="Z")])
        with pytest.raises(InvariantViolation, match="unknown label"):
            load_graph(p)

    def test_dangling_edge_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER,
                        [node_line(0), {"edge": [0, 5]}])
        with pytest.raises(InvariantViolation, match="unknown endpoint"):
            load_graph(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER,
                        [node_line(0), node_line(0)])
        with pytest.raises(InvariantViolation, match="duplicate"):
            load_graph(p)

    def test_non_dense_ids_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER,
                        [node_line(0), node_line(2)])
        with pytest.raises(InvariantViolation, match="dense"):
            load_graph(p)

    def test_empty_title_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER, [node_line(0, title="  ")])
        with pytest.raises(InvariantViolation, match="empty title"):
            load_graph(p)

    def test_train_without_label_rejected(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER,
                        [node_line(0, split="train")])
        with pytest.raises(InvariantViolation, match="without label"):
            load_graph(p)

    def test_preexisting_split_preserved(self, tmp_path):
        p = write_jsonl(tmp_path / "g.jsonl", HEADER, [
            node_line(0, label="A", split="train"),
            node_line(1, label="B", split="test"),
        ])
        g = load_graph(p)
        assert g.node(0).split == "train"
        assert g.node(1).split == "test"

    def test_round_trip(self, tmp_path):
        rng = random.Random(7)
        g = random_graph(rng, n=40)
        save_graph(g, tmp_path / "g.jsonl")
        g2 = load_graph(tmp_path / "g.jsonl")
        assert g2.nodes == g.nodes
        assert g2.adjacency == g.adjacency


class TestNeighborsAtHop:
    def test_path_graph(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        assert neighbors_at_hop(g, 0, 2) == {2}

    def test_triangle_has_no_hop_two(self):
        g = make_graph(3, [(0, 1), (1, 2), (0, 2)])
        assert neighbors_at_hop(g, 0, 2) == set()

    def test_matches_bfs_oracle_on_random_graphs(self):
        rng = random.Random(11)
        for _ in range(25):
            g = random_graph(rng, n=50)
            nxg = nx.Graph()
            nxg.add_nodes_from(range(50))
            for u, vs in g.adjacency.items():
                nxg.add_edges_from((u, v) for v in vs)
            v = rng.randrange(50)
            oracle = nx.single_source_shortest_path_length(nxg, v)
            for h in range(1, 5):
                expect = {u for u, d in oracle.items() if d == h}
                assert neighbors_at_hop(g, v, h) == expect

    def test_hops_partition_component(self):
        rng = random.Random(3)
        g = random_graph(rng, n=30, edge_prob=0.1)
        v = 0
        dist = hop_distances(g, v)
        seen = set()
        union = set()
        for h in range(1, 31):
            layer = neighbors_at_hop(g, v, h)
            assert not (layer & union)
            union |= layer
        assert union == set(dist)


class TestApplySplit:
    def _labeled_graph(self, n=200, seed=5):
        rng = random.Random(seed)
        labels = {i: rng.choice("ABC") for i in range(n)}
        return make_graph(n, [], labels=labels)

    def test_counts(self):
        g = self._labeled_graph()
        out = apply_split(g, SplitSpec(20, 30, 40, seed=1))
        assert len(out.ids_with_split("train")) == 60  # 3 classes x 20
        assert len(out.ids_with_split("val")) == 30
        assert len(out.ids_with_split("test")) == 40

    def test_per_class_exact(self):
        g = self._labeled_graph()
        out = apply_split(g, SplitSpec(15, 0, 0, seed=2))
        for lbl in "ABC":
            count = sum(1 for n in out.nodes
                        if n.split == "train" and n.label == lbl)
            assert count == 15

    def test_masks_disjoint(self):
        g = self._labeled_graph()
        out = apply_split(g, SplitSpec(10, 25, 25, seed=3))
        ids = (out.ids_with_split("train") + out.ids_with_split("val")
               + out.ids_with_split("test"))
        assert len(ids) == len(set(ids))

    def test_zero_test_size_ok(self):
        g = self._labeled_graph()
        out = apply_split(g, SplitSpec(5, 10, 0, seed=0))
        assert out.ids_with_split("test") == []

    def test_deterministic(self):
        g = self._labeled_graph()
        a = apply_split(g, SplitSpec(10, 20, 20, seed=9))
        b = apply_split(g, SplitSpec(10, 20, 20, seed=9))
        assert a.nodes == b.nodes

    def test_seed_changes_masks(self):
        g = self._labeled_graph()
        a = apply_split(g, SplitSpec(10, 20, 20, seed=1))
        b = apply_split(g, SplitSpec(10, 20, 20, seed=2))
        assert a.nodes != b.nodes

    def test_insufficient_class_raises(self):
        g = make_graph(3, [], labels={0: "A", 1: "B", 2: "C"})
        with pytest.raises(InsufficientNodes):
            apply_split(g, SplitSpec(2, 0, 0, seed=0))

    def test_val_and_test_are_labeled(self):
        g = self._labeled_graph()
        out = apply_split(g, SplitSpec(10, 20, 20, seed=4))
        for split in ("val", "test"):
            for i in out.ids_with_split(split):
                assert out.node(i).label is not None
