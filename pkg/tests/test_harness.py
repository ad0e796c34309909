import json
import random
from collections import Counter

import pytest

from graphprompt.errors import DataError, MixedDatasets, SampleTooLarge
from graphprompt.graph import load_graph
from graphprompt.harness import (
    ExperimentConfig,
    compare_runs,
    load_report,
    report_digest,
    run_experiment,
    subsample_test,
    topk_neighbor_accuracy,
)
from graphprompt.ranking import RankedNeighbors, load_embeddings
from graphprompt.selection import SelectionStrategy, failure_rate

from conftest import FIXTURES, make_graph, random_graph
from oracles import majority_vote_accuracy


@pytest.fixture(scope="module")
def cora_fixture():
    g = load_graph(FIXTURES / "cora_fixture.jsonl")
    store = load_embeddings(FIXTURES / "cora_fixture.emb")
    return g, store


def mock_cfg(tmp_path, **kw):
    defaults = dict(
        dataset_profile_id="cora",
        graph_path=str(FIXTURES / "cora_fixture.jsonl"),
        embeddings_path=str(FIXTURES / "cora_fixture.emb"),
        strategy="sns",
        variant="text+label",
        report_dir=str(tmp_path / "reports"),
        workers=2,
        model=None,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestSubsampleTest:
    def test_exhaustive(self):
        ids = [5, 1, 9]
        assert subsample_test(ids, 3, seed=0) == [1, 5, 9]

    def test_deterministic(self):
        ids = list(range(100))
        assert subsample_test(ids, 10, 4) == subsample_test(ids, 10, 4)

    def test_sorted_output(self):
        out = subsample_test(list(range(1000)), 50, 3)
        assert out == sorted(out)

    def test_too_large(self):
        with pytest.raises(SampleTooLarge):
            subsample_test([1, 2], 3, 0)

    def test_uniform_over_seeds(self):
        counts = Counter()
        trials = 5000
        for seed in range(trials):
            counts.update(subsample_test(range(10), 2, seed))
        for i in range(10):
            assert abs(counts[i] / (2 * trials) - 0.1) < 0.02


class TestTopkNeighborAccuracy:
    def test_perfect_homophily(self):
        g = make_graph(3, [], labels={0: "A", 1: "A", 2: "A"})
        ranked = [RankedNeighbors(0, ((1, 1, 0.9), (2, 1, 0.8)), 2)]
        assert topk_neighbor_accuracy(g, ranked) == 1.0

    def test_pair_arithmetic(self):
        labels = {0: "A", 1: "A", 2: "A", 3: "B", 4: "B",
                  5: "B", 6: "B", 7: "B", 8: "B", 9: "B"}
        g = make_graph(10, [], labels=labels)
        # target 0: 2 of 4 match; target 5: 4 of 4 match; 6/8 overall
        r0 = RankedNeighbors(0, tuple((i, 1, 0.5) for i in (1, 2, 3, 4)), 4)
        r5 = RankedNeighbors(5, tuple((i, 1, 0.5) for i in (6, 7, 8, 9)), 4)
        assert topk_neighbor_accuracy(g, [r0, r5]) == 0.75

    def test_empty_sets_excluded(self):
        g = make_graph(2, [], labels={0: "A", 1: "A"})
        ranked = [RankedNeighbors(0, ((1, 1, 0.9),), 1),
                  RankedNeighbors(1, (), 1)]
        assert topk_neighbor_accuracy(g, ranked) == 1.0

    def test_random_labels_near_base_rate(self):
        rng = random.Random(13)
        C = 4
        label_set = tuple("WXYZ")
        labels = {i: rng.choice(label_set) for i in range(400)}
        g = make_graph(400, [], labels=labels, label_set=label_set)
        ranked = []
        for t in range(0, 200):
            nbrs = rng.sample(range(200, 400), 5)
            ranked.append(RankedNeighbors(
                t, tuple((n, 1, 0.5) for n in nbrs), 5))
        acc = topk_neighbor_accuracy(g, ranked)
        n_pairs = 200 * 5
        sigma = (0.25 * 0.75 / n_pairs) ** 0.5
        assert abs(acc - 1 / C) < 3 * sigma + 0.01


class TestRunExperiment:
    def test_vanilla_mock_equals_base_rate(self, tmp_path, cora_fixture):
        g, _ = cora_fixture
        cfg = mock_cfg(tmp_path, strategy="none", variant="none",
                       embeddings_path=None)
        report = run_experiment(cfg)
        first = g.label_set[0]
        golds = [g.node(v).label for v in g.ids_with_split("test")]
        base_rate = sum(lbl == first for lbl in golds) / len(golds)
        assert report["accuracy"] == pytest.approx(base_rate, abs=1e-12)
        assert report["invalid_rate"] == 0.0

    def test_sns_mock_matches_majority_vote_oracle(self, tmp_path, cora_fixture):
        g, store = cora_fixture
        cfg = mock_cfg(tmp_path)
        report = run_experiment(cfg)
        oracle = majority_vote_accuracy(
            g, store, g.ids_with_split("test"), k=4)
        assert report["accuracy"] == pytest.approx(oracle, abs=1e-6)

    def test_failure_rate_matches_selection_module(self, tmp_path, cora_fixture):
        g, _ = cora_fixture
        from graphprompt.profiles import get_profile
        cfg = mock_cfg(tmp_path)
        report = run_experiment(cfg)
        strat = cfg.selection_strategy(get_profile("cora"))
        expect = failure_rate(g, g.ids_with_split("test"), strat)
        assert report["failure_rate"] == pytest.approx(expect, abs=1e-12)

    def test_deterministic_reports(self, tmp_path, cora_fixture):
        a = run_experiment(mock_cfg(tmp_path / "a"))
        b = run_experiment(mock_cfg(tmp_path / "b"))
        assert report_digest(a) == report_digest(b)

    def test_report_round_trip(self, tmp_path, cora_fixture):
        cfg = mock_cfg(tmp_path)
        report = run_experiment(cfg)
        path = (tmp_path / "reports" / "cora" / f"{cfg.config_hash()}.json")
        loaded = load_report(path)
        assert loaded == json.loads(json.dumps(report))
        assert report_digest(loaded) == report_digest(report)

    def test_resume_from_partial(self, tmp_path, cora_fixture):
        cfg = mock_cfg(tmp_path)
        full = run_experiment(cfg)
        report_dir = tmp_path / "reports" / "cora"
        final = report_dir / f"{cfg.config_hash()}.json"
        partial = report_dir / f"{cfg.config_hash()}.partial.jsonl"
        # simulate a crash after half the nodes completed
        half = full["records"][: len(full["records"]) // 2]
        final.unlink()
        with partial.open("w") as fh:
            for rec in half:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        resumed = run_experiment(cfg)
        assert report_digest(resumed) == report_digest(full)
        assert not partial.exists()

    def test_requests_counted_per_evaluated_node(self, tmp_path, cora_fixture):
        g, _ = cora_fixture
        cfg = mock_cfg(tmp_path)
        report = run_experiment(cfg)
        assert report["cost"]["requests"] == len(g.ids_with_split("test"))
        assert report["cost"]["total_prompt_chars"] == sum(
            r["prompt_chars"] for r in report["records"])

    def test_max_requests_cap(self, tmp_path):
        cfg = mock_cfg(tmp_path, max_requests=5)
        with pytest.raises(DataError, match="cap"):
            run_experiment(cfg)

    def test_subsample_limits_targets(self, tmp_path):
        cfg = mock_cfg(tmp_path, test_subsample=10)
        report = run_experiment(cfg)
        assert report["n"] == 10

    def test_strategy_none_forbids_variant(self):
        with pytest.raises(DataError):
            ExperimentConfig(dataset_profile_id="cora", graph_path="x",
                             strategy="none", variant="label")

    def test_workers_do_not_change_results(self, tmp_path, cora_fixture):
        a = run_experiment(mock_cfg(tmp_path / "w1", workers=1))
        b = run_experiment(mock_cfg(tmp_path / "w4", workers=4))
        assert report_digest(a) == report_digest(b)

    def test_mock_consistency_on_random_graphs(self, tmp_path):
        from graphprompt.graph import save_graph
        from graphprompt.profiles import get_profile
        from graphprompt.ranking import EmbeddingStore, save_embeddings
        cora_labels = get_profile("cora").label_set
        rng = random.Random(99)
        for trial in range(5):
            n = rng.randint(20, 60)
            g = random_graph(rng, n=n, edge_prob=0.08, labeled_frac=0.4,
                             label_set=cora_labels)
            # make some unlabeled nodes test targets
            from dataclasses import replace
            nodes = [
                replace(node, split="test") if node.split is None and rng.random() < 0.5
                else node
                for node in g.nodes
            ]
            nodes = [
                replace(node, label=rng.choice(g.label_set))
                if node.split == "test" and node.label is None else node
                for node in nodes
            ]
            from graphprompt.graph import TextAttributedGraph
            g = TextAttributedGraph(tuple(nodes), g.adjacency, g.label_set, "cora")
            if not g.ids_with_split("test"):
                continue
            store = EmbeddingStore(dim=8)
            for node in g.nodes:
                store.add(node.id, [rng.gauss(0, 1) for _ in range(8)])
            gpath = tmp_path / f"g{trial}.jsonl"
            epath = tmp_path / f"g{trial}.emb"
            save_graph(g, gpath)
            save_embeddings(store, epath)
            cfg = mock_cfg(tmp_path / f"r{trial}", graph_path=str(gpath),
                           embeddings_path=str(epath), k=3)
            report = run_experiment(cfg)
            oracle = majority_vote_accuracy(
                g, store, g.ids_with_split("test"), k=3)
            assert report["accuracy"] == pytest.approx(oracle, abs=1e-6)


class TestCompareRuns:
    def test_single_report(self, tmp_path, cora_fixture):
        report = run_experiment(mock_cfg(tmp_path))
        table, csv_text = compare_runs([report])
        assert "sns" in table
        assert csv_text.splitlines()[0].startswith("dataset,strategy")

    def test_mixed_datasets_rejected(self, tmp_path, cora_fixture):
        report = run_experiment(mock_cfg(tmp_path))
        other = dict(report, dataset="pubmed")
        with pytest.raises(MixedDatasets):
            compare_runs([report, other])

    def test_delta_against_vanilla_row(self, tmp_path, cora_fixture):
        sns = run_experiment(mock_cfg(tmp_path / "s"))
        vanilla = run_experiment(mock_cfg(
            tmp_path / "v", strategy="none", variant="none",
            embeddings_path=None))
        table, csv_text = compare_runs([sns, vanilla])
        assert "+0.0000" in table or "-0.0000" in table or "0.0000" in table
        rows = csv_text.strip().splitlines()
        assert len(rows) == 3

    def test_csv_reparse_matches(self, tmp_path, cora_fixture):
        import csv as csv_mod
        import io
        report = run_experiment(mock_cfg(tmp_path))
        _, csv_text = compare_runs([report])
        rows = list(csv_mod.DictReader(io.StringIO(csv_text)))
        assert float(rows[0]["accuracy"]) == pytest.approx(
            report["accuracy"], abs=1e-6)
        assert int(rows[0]["n"]) == report["n"]
