"""Experiment orchestration: selection, ranking, prompting, prediction,
metrics, and report persistence.

Reports are JSON files at ``<report_dir>/<dataset>/<config-hash>.json``.
Per-node results stream into a ``.partial.jsonl`` sidecar as they complete,
so an interrupted run resumes without repeating finished nodes.  Record
order in the final report is by node id, independent of completion order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import (
    DataError,
    GraphPromptError,
    MixedDatasets,
    SampleTooLarge,
)
from .graph import TextAttributedGraph, load_graph
from .llm import INVALID, ChatClient, MockOracle, ModelConfig, parse_label
from .profiles import DatasetProfile, get_profile
from .prompts import attach_mode_decorations, build_prompt, render
from .ranking import (
    EmbeddingStore,
    RankedNeighbors,
    load_embeddings,
    rank_and_truncate,
    unranked_passthrough,
)
from .selection import AlphaSchedule, SelectionStrategy, failure_rate

SCHEMA_VERSION = 1

# timing fields carry no experimental content; excluded from report digests
TIMING_FIELDS = ("wall_time", "latency")

# config fields that describe where a run happened, not what it computed
RUN_ENV_FIELDS = ("graph_path", "embeddings_path", "report_dir", "workers")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_profile_id: str
    graph_path: str
    strategy: str = "sns"                  # sns | direct | random | none
    variant: str = "none"                  # none | label | text | text+label
    mode: str = "vanilla-zero-shot"
    k: Optional[int] = None                # None: profile default
    alpha: tuple[int, ...] = (2, 1, 1, 1, 1)
    gamma_max: int = 5
    gamma: int = 2
    seed: int = 0
    test_subsample: Optional[int] = None
    use_similarity: bool = True
    embeddings_path: Optional[str] = None
    report_dir: str = "reports"
    workers: int = 4
    char_budget: int = 12_000
    max_requests: int = 0                  # 0: no cap
    n_exemplars: int = 4
    model: Optional[ModelConfig] = None    # None: mock oracle

    def __post_init__(self):
        if self.strategy == "none" and self.variant != "none":
            raise DataError("strategy 'none' requires variant 'none'")
        if self.strategy != "none" and self.variant == "none":
            raise DataError(f"strategy {self.strategy!r} needs a neighbor variant")

    def resolved_k(self, profile: DatasetProfile) -> int:
        return self.k if self.k is not None else profile.k_default

    def needs_embeddings(self) -> bool:
        return self.strategy in ("sns", "direct") and self.use_similarity

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "model"}
        d["alpha"] = list(self.alpha)
        d["model"] = asdict(self.model) if self.model else "mock"
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def selection_strategy(self, profile: DatasetProfile) -> SelectionStrategy:
        return SelectionStrategy(
            kind=self.strategy,
            schedule=AlphaSchedule(per_layer=self.alpha, gamma_max=self.gamma_max),
            gamma=self.gamma,
            k=self.resolved_k(profile),
            seed=self.seed,
        )

    @classmethod
    def from_toml(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        model = None
        if isinstance(doc.get("model"), dict):
            model = ModelConfig(**doc["model"])
        kwargs = dict(
            dataset_profile_id=doc["dataset"],
            graph_path=doc["graph"],
            strategy=doc.get("strategy", "sns"),
            variant=doc.get("variant", "none"),
            mode=doc.get("mode", "vanilla-zero-shot"),
            k=doc.get("k"),
            alpha=tuple(doc.get("alpha", (2, 1, 1, 1, 1))),
            gamma_max=doc.get("gamma_max", 5),
            gamma=doc.get("gamma", 2),
            seed=doc.get("seed", 0),
            test_subsample=doc.get("test_subsample"),
            use_similarity=doc.get("use_similarity", True),
            embeddings_path=doc.get("embeddings"),
            report_dir=doc.get("report_dir", "reports"),
            workers=doc.get("workers", 4),
            char_budget=doc.get("char_budget", 12_000),
            max_requests=doc.get("max_requests", 0),
            n_exemplars=doc.get("n_exemplars", 4),
            model=model,
        )
        kwargs.update(overrides)
        return cls(**kwargs)


def subsample_test(ids: Sequence[int], n: int, seed: int) -> list[int]:
    """Seeded uniform sample without replacement, returned sorted."""
    ids = sorted(ids)
    if n > len(ids):
        raise SampleTooLarge(f"asked for {n} of {len(ids)} ids")
    rng = random.Random(seed)
    return sorted(rng.sample(ids, n))


def topk_neighbor_accuracy(g: TextAttributedGraph,
                           ranked_sets: Sequence[RankedNeighbors]) -> float:
    """Fraction of (target, selected neighbor) pairs whose labels agree.

    Targets with empty selections do not contribute pairs.  Gold labels are
    read at evaluation time only.
    """
    match = 0
    total = 0
    for ranked in ranked_sets:
        gold = g.node(ranked.target).label
        for node_id, _hop, _score in ranked.entries:
            total += 1
            if g.node(node_id).label == gold:
                match += 1
    return match / total if total else 0.0


def _rank_for(cfg: ExperimentConfig, profile: DatasetProfile,
              store: Optional[EmbeddingStore], cs) -> RankedNeighbors:
    k = cfg.resolved_k(profile)
    if cfg.strategy in ("sns", "direct") and cfg.use_similarity:
        return rank_and_truncate(store, cs, k)
    return unranked_passthrough(cs, k, cfg.seed)


def _evaluate_node(cfg, profile, g, store, strategy, completer, node_id):
    """Full per-node pipeline; returns a record dict."""
    node = g.node(node_id)
    record = {
        "node_id": node_id,
        "gold_label": node.label,
        "raw_response": "",
        "parsed_label": INVALID,
        "correct": False,
        "latency": 0.0,
        "retries_used": 0,
        "prompt_chars": 0,
        "selection_failed": False,
        "ranked": [],
        "error": None,
    }
    try:
        cs = strategy.select(g, node_id) if strategy.kind != "none" else None
        ranked = None
        if cs is not None and not cs.failed:
            ranked = _rank_for(cfg, profile, store, cs)
            record["ranked"] = [[n, h] for n, h, _ in ranked.entries]
        else:
            record["selection_failed"] = cs is not None
        if ranked is not None and ranked.entries:
            spec = build_prompt(
                g, node, ranked, profile,
                variant=cfg.variant,
                ranked_order=strategy.ranked and cfg.use_similarity,
                char_budget=cfg.char_budget,
            )
        else:
            spec = build_prompt(g, node, None, profile, variant="none",
                                char_budget=cfg.char_budget)
        if cfg.mode != "vanilla-zero-shot":
            pool = [g.node(i) for i in g.ids_with_split("train")]
            spec = attach_mode_decorations(spec, cfg.mode, pool, cfg.seed,
                                           cfg.n_exemplars)
        prompt = render(spec)
        record["prompt_chars"] = len(prompt)
        start = time.monotonic()
        raw = completer.complete(prompt)
        record["latency"] = time.monotonic() - start
        record["retries_used"] = getattr(completer, "last_retries_used", 0)
        record["raw_response"] = raw
        record["parsed_label"] = parse_label(raw, profile.label_set)
        record["correct"] = (record["parsed_label"] == node.label)
    except (GraphPromptError, OSError, ValueError, KeyError) as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def report_digest(report: dict) -> str:
    """Content hash of a report with timing and run-environment fields
    stripped, so identical experiments digest equally regardless of where
    or with how many workers they ran."""
    clone = json.loads(json.dumps(report))
    for key in TIMING_FIELDS:
        clone.pop(key, None)
    clone.pop("config_hash", None)
    for key in RUN_ENV_FIELDS:
        clone.get("config", {}).pop(key, None)
    # requests counts calls made by this invocation, which shrinks on resume
    clone.get("cost", {}).pop("requests", None)
    for rec in clone.get("records", []):
        for key in TIMING_FIELDS:
            rec.pop(key, None)
    blob = json.dumps(clone, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def run_experiment(cfg: ExperimentConfig,
                   graph: Optional[TextAttributedGraph] = None,
                   store: Optional[EmbeddingStore] = None,
                   progress=None) -> dict:
    """Run one experiment end to end and persist the report.

    Per-node failures are recorded and the run continues; only configuration
    problems abort.  Returns the report dict.
    """
    profile = get_profile(cfg.dataset_profile_id)
    g = graph if graph is not None else load_graph(cfg.graph_path)
    if store is None and cfg.needs_embeddings():
        if not cfg.embeddings_path:
            raise DataError("similarity ranking needs an embeddings file")
        store = load_embeddings(cfg.embeddings_path)
    strategy = cfg.selection_strategy(profile)

    targets = g.ids_with_split("test")
    if not targets:
        raise DataError("graph has no test nodes; run the split step first")
    if cfg.test_subsample is not None:
        targets = subsample_test(targets, cfg.test_subsample, cfg.seed)
    targets = sorted(targets)

    report_dir = Path(cfg.report_dir) / cfg.dataset_profile_id
    report_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = cfg.config_hash()
    final_path = report_dir / f"{cfg_hash}.json"
    partial_path = report_dir / f"{cfg_hash}.partial.jsonl"

    records: dict[int, dict] = {}
    if partial_path.exists():
        for line in partial_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                records[rec["node_id"]] = rec
    pending = [v for v in targets if v not in records]

    if cfg.max_requests and len(pending) > cfg.max_requests:
        raise DataError(
            f"{len(pending)} requests needed, cap is {cfg.max_requests}"
        )

    if cfg.model is None:
        completer = MockOracle(profile.label_set)
    else:
        completer = ChatClient(cfg.model)

    started = time.monotonic()
    write_lock = threading.Lock()
    with partial_path.open("a", encoding="utf-8") as partial:
        def work(node_id):
            rec = _evaluate_node(cfg, profile, g, store, strategy, completer, node_id)
            with write_lock:
                records[node_id] = rec
                partial.write(json.dumps(rec, sort_keys=True) + "\n")
                partial.flush()
            if progress is not None:
                progress(node_id)
            return rec

        if cfg.workers > 1 and pending:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                list(pool.map(work, pending))
        else:
            for v in pending:
                work(v)
    wall_time = time.monotonic() - started

    ordered = [records[v] for v in targets]
    evaluated = [r for r in ordered if r["error"] is None]
    n_eval = len(evaluated)
    n_correct = sum(r["correct"] for r in evaluated)
    n_invalid = sum(r["parsed_label"] == INVALID for r in evaluated)
    pair_match = pair_total = 0
    for r in evaluated:
        gold = r["gold_label"]
        for node_id, _hop in r["ranked"]:
            pair_total += 1
            pair_match += (g.node(node_id).label == gold)
    if strategy.kind != "none":
        fail_frac = failure_rate(g, targets, strategy)
    else:
        fail_frac = None

    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "config_hash": cfg_hash,
        "dataset": cfg.dataset_profile_id,
        "n": n_eval,
        "n_errored": len(ordered) - n_eval,
        "accuracy": n_correct / n_eval if n_eval else 0.0,
        "invalid_rate": n_invalid / n_eval if n_eval else 0.0,
        "topk_neighbor_accuracy": (pair_match / pair_total) if pair_total else None,
        "failure_rate": fail_frac,
        "wall_time": wall_time,
        "cost": {
            "requests": len(pending),
            "total_prompt_chars": sum(r["prompt_chars"] for r in ordered),
        },
        "records": ordered,
    }
    tmp = final_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                   encoding="utf-8")
    tmp.replace(final_path)
    partial_path.unlink(missing_ok=True)
    return report


def load_report(path: str | Path) -> dict:
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    if report.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported report schema")
    return report


CSV_COLUMNS = ("dataset", "strategy", "variant", "mode", "accuracy",
               "invalid_rate", "topk_acc", "failure_rate", "n")


def _strategy_name(config: dict) -> str:
    kind = config["strategy"]
    if kind == "random":
        return f"random-{config['gamma']}"
    if kind in ("sns", "direct") and not config.get("use_similarity", True):
        return f"{kind}-unranked"
    return kind


def compare_runs(reports: Sequence[dict]) -> tuple[str, str]:
    """Accuracy grid over (strategy, variant, mode) with deltas against the
    vanilla zero-shot row.  Returns (text table, CSV)."""
    if not reports:
        raise DataError("no reports to compare")
    datasets = {r["dataset"] for r in reports}
    if len(datasets) > 1:
        raise MixedDatasets(f"reports span datasets: {sorted(datasets)}")
    rows = []
    for r in reports:
        cfgd = r["config"]
        rows.append({
            "dataset": r["dataset"],
            "strategy": _strategy_name(cfgd),
            "variant": cfgd["variant"],
            "mode": cfgd["mode"],
            "accuracy": r["accuracy"],
            "invalid_rate": r["invalid_rate"],
            "topk_acc": r["topk_neighbor_accuracy"],
            "failure_rate": r["failure_rate"],
            "n": r["n"],
        })
    rows.sort(key=lambda row: (row["strategy"], row["variant"], row["mode"]))
    baseline = next(
        (row["accuracy"] for row in rows
         if row["strategy"] == "none" and row["mode"] == "vanilla-zero-shot"),
        rows[0]["accuracy"] if len(rows) == 1 else None,
    )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            row["dataset"], row["strategy"], row["variant"], row["mode"],
            f"{row['accuracy']:.6f}", f"{row['invalid_rate']:.6f}",
            "" if row["topk_acc"] is None else f"{row['topk_acc']:.6f}",
            "" if row["failure_rate"] is None else f"{row['failure_rate']:.6f}",
            row["n"],
        ])
    csv_text = buf.getvalue()

    header = f"{'strategy':<16} {'variant':<11} {'mode':<17} {'acc':>8} {'delta':>8} {'n':>6}"
    lines = [header, "-" * len(header)]
    for row in rows:
        delta = "" if baseline is None else f"{row['accuracy'] - baseline:+.4f}"
        lines.append(
            f"{row['strategy']:<16} {row['variant']:<11} {row['mode']:<17} "
            f"{row['accuracy']:>8.4f} {delta:>8} {row['n']:>6}"
        )
    return "\n".join(lines) + "\n", csv_text
