"""Command-line entry point for the full pipeline.

Exit codes: 0 ok, 1 usage, 2 data error, 3 remote-service error.
The chat API key is read from the ``GRAPHPROMPT_API_KEY`` environment
variable; it is never written to config files or reports.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import harness, ingest, selection
from .errors import DataError, GraphPromptError, RemoteServiceError
from .graph import SplitSpec, apply_split, load_graph, save_graph
from .harness import ExperimentConfig, compare_runs, load_report, run_experiment
from .profiles import PROFILE_IDS, get_profile
from .ranking import (
    EmbeddingClient,
    load_embeddings,
    rank_and_truncate,
    save_embeddings,
    unranked_passthrough,
)
from .selection import AlphaSchedule, SelectionStrategy


def _parse_alpha(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise click.UsageError(f"bad --alpha value {text!r}; want e.g. 2,1,1,1,1")


def _strategy_from_flags(strategy, gamma, alpha, k, seed) -> SelectionStrategy:
    return SelectionStrategy(
        kind=strategy,
        schedule=AlphaSchedule(per_layer=_parse_alpha(alpha), gamma_max=max(gamma, 1)),
        gamma=gamma,
        k=k,
        seed=seed,
    )


@click.group()
def cli():
    """Neighbor-aware LLM prompting pipeline for node classification on
    text-attributed graphs."""


@cli.command(name="ingest")
@click.argument("raw_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", required=True, type=click.Choice(PROFILE_IDS))
@click.option("--format", "fmt", type=click.Choice(["linqs", "planetoid"]),
              default=None, help="Raw layout; auto-detected when omitted.")
@click.option("-o", "--output", required=True, type=click.Path())
def ingest_cmd(raw_dir, dataset, fmt, output):
    """Convert a public distribution under RAW_DIR to a JSONL-v1 graph."""
    g = ingest.convert(raw_dir, dataset, fmt)
    save_graph(g, output)
    click.echo(f"wrote {output}: {len(g)} nodes, {g.num_edges()} edges")


@cli.command()
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--train-per-class", default=20, show_default=True)
@click.option("--val", default=500, show_default=True)
@click.option("--test", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Output path; defaults to rewriting the input.")
def split(graph_path, train_per_class, val, test, seed, output):
    """Assign train/val/test masks to GRAPH_PATH."""
    g = load_graph(graph_path)
    g = apply_split(g, SplitSpec(train_per_class, val, test, seed))
    save_graph(g, output or graph_path)
    click.echo(
        f"split: {len(g.ids_with_split('train'))} train, "
        f"{len(g.ids_with_split('val'))} val, {len(g.ids_with_split('test'))} test"
    )


@cli.command()
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--endpoint", required=True, help="Embedding service base URL.")
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--source-tag", default="default", show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
def embed(graph_path, endpoint, cache_dir, source_tag, output):
    """Fetch embeddings for every node's text and write an EMB-v1 file."""
    g = load_graph(graph_path)
    client = EmbeddingClient(endpoint, cache_dir=cache_dir, source_tag=source_tag)
    store = client.populate_store(g.nodes)
    save_embeddings(store, output)
    click.echo(f"wrote {output}: {len(store)} vectors of dim {store.dim} "
               f"({client.requests_made} requests)")


@cli.command()
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(["sns", "direct", "random"]),
              default="sns", show_default=True)
@click.option("--gamma", default=5, show_default=True)
@click.option("--alpha", default="2,1,1,1,1", show_default=True)
@click.option("--k", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--node", required=True, type=int)
@click.option("--embeddings", type=click.Path(exists=True), default=None,
              help="Rank candidates by similarity when given.")
def select(graph_path, strategy, gamma, alpha, k, seed, node, embeddings):
    """Inspect one node's selected candidates."""
    g = load_graph(graph_path)
    strat = _strategy_from_flags(strategy, gamma, alpha, k, seed)
    cs = strat.select(g, node)
    if cs.failed:
        click.echo(f"node {node}: no labeled neighbors found "
                   f"(searched to hop {cs.terminated_at_hop})")
        return
    if embeddings:
        store = load_embeddings(embeddings)
        ranked = rank_and_truncate(store, cs, k)
        entries = ranked.entries
    else:
        entries = tuple((n, h, None) for n, h in cs.candidates)
    click.echo(f"node {node}: {len(cs.candidates)} candidates, "
               f"terminated at hop {cs.terminated_at_hop}")
    for node_id, hop, score in entries:
        rec = g.node(node_id)
        score_txt = "" if score is None else f"  score={score:.4f}"
        click.echo(f"  hop {hop}  node {node_id}  label={rec.label}{score_txt}")


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mock", is_flag=True, help="Use the offline mock oracle.")
@click.option("--workers", type=int, default=None)
@click.option("--report-dir", type=click.Path(), default=None)
def run(config_path, mock, workers, report_dir):
    """Run a full experiment described by a TOML config file."""
    overrides = {}
    if workers is not None:
        overrides["workers"] = workers
    if report_dir is not None:
        overrides["report_dir"] = report_dir
    cfg = ExperimentConfig.from_toml(config_path, **overrides)
    if mock:
        cfg = ExperimentConfig(**{**cfg.__dict__, "model": None})
    report = run_experiment(cfg)
    path = Path(cfg.report_dir) / cfg.dataset_profile_id / f"{cfg.config_hash()}.json"
    click.echo(f"accuracy={report['accuracy']:.4f} "
               f"invalid_rate={report['invalid_rate']:.4f} "
               f"n={report['n']} report={path}")


@cli.command()
@click.argument("metric", type=click.Choice(["failure-rate", "topk-acc"]))
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("embeddings", type=click.Path(exists=True), required=False)
@click.option("--strategy", type=click.Choice(["sns", "direct", "random"]),
              default="sns", show_default=True)
@click.option("--gamma", default=2, show_default=True)
@click.option("--alpha", default="2,1,1,1,1", show_default=True)
@click.option("--gamma-max", default=5, show_default=True)
@click.option("--k", type=int, default=None, help="Defaults to the profile's k.")
@click.option("--seed", default=0, show_default=True)
def metrics(metric, graph_path, embeddings, strategy, gamma, alpha, gamma_max,
            k, seed):
    """Compute a selection-quality metric over the test set."""
    g = load_graph(graph_path)
    if k is None:
        k = get_profile(g.dataset_profile_id).k_default if g.dataset_profile_id else 4
    strat = SelectionStrategy(
        kind=strategy,
        schedule=AlphaSchedule(per_layer=_parse_alpha(alpha), gamma_max=gamma_max),
        gamma=gamma, k=k, seed=seed,
    )
    targets = g.ids_with_split("test")
    if not targets:
        raise DataError("graph has no test nodes; run the split step first")
    if metric == "failure-rate":
        value = selection.failure_rate(g, targets, strat)
        click.echo(f"failure-rate {strategy}"
                   f"{'' if strategy == 'sns' else f'-{gamma}'}: {value * 100:.1f}%")
        return
    ranked_sets = []
    store = load_embeddings(embeddings) if embeddings else None
    for v in targets:
        cs = strat.select(g, v)
        if cs.failed:
            continue
        if store is not None and strategy in ("sns", "direct"):
            ranked_sets.append(rank_and_truncate(store, cs, k))
        else:
            ranked_sets.append(unranked_passthrough(cs, k, seed))
    value = harness.topk_neighbor_accuracy(g, ranked_sets)
    click.echo(f"topk-acc {strategy}: {value * 100:.1f}%")


@cli.command()
@click.argument("reports", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the comparison CSV here.")
def compare(reports, output):
    """Tabulate accuracy across report files from one dataset."""
    loaded = [load_report(p) for p in reports]
    table, csv_text = compare_runs(loaded)
    click.echo(table, nl=False)
    if output:
        Path(output).write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {output}")


@cli.command(name="sweep-k")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k_values", default="1,2,4,8,16", show_default=True)
@click.option("--mock", is_flag=True)
def sweep_k(config_path, k_values, mock):
    """Run the same experiment across several neighbor counts k."""
    ks = [int(x) for x in k_values.split(",")]
    click.echo(f"{'k':>4} {'accuracy':>9} {'topk_acc':>9}")
    for k in ks:
        cfg = ExperimentConfig.from_toml(config_path, k=k)
        if mock:
            cfg = ExperimentConfig(**{**cfg.__dict__, "model": None})
        report = run_experiment(cfg)
        topk = report["topk_neighbor_accuracy"]
        topk_txt = "" if topk is None else f"{topk:9.4f}"
        click.echo(f"{k:>4} {report['accuracy']:9.4f} {topk_txt}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        return 1
    except RemoteServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GraphPromptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
