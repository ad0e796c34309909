#!/usr/bin/env python3
"""Regenerate the golden prompt files under tests/goldens/.

Goldens freeze one reading of the template whitespace; regenerating them is
a deliberate act, and any diff against the checked-in files must be reviewed
against the documented templates (docs/prompt-templates.md) before commit.
"""

from pathlib import Path

from graphprompt.graph import NodeRecord, TextAttributedGraph
from graphprompt.graph import _build_adjacency
from graphprompt.profiles import PROFILE_IDS, get_profile
from graphprompt.prompts import build_prompt, render
from graphprompt.ranking import RankedNeighbors

OUT = Path(__file__).resolve().parent.parent / "tests" / "goldens"

TARGET_TITLE = "Adaptive sampling strategies for semi-supervised classification"
TARGET_ABSTRACT = (
    "We study how sampling strategies influence classifier quality when "
    "labels are scarce, and report results on several benchmarks."
)
NEIGHBOR_TITLES = [
    "A survey of sampling methods for learning with few labels",
    "Margin-based selection criteria in semi-supervised learning",
]


def fixture_graph(profile):
    labels = [profile.label_set[0], profile.label_set[1 % len(profile.label_set)]]
    nodes = (
        NodeRecord(id=0, title=TARGET_TITLE, abstract=TARGET_ABSTRACT,
                   label=None, split="test"),
        NodeRecord(id=1, title=NEIGHBOR_TITLES[0], abstract="",
                   label=labels[0], split="train"),
        NodeRecord(id=2, title=NEIGHBOR_TITLES[1], abstract="",
                   label=labels[1], split="train"),
    )
    return TextAttributedGraph(
        nodes=nodes,
        adjacency=_build_adjacency({0, 1, 2}, [(0, 1), (0, 2)]),
        label_set=profile.label_set,
        dataset_profile_id=profile.id,
    )


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for pid in PROFILE_IDS:
        profile = get_profile(pid)
        g = fixture_graph(profile)
        target = g.node(0)
        ranked = RankedNeighbors(
            target=0, entries=((1, 1, 0.91), (2, 1, 0.84)), k_limit=2)
        cases = [("none", None, True)]
        for variant in ("label", "text", "text+label"):
            cases.append((variant, ranked, True))
            cases.append((variant, ranked, False))
        for variant, rk, ranked_order in cases:
            spec = build_prompt(g, target, rk, profile,
                                variant=variant, ranked_order=ranked_order)
            instr = "na" if variant == "none" else ("sns" if ranked_order else "random")
            name = f"{pid}__{variant.replace('+', '-')}__{instr}.txt"
            (OUT / name).write_text(render(spec), encoding="utf-8")
            print(name)


if __name__ == "__main__":
    main()
