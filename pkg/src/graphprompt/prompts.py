"""Prompt assembly and deterministic rendering.

A prompt is built as a structured :class:`PromptSpec` and rendered to the
exact string sent to the model:

    Title: <title>
    Abstract: <abstract>
    <neighbor instruction>          (only when neighbors are present)
    Neighbor Paper0: ...
    Neighbor Paper1: ...
    <task instruction>

Neighbor blocks appear in ranking order.  The similarity-ranked instruction
ends "from most related to least related:"; the random-order instruction
omits that clause.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .errors import EmptyExemplarPool, InvariantViolation, MissingField
from .graph import NodeRecord, TextAttributedGraph
from .profiles import DatasetProfile
from .ranking import RankedNeighbors

MODES = ("vanilla-zero-shot", "zero-shot-cot", "few-shot", "few-shot-cot")
VARIANTS = ("none", "label", "text", "text+label")

RANKED_NEIGHBOR_INSTRUCTION = (
    "It has following important neighbors which has citation relationship "
    "to this paper, from most related to least related:"
)
UNRANKED_NEIGHBOR_INSTRUCTION = (
    "It has following important neighbors which has citation relationship "
    "to this paper:"
)

DEFAULT_CHAR_BUDGET = 12_000
DEFAULT_EXEMPLAR_COUNT = 4


@dataclass(frozen=True)
class NeighborBlock:
    index: int
    label: Optional[str] = None
    title: Optional[str] = None


@dataclass(frozen=True)
class Exemplar:
    title: str
    abstract: str
    gold_label: str


@dataclass(frozen=True)
class PromptSpec:
    mode: str
    neighbor_variant: str
    target_title: str
    target_abstract: str
    neighbor_blocks: tuple[NeighborBlock, ...]
    neighbor_instruction: str
    task_instruction: str
    cot_sentence: str = ""
    exemplars: tuple[Exemplar, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvariantViolation(f"unknown mode {self.mode!r}")
        if self.neighbor_variant not in VARIANTS:
            raise InvariantViolation(f"unknown variant {self.neighbor_variant!r}")
        if (self.neighbor_variant == "none") != (not self.neighbor_blocks):
            raise InvariantViolation(
                "variant 'none' iff there are no neighbor blocks"
            )


def _blocks_from_ranked(g: TextAttributedGraph, ranked: RankedNeighbors,
                        variant: str) -> list[NeighborBlock]:
    with_label = "label" in variant
    with_text = "text" in variant
    blocks = []
    for index, (node_id, _hop, _score) in enumerate(ranked.entries):
        rec = g.node(node_id)
        if with_label and rec.label is None:
            raise MissingField(
                f"neighbor {node_id} has no label but variant {variant!r} needs one"
            )
        blocks.append(NeighborBlock(
            index=index,
            label=rec.label if with_label else None,
            title=rec.title if with_text else None,
        ))
    return blocks


def build_prompt(g: TextAttributedGraph, node: NodeRecord,
                 ranked: Optional[RankedNeighbors], profile: DatasetProfile,
                 mode: str = "vanilla-zero-shot", variant: str = "none",
                 ranked_order: bool = True,
                 char_budget: int = DEFAULT_CHAR_BUDGET) -> PromptSpec:
    """Assemble a prompt for ``node``.

    ``ranked_order`` selects the neighbor instruction wording: True for
    similarity-ordered neighbors, False for random order.  Neighbor blocks
    are dropped from the end (least similar first) until the rendered prompt
    fits ``char_budget``; the target text and task instruction are never
    dropped.
    """
    if (variant == "none") != (ranked is None or not ranked.entries):
        raise InvariantViolation(
            "variant 'none' requires no ranked neighbors and vice versa"
        )
    if variant == "none":
        blocks: list[NeighborBlock] = []
        task = profile.task_instruction_without_neighbor
        instruction = ""
    else:
        blocks = _blocks_from_ranked(g, ranked, variant)
        task = profile.task_instruction_with_neighbor
        instruction = (RANKED_NEIGHBOR_INSTRUCTION if ranked_order
                       else UNRANKED_NEIGHBOR_INSTRUCTION)
    spec = PromptSpec(
        mode=mode,
        neighbor_variant=variant if blocks else "none",
        target_title=node.title,
        target_abstract=node.abstract,
        neighbor_blocks=tuple(blocks),
        neighbor_instruction=instruction if blocks else "",
        task_instruction=task if blocks else profile.task_instruction_without_neighbor,
        cot_sentence=profile.cot_sentence,
    )
    while len(render(spec)) > char_budget and spec.neighbor_blocks:
        remaining = spec.neighbor_blocks[:-1]
        spec = replace(
            spec,
            neighbor_blocks=remaining,
            neighbor_variant=variant if remaining else "none",
            neighbor_instruction=spec.neighbor_instruction if remaining else "",
            task_instruction=(task if remaining
                              else profile.task_instruction_without_neighbor),
        )
    return spec


def _render_block(block: NeighborBlock) -> str:
    head = f"Neighbor Paper{block.index}: "
    fields = []
    if block.label is not None:
        fields.append(f"Category: {block.label}")
    if block.title is not None:
        fields.append(f"Title: {block.title}")
    if not fields:
        raise MissingField(f"neighbor block {block.index} carries no fields")
    return head + "\n".join(fields)


def _render_body(spec: PromptSpec) -> str:
    lines = [f"Title: {spec.target_title}", f"Abstract: {spec.target_abstract}"]
    if spec.neighbor_blocks:
        lines.append(spec.neighbor_instruction)
        lines.extend(_render_block(b) for b in spec.neighbor_blocks)
    lines.append(spec.task_instruction)
    return "\n".join(lines)


def _render_exemplar(ex: Exemplar, spec: PromptSpec) -> str:
    # exemplars are solved instances of the neighbor-free template
    return "\n".join([
        f"Title: {ex.title}",
        f"Abstract: {ex.abstract}",
        f"Category: ['{ex.gold_label}']",
    ])


def render(spec: PromptSpec) -> str:
    """Deterministic, byte-exact prompt string."""
    parts = [_render_exemplar(ex, spec) for ex in spec.exemplars]
    parts.append(_render_body(spec))
    text = "\n\n".join(parts)
    if spec.mode in ("zero-shot-cot", "few-shot-cot"):
        text = f"{text}\n{spec.cot_sentence}"
    return text


def attach_mode_decorations(spec: PromptSpec, mode: str,
                            exemplar_pool: Sequence[NodeRecord] = (),
                            seed: int = 0,
                            n_exemplars: int = DEFAULT_EXEMPLAR_COUNT) -> PromptSpec:
    """Apply a prompting mode: sample few-shot exemplars and/or arm the
    step-by-step elicitation sentence.  ``vanilla-zero-shot`` is an identity
    apart from the mode field."""
    if mode not in MODES:
        raise InvariantViolation(f"unknown mode {mode!r}")
    exemplars: tuple[Exemplar, ...] = ()
    if mode in ("few-shot", "few-shot-cot"):
        pool = sorted(
            (n for n in exemplar_pool if n.label is not None),
            key=lambda n: n.id,
        )
        if not pool:
            raise EmptyExemplarPool("few-shot modes need labeled train nodes")
        rng = random.Random(seed)
        picked = rng.sample(pool, min(n_exemplars, len(pool)))
        exemplars = tuple(
            Exemplar(title=n.title, abstract=n.abstract, gold_label=n.label)
            for n in picked
        )
    return replace(spec, mode=mode, exemplars=exemplars)
