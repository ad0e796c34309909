"""Per-dataset configuration: label sets, task instructions, default k.

Profiles are checked-in TOML files under ``graphprompt/profile_data/``.  The
instruction strings are load-bearing: golden prompt tests compare rendered
output byte-for-byte, so any edit to a profile file is a deliberate,
test-breaking change.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError

PROFILE_IDS = ("cora", "pubmed", "citeseer", "ogbn-arxiv", "ogbn-products")


@dataclass(frozen=True)
class DatasetProfile:
    id: str
    label_set: tuple[str, ...]
    task_instruction_without_neighbor: str
    task_instruction_with_neighbor: str
    k_default: int
    cot_sentence: str


def _load_toml(profile_id: str) -> dict:
    ref = resources.files("graphprompt").joinpath(f"profile_data/{profile_id}.toml")
    try:
        data = ref.read_bytes()
    except FileNotFoundError:
        raise DataError(f"unknown dataset profile {profile_id!r}; "
                        f"known: {', '.join(PROFILE_IDS)}") from None
    return tomllib.loads(data.decode("utf-8"))


def get_profile(profile_id: str) -> DatasetProfile:
    doc = _load_toml(profile_id)
    return DatasetProfile(
        id=doc["id"],
        label_set=tuple(doc["label_set"]),
        task_instruction_without_neighbor=doc["task_instruction_without_neighbor"],
        task_instruction_with_neighbor=doc["task_instruction_with_neighbor"],
        k_default=int(doc["k_default"]),
        cot_sentence=doc["cot_sentence"],
    )


def all_profiles() -> list[DatasetProfile]:
    return [get_profile(pid) for pid in PROFILE_IDS]
