"""Biasing-list construction: common/rare vocabulary split and
per-utterance target + distractor lists.

The top-N words of a frequency list are "common"; everything else is
"rare". A per-utterance biasing list is the rare words that actually occur
in the reference plus a fixed number of rare distractors sampled without
replacement, seeded per (global seed, utterance id) so lists are
reproducible regardless of processing order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

logger = logging.getLogger(__name__)

DEFAULT_COMMON_CUTOFF = 5000
DEFAULT_DISTRACTORS = 1000


@dataclass(frozen=True)
class VocabularySplit:
    common: frozenset[str]
    rare: frozenset[str]


def split_vocabulary(freq_file: str | Path, cutoff: int = DEFAULT_COMMON_CUTOFF) -> VocabularySplit:
    """Split a ``word<TAB>count`` frequency file at the cutoff.

    Ranking is by count descending, ties by ascending word, so the boundary
    is deterministic.
    """
    path = Path(freq_file)
    if not path.exists():
        raise ValueError(f"frequency file not found: {path}")
    counts: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected word<TAB>count, got {line!r}")
        word, count_str = parts
        try:
            count = int(count_str)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad count {count_str!r}")
        if count <= 0:
            raise ValueError(f"{path}:{lineno}: count must be positive, got {count}")
        if word in counts:
            raise ValueError(f"{path}:{lineno}: duplicate word {word!r}")
        counts[word] = count
    ranked = sorted(counts, key=lambda w: (-counts[w], w))
    common = frozenset(ranked[:cutoff])
    rare = frozenset(ranked[cutoff:])
    return VocabularySplit(common=common, rare=rare)


@dataclass(frozen=True)
class UtteranceBiasList:
    utterance_id: str
    targets: tuple[str, ...]
    distractors: tuple[str, ...]

    @property
    def full(self) -> tuple[str, ...]:
        return self.targets + self.distractors

    def word_set(self) -> frozenset[str]:
        return frozenset(self.full)


def _utterance_rng(seed: int, utterance_id: str) -> random.Random:
    # Stable across processes; Python's hash() is salted.
    digest = hashlib.sha256(f"{seed}\x1f{utterance_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def build_utterance_list(
    utterance_id: str,
    ref_words: Sequence[str],
    split: VocabularySplit,
    n_distractors: int = DEFAULT_DISTRACTORS,
    seed: int = 0,
) -> UtteranceBiasList:
    """Targets are the utterance's rare words in first-appearance order;
    distractors are sampled from the remaining rare pool."""
    targets: list[str] = []
    for word in ref_words:
        if word in split.rare and word not in targets:
            targets.append(word)
    pool = sorted(split.rare - set(targets))
    take = min(n_distractors, len(pool))
    if take < n_distractors:
        logger.warning(
            "utterance %s: rare pool has only %d words, wanted %d distractors",
            utterance_id,
            len(pool),
            n_distractors,
        )
    rng = _utterance_rng(seed, utterance_id)
    distractors = tuple(rng.sample(pool, take))
    return UtteranceBiasList(
        utterance_id=utterance_id, targets=tuple(targets), distractors=distractors
    )


def dump_bias_lists(lists: Sequence[UtteranceBiasList], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for bl in lists:
            fh.write(
                json.dumps(
                    {
                        "utt": bl.utterance_id,
                        "targets": list(bl.targets),
                        "distractors": list(bl.distractors),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_bias_lists(path: str | Path) -> dict[str, UtteranceBiasList]:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"bias list file not found: {path}")
    out: dict[str, UtteranceBiasList] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            bl = UtteranceBiasList(
                utterance_id=str(obj["utt"]),
                targets=tuple(str(w) for w in obj["targets"]),
                distractors=tuple(str(w) for w in obj["distractors"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}:{lineno}: bad bias-list row: {exc}") from exc
        if bl.utterance_id in out:
            raise ValueError(f"{path}:{lineno}: duplicate utterance id {bl.utterance_id!r}")
        out[bl.utterance_id] = bl
    return out
