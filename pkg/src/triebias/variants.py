"""Pronunciation-variant extraction from marker-anchored transcripts.

Hotwords are synthesized inside rigid carrier templates ("Start <hotword>
End", "Begin <hotword>") so the recognizer's token output can be sliced at
the marker token sequences: whatever lands strictly between Start and End,
or after Begin, is how the model chose to spell the spoken hotword. Spans
that reproduce the canonical token ids are discarded (they teach nothing);
the survivors are filtered by syllable count to weed out TTS/ASR noise:
a variant must match the hotword's syllable count, and only hotwords of at
least three syllables keep synthetic variants at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .tokens import TokenIds, Vocabulary, detokenize, normalize_word
from .trie import Hotword

SOURCE_BETWEEN = "between_start_end"
SOURCE_AFTER_BEGIN = "after_begin"

DEFAULT_PATTERNS = ("Start {} End", "Begin {}")


@dataclass(frozen=True)
class TemplateSpec:
    patterns: tuple[str, ...] = DEFAULT_PATTERNS

    def __post_init__(self) -> None:
        for pattern in self.patterns:
            if pattern.count("{}") != 1:
                raise ValueError(f"template {pattern!r} must contain exactly one {{}} slot")


def render_templates(hotword: Hotword, spec: TemplateSpec) -> list[str]:
    return [pattern.format(hotword.canonical_text) for pattern in spec.patterns]


@dataclass(frozen=True)
class MarkerConfig:
    """Token-id sequences for the carrier markers.

    Each group lists every observed tokenization of its marker word
    (case and leading-space variants differ under BPE). punctuation_ids
    are stripped from the tail of after-Begin candidates.
    """

    start_ids: tuple[TokenIds, ...]
    end_ids: tuple[TokenIds, ...]
    begin_ids: tuple[TokenIds, ...]
    punctuation_ids: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for name, group in (
            ("start", self.start_ids),
            ("end", self.end_ids),
            ("begin", self.begin_ids),
        ):
            if not group:
                raise ValueError(f"marker group {name!r} is empty")
            for seq in group:
                if not seq:
                    raise ValueError(f"marker group {name!r} contains an empty sequence")
            for a in group:
                for b in group:
                    if a != b and a == b[: len(a)]:
                        raise ValueError(
                            f"marker group {name!r}: {list(a)} is a prefix of {list(b)}"
                        )

    def all_markers(self) -> tuple[TokenIds, ...]:
        return self.start_ids + self.end_ids + self.begin_ids


def load_marker_config(path: str | Path) -> MarkerConfig:
    """Read a marker config JSON: {"start":[[ids]..],"end":..,"begin":..,
    "punctuation":[ids]}."""
    path = Path(path)
    if not path.exists():
        raise ValueError(f"marker config not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        return MarkerConfig(
            start_ids=tuple(tuple(int(t) for t in seq) for seq in obj["start"]),
            end_ids=tuple(tuple(int(t) for t in seq) for seq in obj["end"]),
            begin_ids=tuple(tuple(int(t) for t in seq) for seq in obj["begin"]),
            punctuation_ids=frozenset(int(t) for t in obj.get("punctuation", [])),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed marker config {path}: {exc}") from exc


@dataclass(frozen=True)
class VariantCandidate:
    hotword_id: int
    tokens: TokenIds
    surface: str
    source: str


def _occurrences(seq: Sequence[int], pattern: TokenIds) -> list[int]:
    hits = []
    n, m = len(seq), len(pattern)
    for i in range(n - m + 1):
        if tuple(seq[i : i + m]) == pattern:
            hits.append(i)
    return hits


def _first_marker_at_or_after(
    seq: Sequence[int], markers: Iterable[TokenIds], lo: int
) -> tuple[int, int] | None:
    """Earliest (start, length) of any marker occurrence with start >= lo."""
    best: tuple[int, int] | None = None
    for marker in markers:
        for i in _occurrences(seq, marker):
            if i >= lo and (best is None or i < best[0]):
                best = (i, len(marker))
    return best


def extract_candidates(
    transcript: Sequence[int],
    markers: MarkerConfig,
    hotword: Hotword,
    vocab: Vocabulary,
) -> list[VariantCandidate]:
    """Slice variant candidates out of one token-level transcript.

    Between-markers spans are strictly between the Start marker and the
    nearest following End marker; after-Begin spans run to the end of the
    transcript with trailing punctuation tokens stripped. Candidates never
    include marker tokens, spans equal to the canonical token ids are
    discarded, and duplicates are merged. No marker hit means no candidates
    (an extraction miss, not an error).
    """
    seq = tuple(transcript)
    raw_spans: list[tuple[TokenIds, str]] = []

    for start_marker in markers.start_ids:
        for i in _occurrences(seq, start_marker):
            lo = i + len(start_marker)
            end_hit = _first_marker_at_or_after(seq, markers.end_ids, lo)
            if end_hit is None:
                continue
            raw_spans.append((seq[lo : end_hit[0]], SOURCE_BETWEEN))

    for begin_marker in markers.begin_ids:
        for i in _occurrences(seq, begin_marker):
            lo = i + len(begin_marker)
            raw_spans.append((seq[lo:], SOURCE_AFTER_BEGIN))

    out: list[VariantCandidate] = []
    seen: set[TokenIds] = set()
    for span, source in raw_spans:
        span = _truncate_at_marker(span, markers)
        while span and span[-1] in markers.punctuation_ids:
            span = span[:-1]
        if not span:
            continue
        if span == hotword.canonical_tokens:
            continue  # exact match teaches nothing
        if span in seen:
            continue
        seen.add(span)
        out.append(
            VariantCandidate(
                hotword_id=hotword.id,
                tokens=span,
                surface=detokenize(span, vocab),
                source=source,
            )
        )
    return out


def _truncate_at_marker(span: TokenIds, markers: MarkerConfig) -> TokenIds:
    cut = _first_marker_at_or_after(span, markers.all_markers(), 0)
    return span if cut is None else span[: cut[0]]


# -- syllable counting -----------------------------------------------------

_VOWELS = set("aeiouy")
# 'ia' after these consonants is one syllable (spe-cial, par-tial), a hiatus
# otherwise (va-len-tin-i-an, me-di-a).
_IA_FUSED_AFTER = set("ctxs")


def _count_single_word(word: str) -> int:
    letters = [c for c in word if c.isalpha()]
    if not letters:
        return 1
    w = "".join(letters)
    if len(w) <= 3:
        return 1
    count = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            count += 1
        prev_vowel = is_vowel
    for i in range(1, len(w) - 1):
        if w[i] == "i" and w[i + 1] == "a" and w[i - 1] not in _IA_FUSED_AFTER:
            count += 1
    if w.endswith(("ea", "eo", "io")):
        count += 1
    if count > 1 and w.endswith("e"):
        ends_stable_le = w.endswith("le") and len(w) >= 3 and w[-3] not in _VOWELS
        if not ends_stable_le:
            count -= 1
    return max(count, 1)


def count_syllables(text: str) -> int:
    """Heuristic syllable count; multi-word strings sum per word.

    Counts maximal vowel groups (y included), splits common hiatus pairs
    ('ia' outside c/t/x/s contexts, word-final 'ea'/'eo'/'io'), drops a
    silent trailing 'e' (kept for consonant+'le' endings), floors at one
    per word. Words of three letters or fewer count one.
    """
    words = []
    for raw in text.split():
        norm = normalize_word(raw).text
        if norm:
            for part in norm.split("-"):
                if part:
                    words.append(part)
    if not words:
        raise ValueError(f"no countable words in {text!r}")
    return sum(_count_single_word(w) for w in words)


def syllable_filter(
    cands: Iterable[VariantCandidate], hotword: Hotword
) -> list[VariantCandidate]:
    """Keep candidates whose syllable count equals the hotword's, requiring
    at least three; hotwords under three syllables keep nothing."""
    target = count_syllables(hotword.canonical_text)
    if target < 3:
        return []
    return [c for c in cands if count_syllables(c.surface) == target]


# -- transcript rows and pipeline ------------------------------------------


@dataclass(frozen=True)
class TranscriptRow:
    hotword_id: int
    template: int
    engine: str
    voice: str
    tokens: TokenIds
    error: str | None = None


def load_transcripts(path: str | Path) -> list[TranscriptRow]:
    """Read bridge transcripts (JSON-lines); rows with an error field are
    kept but carry no tokens."""
    path = Path(path)
    if not path.exists():
        raise ValueError(f"transcript file not found: {path}")
    rows: list[TranscriptRow] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rows.append(
                TranscriptRow(
                    hotword_id=int(obj["hotword_id"]),
                    template=int(obj.get("template", 0)),
                    engine=str(obj.get("engine", "")),
                    voice=str(obj.get("voice", "")),
                    tokens=tuple(int(t) for t in obj.get("tokens", [])),
                    error=obj.get("error"),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad transcript row: {exc}") from exc
    return rows


@dataclass(frozen=True)
class ExtractionStats:
    extracted: int
    kept: int
    discarded: int


def extract_variants(
    rows: Iterable[TranscriptRow],
    markers: MarkerConfig,
    hotwords: Iterable[Hotword],
    vocab: Vocabulary,
    include_canonical: bool = True,
) -> tuple[list[Hotword], dict[int, ExtractionStats]]:
    """Full extraction pipeline: slice, dedupe, filter, merge with canonical.

    Returns hotwords rebuilt with surviving variants and per-hotword stats.
    """
    by_id = {hw.id: hw for hw in hotwords}
    grouped: dict[int, list[TranscriptRow]] = {hw_id: [] for hw_id in by_id}
    for row in rows:
        if row.error is not None:
            continue
        if row.hotword_id not in by_id:
            raise ValueError(f"transcript row references unknown hotword id {row.hotword_id}")
        grouped[row.hotword_id].append(row)

    out: list[Hotword] = []
    stats: dict[int, ExtractionStats] = {}
    for hw_id, hw in by_id.items():
        candidates: list[VariantCandidate] = []
        seen: set[TokenIds] = set()
        for row in grouped[hw_id]:
            for cand in extract_candidates(row.tokens, markers, hw, vocab):
                if cand.tokens not in seen:  # dedupe across engines/voices
                    seen.add(cand.tokens)
                    candidates.append(cand)
        kept = syllable_filter(candidates, hw)
        variants: list[TokenIds] = []
        if include_canonical:
            variants.append(hw.canonical_tokens)
        for cand in kept:
            if cand.tokens not in variants:
                variants.append(cand.tokens)
        out.append(
            Hotword(
                id=hw.id,
                canonical_text=hw.canonical_text,
                canonical_tokens=hw.canonical_tokens,
                variants=tuple(variants),
            )
        )
        stats[hw_id] = ExtractionStats(
            extracted=len(candidates), kept=len(kept), discarded=len(candidates) - len(kept)
        )
    return out, stats
