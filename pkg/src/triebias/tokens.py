"""Token-id and text foundation shared by the trie, decoder, and pipeline.

A vocabulary maps token ids to surface pieces (byte-level BPE convention:
pieces carry their own leading whitespace, detokenization is plain
concatenation). Vocabularies are loaded from a line-oriented text file so
that any model can export one; nothing here encodes text into tokens.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

TokenIds = tuple[int, ...]


class VocabularyError(ValueError):
    """Raised for malformed vocabulary files or unknown token ids."""


@dataclass(frozen=True)
class Vocabulary:
    """Immutable id -> surface-piece table.

    special_ids are control tokens (begin/end-of-transcript, padding);
    eot_id, when present, names the id that terminates a hypothesis.
    """

    pieces: dict[int, str]
    special_ids: frozenset[int]
    eot_id: int | None = None

    def __post_init__(self) -> None:
        for sid in self.special_ids:
            if sid not in self.pieces:
                raise VocabularyError(f"special id {sid} not in vocabulary")
        if self.eot_id is not None and self.eot_id not in self.pieces:
            raise VocabularyError(f"eot id {self.eot_id} not in vocabulary")

    @property
    def size(self) -> int:
        return len(self.pieces)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self.pieces

    def piece(self, token_id: int) -> str:
        try:
            return self.pieces[token_id]
        except KeyError:
            raise VocabularyError(f"unknown token id {token_id}") from None

    def ids(self) -> list[int]:
        return sorted(self.pieces)

    def non_special_ids(self) -> list[int]:
        return [i for i in sorted(self.pieces) if i not in self.special_ids]


_SPECIAL_HEADER = "#special:"
_EOT_HEADER = "#eot:"


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Load a vocabulary file.

    Format, one entry per line: ``<id><TAB><piece-as-JSON-string>``.
    A ``#special:<comma-separated ids>`` header declares control tokens;
    an optional ``#eot:<id>`` header names the end-of-transcript id.
    """
    path = Path(path)
    if not path.exists():
        raise VocabularyError(f"vocabulary file not found: {path}")

    pieces: dict[int, str] = {}
    special_ids: set[int] = set()
    eot_id: int | None = None
    saw_special_header = False

    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith(_SPECIAL_HEADER):
            saw_special_header = True
            rest = line[len(_SPECIAL_HEADER):].strip()
            if rest:
                try:
                    special_ids.update(int(p) for p in rest.split(","))
                except ValueError:
                    raise VocabularyError(f"line {lineno}: bad special id list {rest!r}")
            continue
        if line.startswith(_EOT_HEADER):
            rest = line[len(_EOT_HEADER):].strip()
            try:
                eot_id = int(rest)
            except ValueError:
                raise VocabularyError(f"line {lineno}: bad eot id {rest!r}")
            continue
        if line.startswith("#"):
            continue
        tab = line.find("\t")
        if tab < 0:
            raise VocabularyError(f"line {lineno}: expected <id><TAB><piece>, got {line!r}")
        id_part, piece_part = line[:tab], line[tab + 1:]
        try:
            token_id = int(id_part)
        except ValueError:
            raise VocabularyError(f"line {lineno}: bad token id {id_part!r}")
        if token_id < 0:
            raise VocabularyError(f"line {lineno}: negative token id {token_id}")
        if token_id in pieces:
            raise VocabularyError(f"line {lineno}: duplicate token id {token_id}")
        try:
            piece = json.loads(piece_part)
        except json.JSONDecodeError:
            raise VocabularyError(f"line {lineno}: piece is not a JSON string: {piece_part!r}")
        if not isinstance(piece, str):
            raise VocabularyError(f"line {lineno}: piece is not a JSON string: {piece_part!r}")
        pieces[token_id] = piece

    if not saw_special_header:
        raise VocabularyError(f"{path}: missing '#special:' header line")
    return Vocabulary(pieces=pieces, special_ids=frozenset(special_ids), eot_id=eot_id)


def dump_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write a vocabulary in the file format load_vocabulary reads."""
    lines = [_SPECIAL_HEADER + ",".join(str(i) for i in sorted(vocab.special_ids))]
    if vocab.eot_id is not None:
        lines.append(_EOT_HEADER + str(vocab.eot_id))
    for token_id in sorted(vocab.pieces):
        lines.append(f"{token_id}\t{json.dumps(vocab.pieces[token_id], ensure_ascii=False)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def detokenize(ids, vocab: Vocabulary) -> str:
    """Concatenate surface pieces; no separators inserted.

    Pieces that encode a leading space (byte-level BPE) come out right for
    free. Unknown ids are an error naming the id and its position.
    """
    out: list[str] = []
    for pos, token_id in enumerate(ids):
        if token_id not in vocab.pieces:
            raise VocabularyError(f"unknown token id {token_id} at position {pos}")
        out.append(vocab.pieces[token_id])
    return "".join(out)


@dataclass(frozen=True)
class NormalizedWord:
    text: str
    original: str


_KEEP = re.compile(r"[a-z0-9'-]+")


def normalize_word(raw: str) -> NormalizedWord:
    """Lowercase and strip punctuation, keeping internal apostrophes/hyphens.

    Surrounding punctuation (including edge apostrophes and hyphens) is
    removed; anything outside [a-z0-9'-] is dropped. The result may be
    empty; callers decide what that means.
    """
    lowered = raw.lower()
    text = "".join(_KEEP.findall(lowered)).strip("'-")
    return NormalizedWord(text=text, original=raw)


def normalize_words(text: str) -> list[str]:
    """Normalize a whitespace-separated transcript into non-empty words."""
    words = []
    for raw in text.split():
        norm = normalize_word(raw).text
        if norm:
            words.append(norm)
    return words
