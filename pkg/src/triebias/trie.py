"""Multi-pronunciation prefix-trie with per-token rewards and rollback.

Every pronunciation variant of every hotword is inserted as a token-id path;
shared prefixes share nodes. Arcs carry a reward:

  * uniform scheme: every arc is worth +1, so a matched variant is worth its
    token length and partial matches accrue credit token by token;
  * final scheme: only arcs entering a terminal node are worth +1, so credit
    arrives only when a whole variant completes.

During decoding each hypothesis owns a cursor into the trie. Advancing the
cursor with the next token either follows an arc (collecting its reward) or
fails, in which case the reward accrued since the last committed terminal is
rolled back and a single re-entry from the root is attempted with the same
token. Reaching a terminal commits the match: the span and owning hotword
are recorded and the accrued reward becomes permanent (rollback never
crosses a commit). A terminal with continuations keeps the cursor in place
so a longer variant can extend the same attempt; only the deepest commit of
an attempt is reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .tokens import TokenIds, Vocabulary

SCHEME_UNIFORM = "uniform"
SCHEME_FINAL = "final"
_SCHEMES = (SCHEME_UNIFORM, SCHEME_FINAL)

Span = tuple[int, int]  # inclusive token-index range [start, end]
Commit = tuple[int, Span]  # (hotword id, span)


class TrieError(ValueError):
    """Raised for invalid hotword sets (e.g. ambiguous terminals)."""


@dataclass(frozen=True)
class Hotword:
    """A target rare word with its canonical spelling and token variants.

    variants holds every token path the trie should accept for this word;
    include canonical_tokens in it if the correct spelling should match too.
    """

    id: int
    canonical_text: str
    canonical_tokens: TokenIds
    variants: tuple[TokenIds, ...]

    def validate(self, vocab: Vocabulary | None = None) -> None:
        if not self.canonical_tokens:
            raise TrieError(f"hotword {self.id} ({self.canonical_text!r}): empty canonical tokens")
        seen: set[TokenIds] = set()
        for var in self.variants:
            if not var:
                raise TrieError(f"hotword {self.id} ({self.canonical_text!r}): empty variant")
            if var in seen:
                raise TrieError(
                    f"hotword {self.id} ({self.canonical_text!r}): duplicate variant {list(var)}"
                )
            seen.add(var)
            if vocab is not None:
                for tok in var:
                    if tok in vocab.special_ids:
                        raise TrieError(
                            f"hotword {self.id} ({self.canonical_text!r}): "
                            f"variant contains special token id {tok}"
                        )


@dataclass
class _Node:
    depth: int
    children: dict[int, "_Node"] = field(default_factory=dict)
    arc_reward: int = 0  # reward of the arc entering this node
    terminal: int | None = None  # owning hotword id, if a variant ends here


@dataclass(frozen=True)
class TrieCursor:
    """Per-hypothesis matching state; a small immutable value.

    pending_reward is the reward accrued since the last commit point (or the
    root); match_start is the stream position where the current attempt
    began; last_committed records the most recent commit, if any.
    """

    node: _Node
    pending_reward: int = 0
    match_start: int | None = None
    last_committed: Commit | None = None

    @property
    def at_root(self) -> bool:
        return self.node.depth == 0

    def continuations(self) -> tuple[int, ...]:
        """Token ids that extend the current trie path."""
        return tuple(self.node.children)


@dataclass(frozen=True)
class AdvanceOutcome:
    reward_delta: int
    committed: Commit | None
    cursor: TrieCursor


class BiasTrie:
    """Reward-annotated prefix trie; immutable after build, shareable."""

    def __init__(self, scheme: str) -> None:
        if scheme not in _SCHEMES:
            raise TrieError(f"unknown reward scheme {scheme!r} (expected one of {_SCHEMES})")
        self.scheme = scheme
        self.root = _Node(depth=0)
        self.hotwords: dict[int, Hotword] = {}

    # -- construction ----------------------------------------------------

    def _insert(self, hotword: Hotword, variant: TokenIds) -> None:
        node = self.root
        for tok in variant:
            nxt = node.children.get(tok)
            if nxt is None:
                nxt = _Node(depth=node.depth + 1)
                node.children[tok] = nxt
            node = nxt
        if node.terminal is not None and node.terminal != hotword.id:
            other = self.hotwords[node.terminal]
            raise TrieError(
                f"ambiguous terminal: variant {list(variant)} belongs to both "
                f"hotword {other.id} ({other.canonical_text!r}) and "
                f"hotword {hotword.id} ({hotword.canonical_text!r})"
            )
        node.terminal = hotword.id

    def _assign_rewards(self) -> None:
        for node in self._walk():
            for child in node.children.values():
                if self.scheme == SCHEME_UNIFORM:
                    child.arc_reward = 1
                else:
                    child.arc_reward = 1 if child.terminal is not None else 0

    def _walk(self) -> Iterator[_Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())

    @property
    def empty(self) -> bool:
        return not self.root.children

    def node_count(self) -> int:
        return sum(1 for _ in self._walk())

    # -- matching --------------------------------------------------------

    def start_cursor(self) -> TrieCursor:
        return TrieCursor(node=self.root)

    def advance(self, cursor: TrieCursor, token: int, position: int) -> AdvanceOutcome:
        """Advance a cursor with the next stream token; total function.

        Match: follow the arc, collect its reward; entering a terminal
        commits the span [match_start, position] and resets the pending
        reward (a leaf terminal also returns the cursor to the root).
        Mismatch: roll back the pending reward, reset to the root, and make
        one re-entry attempt with the same token.
        """
        arc = cursor.node.children.get(token)
        if arc is not None:
            return self._take_arc(cursor, arc, token, position, rollback=0)
        # Mismatch: roll back the uncommitted reward, then re-enter from root.
        rollback = -cursor.pending_reward
        reentry = self.root.children.get(token)
        if reentry is not None and not cursor.at_root:
            fresh = TrieCursor(node=self.root, last_committed=cursor.last_committed)
            return self._take_arc(fresh, reentry, token, position, rollback=rollback)
        new_cursor = TrieCursor(node=self.root, last_committed=cursor.last_committed)
        return AdvanceOutcome(reward_delta=rollback, committed=None, cursor=new_cursor)

    def _take_arc(
        self, cursor: TrieCursor, node: _Node, token: int, position: int, rollback: int
    ) -> AdvanceOutcome:
        delta = rollback + node.arc_reward
        start = cursor.match_start if cursor.match_start is not None else position
        if node.terminal is not None:
            commit: Commit = (node.terminal, (start, position))
            if node.children:
                # Deeper variants may extend this attempt; hold position.
                new_cursor = TrieCursor(
                    node=node, pending_reward=0, match_start=start, last_committed=commit
                )
            else:
                new_cursor = TrieCursor(node=self.root, last_committed=commit)
            return AdvanceOutcome(reward_delta=delta, committed=commit, cursor=new_cursor)
        new_cursor = TrieCursor(
            node=node,
            pending_reward=cursor.pending_reward + node.arc_reward,
            match_start=start,
            last_committed=cursor.last_committed,
        )
        return AdvanceOutcome(reward_delta=delta, committed=None, cursor=new_cursor)

    def finalize(self, cursor: TrieCursor) -> int:
        """Roll back any uncommitted partial match at end of decoding."""
        return -cursor.pending_reward


def build_trie(hotwords: Iterable[Hotword], scheme: str) -> BiasTrie:
    """Compile hotword variants into a reward-annotated prefix trie."""
    trie = BiasTrie(scheme)
    for hw in hotwords:
        hw.validate()
        if hw.id in trie.hotwords:
            raise TrieError(f"duplicate hotword id {hw.id}")
        trie.hotwords[hw.id] = hw
        for variant in hw.variants:
            trie._insert(hw, variant)
    trie._assign_rewards()
    return trie


def record_commit(commits: list[Commit], commit: Commit) -> None:
    """Append a commit, replacing the previous one when it extends the
    same attempt (same span start): only the deepest commit is reported."""
    if commits and commits[-1][1][0] == commit[1][0]:
        commits[-1] = commit
    else:
        commits.append(commit)


def committed_matches(outcomes: Iterable[AdvanceOutcome]) -> list[Commit]:
    """Collapse a cursor history into reported matches.

    Spans come out non-overlapping and in increasing order; nested commits
    of one attempt collapse to the deepest.
    """
    commits: list[Commit] = []
    for outcome in outcomes:
        if outcome.committed is not None:
            record_commit(commits, outcome.committed)
    return commits


# -- hotword-list file format -------------------------------------------


def load_hotwords(path: str | Path, vocab: Vocabulary | None = None) -> list[Hotword]:
    """Read hotwords from JSON-lines: {"id","text","canonical","variants"}."""
    path = Path(path)
    if not path.exists():
        raise TrieError(f"hotword file not found: {path}")
    hotwords: list[Hotword] = []
    seen_ids: set[int] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            hw = Hotword(
                id=int(obj["id"]),
                canonical_text=str(obj["text"]),
                canonical_tokens=tuple(int(t) for t in obj["canonical"]),
                variants=tuple(tuple(int(t) for t in var) for var in obj["variants"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TrieError(f"{path}:{lineno}: bad hotword record: {exc}") from exc
        if hw.id in seen_ids:
            raise TrieError(f"{path}:{lineno}: duplicate hotword id {hw.id}")
        seen_ids.add(hw.id)
        hw.validate(vocab)
        hotwords.append(hw)
    return hotwords


def dump_hotwords(hotwords: Iterable[Hotword], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for hw in hotwords:
            fh.write(
                json.dumps(
                    {
                        "id": hw.id,
                        "text": hw.canonical_text,
                        "canonical": list(hw.canonical_tokens),
                        "variants": [list(v) for v in hw.variants],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
