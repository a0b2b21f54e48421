"""Next-token scorers: the interface the beam decoder drives, a toy
table-backed scorer for tests and fixtures, and a JSON-lines client that
talks the scorer wire protocol to an external model process.

Wire protocol (one JSON object per line, natural-log probabilities):

  -> {"type":"begin","session":str,"audio":str}
  <- {"type":"ready","session":str}
  -> {"type":"step","session":str,"hyps":[{"id":int,"tokens":[ids]}],
      "need":[[ids...]...],"topk":int}
  <- {"type":"scores","session":str,"hyps":[{"id":int,"scores":{"<id>":lp}}]}
  -> {"type":"end","session":str}
  <- {"type":"ended","session":str}

Servers reply {"type":"error","message":str,...} on bad requests without
dropping the session. Responses are order-aligned with requests; every
token id listed in "need" must appear in the matching scores map.
"""

from __future__ import annotations

import json
import math
import subprocess
from pathlib import Path
from typing import Protocol, Sequence

from .tokens import Vocabulary


class ProtocolError(RuntimeError):
    """Scorer failed its contract (bad frame, missing token, dead process)."""


class StepScorer(Protocol):
    """One hypothesis-extension scoring step over a batch of hypotheses.

    concurrency is "concurrent" when independent sessions may run in
    parallel, "serial" otherwise; the decoder respects the declaration.
    """

    concurrency: str

    def begin(self, audio: str, session: str | None = None) -> None: ...

    def step(
        self,
        hyps: Sequence[Sequence[int]],
        need: Sequence[Sequence[int]],
        topk: int,
    ) -> list[dict[int, float]]: ...

    def end(self) -> None: ...


def _check_scores(
    scores: dict[int, float], needed: Sequence[int], where: str
) -> dict[int, float]:
    for tok in needed:
        if tok not in scores:
            raise ProtocolError(f"{where}: requested token {tok} missing from scores")
    for tok, lp in scores.items():
        if lp > 0.0 or math.isnan(lp):
            raise ProtocolError(f"{where}: log-probability {lp} for token {tok} is not <= 0")
    return scores


class TableScorer:
    """Deterministic scorer backed by an n-gram probability table.

    The table maps a context (the last up-to-`order` token ids) to a
    distribution over next tokens; lookup backs off to shorter suffixes
    down to the empty context. Tokens absent from the matched row score
    the configured floor log-probability.
    """

    concurrency = "concurrent"

    def __init__(
        self,
        contexts: dict[tuple[int, ...], dict[int, float]],
        vocab: Vocabulary,
        order: int = 1,
        floor_logprob: float = -30.0,
    ) -> None:
        if () not in contexts:
            raise ValueError("table must define the empty context")
        if floor_logprob > 0.0:
            raise ValueError(f"floor log-probability must be <= 0, got {floor_logprob}")
        for ctx, dist in contexts.items():
            if not dist:
                raise ValueError(f"context {ctx}: empty distribution")
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"context {ctx}: distribution sums to {total!r}, not 1")
            for tok, p in dist.items():
                if not 0.0 < p <= 1.0:
                    raise ValueError(f"context {ctx}: probability {p} for token {tok}")
        self._contexts = contexts
        self._logs = {
            ctx: {tok: math.log(p) for tok, p in dist.items()}
            for ctx, dist in contexts.items()
        }
        self._vocab = vocab
        self._order = order
        self._floor = floor_logprob

    @classmethod
    def from_file(cls, path: str | Path, vocab: Vocabulary) -> "TableScorer":
        """Load a table from JSON: {"order","floor_logprob","contexts":
        {"<comma-joined ids>": {"<token id>": prob}}}."""
        path = Path(path)
        if not path.exists():
            raise ValueError(f"scorer table not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            contexts: dict[tuple[int, ...], dict[int, float]] = {}
            for key, dist in obj["contexts"].items():
                ctx = tuple(int(t) for t in key.split(",")) if key else ()
                contexts[ctx] = {int(t): float(p) for t, p in dist.items()}
            return cls(
                contexts,
                vocab,
                order=int(obj.get("order", 1)),
                floor_logprob=float(obj.get("floor_logprob", -30.0)),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValueError(f"malformed scorer table {path}: {exc}") from exc

    def begin(self, audio: str, session: str | None = None) -> None:
        pass

    def end(self) -> None:
        pass

    def _row(self, prefix: Sequence[int]) -> dict[int, float]:
        for n in range(min(self._order, len(prefix)), -1, -1):
            ctx = tuple(prefix[len(prefix) - n:])
            row = self._logs.get(ctx)
            if row is not None:
                return row
        raise AssertionError("empty context is always present")

    def score_token(self, prefix: Sequence[int], token: int) -> float:
        return self._row(prefix).get(token, self._floor)

    def step(
        self,
        hyps: Sequence[Sequence[int]],
        need: Sequence[Sequence[int]],
        topk: int,
    ) -> list[dict[int, float]]:
        if len(need) != len(hyps):
            raise ProtocolError("need list not aligned with hypotheses")
        out: list[dict[int, float]] = []
        for prefix, forced in zip(hyps, need):
            row = self._row(prefix)
            scores = {tok: row.get(tok, self._floor) for tok in self._vocab.ids()}
            ranked = sorted(scores, key=lambda t: (-scores[t], t))[:topk]
            chosen = {tok: scores[tok] for tok in ranked}
            for tok in forced:
                chosen[tok] = scores.get(tok, self._floor)
            out.append(_check_scores(chosen, forced, "table scorer"))
        return out


class ProcessScorer:
    """Scorer client speaking the wire protocol to a subprocess.

    One session at a time (concurrency "serial"); the subprocess is spawned
    on construction and told to shut down on close().
    """

    concurrency = "serial"

    def __init__(self, command: Sequence[str]) -> None:
        self._command = list(command)
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn scorer {self._command}: {exc}") from exc
        self._session: str | None = None
        self._counter = 0

    def _send(self, obj: dict) -> None:
        proc = self._proc
        if proc.poll() is not None or proc.stdin is None:
            raise ProtocolError("scorer process is not running")
        proc.stdin.write(json.dumps(obj) + "\n")
        proc.stdin.flush()

    def _recv(self, expect: str) -> dict:
        assert self._proc.stdout is not None
        line = self._proc.stdout.readline()
        if not line:
            raise ProtocolError("scorer process closed its output")
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"scorer sent invalid JSON: {line!r}") from exc
        if not isinstance(frame, dict):
            raise ProtocolError(f"scorer frame is not an object: {frame!r}")
        if frame.get("type") == "error":
            raise ProtocolError(f"scorer error: {frame.get('message', '<no message>')}")
        if frame.get("type") != expect:
            raise ProtocolError(f"expected {expect!r} frame, got {frame.get('type')!r}")
        if frame.get("session") != self._session:
            raise ProtocolError(
                f"frame for session {frame.get('session')!r}, expected {self._session!r}"
            )
        return frame

    def begin(self, audio: str, session: str | None = None) -> None:
        if self._session is not None:
            raise ProtocolError(f"session {self._session!r} still open")
        self._counter += 1
        self._session = session if session is not None else f"s{self._counter}"
        self._send({"type": "begin", "session": self._session, "audio": audio})
        self._recv("ready")

    def step(
        self,
        hyps: Sequence[Sequence[int]],
        need: Sequence[Sequence[int]],
        topk: int,
    ) -> list[dict[int, float]]:
        if self._session is None:
            raise ProtocolError("step outside a session")
        self._send(
            {
                "type": "step",
                "session": self._session,
                "hyps": [{"id": i, "tokens": list(toks)} for i, toks in enumerate(hyps)],
                "need": [sorted(forced) for forced in need],
                "topk": topk,
            }
        )
        frame = self._recv("scores")
        entries = frame.get("hyps")
        if not isinstance(entries, list) or len(entries) != len(hyps):
            raise ProtocolError(
                f"scores frame has {len(entries) if isinstance(entries, list) else '?'} "
                f"entries for {len(hyps)} hypotheses"
            )
        out: list[dict[int, float]] = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict) or entry.get("id") != i:
                raise ProtocolError(f"scores entry {i} out of order or malformed: {entry!r}")
            raw = entry.get("scores")
            if not isinstance(raw, dict):
                raise ProtocolError(f"scores entry {i} has no scores map")
            try:
                scores = {int(tok): float(lp) for tok, lp in raw.items()}
            except (TypeError, ValueError) as exc:
                raise ProtocolError(f"scores entry {i}: bad token or value: {exc}") from exc
            out.append(_check_scores(scores, need[i], f"scores entry {i}"))
        return out

    def end(self) -> None:
        if self._session is None:
            return
        self._send({"type": "end", "session": self._session})
        self._recv("ended")
        self._session = None

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            if proc.stdin is not None:
                try:
                    proc.stdin.close()
                except OSError:
                    pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self) -> "ProcessScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
