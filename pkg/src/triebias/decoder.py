"""Shallow-fusion beam search over an abstract next-token scorer.

Hypotheses are ranked by fused score = cumulative model log-probability +
reward_scale * cumulative trie reward, higher is better. The trie reward
never touches the model's own distribution: a hypothesis that matches no
trie path keeps a reward of exactly zero and the fused score degenerates to
the plain model score.

Per step, each live hypothesis is extended with the scorer's top
candidates_per_beam tokens plus every trie continuation of its cursor plus
the end token; trie continuations are force-scored so a variant the model
ranks low can still be boosted. Extending with the end token rolls back any
uncommitted partial match and finishes the hypothesis. Finished hypotheses
stay in the beam and compete for slots. Ties in fused score break toward
fewer tokens, then lexicographically smaller token ids, so decoding is
fully deterministic for a deterministic scorer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from .scorer import ProtocolError, StepScorer
from .tokens import TokenIds, Vocabulary, detokenize
from .trie import BiasTrie, Commit, Hotword, TrieCursor, record_commit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeConfig:
    beam_size: int = 10
    max_len: int = 256
    candidates_per_beam: int | None = None  # defaults to beam_size
    length_normalization: bool = False
    reward_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be positive, got {self.beam_size}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be positive, got {self.max_len}")
        if self.candidates_per_beam is None:
            object.__setattr__(self, "candidates_per_beam", self.beam_size)
        if self.candidates_per_beam < self.beam_size:
            raise ValueError(
                f"candidates_per_beam ({self.candidates_per_beam}) "
                f"< beam_size ({self.beam_size})"
            )


@dataclass(frozen=True)
class Hypothesis:
    tokens: TokenIds
    model_logprob: float
    reward: int
    cursor: TrieCursor
    commits: tuple[Commit, ...] = ()
    finished: bool = False

    def fused_score(self, reward_scale: float = 1.0) -> float:
        return self.model_logprob + reward_scale * self.reward


@dataclass(frozen=True)
class DecodeResult:
    best: Hypothesis
    rewritten_text: str
    all_beams: tuple[Hypothesis, ...] = field(repr=False)


def _sort_key(hyp: Hypothesis, cfg: DecodeConfig):
    rank = hyp.fused_score(cfg.reward_scale)
    if cfg.length_normalization:
        rank = rank / max(1, len(hyp.tokens))
    # Ascending sort: best first. Ties prefer shorter, then lex-smaller tokens.
    return (-rank, len(hyp.tokens), hyp.tokens)


def decode(
    scorer: StepScorer,
    trie: BiasTrie,
    vocab: Vocabulary,
    cfg: DecodeConfig,
) -> DecodeResult:
    """Run biased beam search; the scorer session is managed by the caller."""
    if vocab.eot_id is None:
        raise ValueError("vocabulary does not declare an end-of-transcript id (#eot header)")
    eot = vocab.eot_id

    beam: list[Hypothesis] = [
        Hypothesis(tokens=(), model_logprob=0.0, reward=0, cursor=trie.start_cursor())
    ]
    assert cfg.candidates_per_beam is not None

    for _step in range(cfg.max_len):
        live = [h for h in beam if not h.finished]
        if not live:
            break
        need = [tuple(h.cursor.continuations()) + (eot,) for h in live]
        step_scores = scorer.step([h.tokens for h in live], need, cfg.candidates_per_beam)
        if len(step_scores) != len(live):
            raise ProtocolError(
                f"scorer returned {len(step_scores)} score maps for {len(live)} hypotheses"
            )

        children: list[Hypothesis] = []
        for hyp, scores in zip(live, step_scores):
            position = len(hyp.tokens)
            for token in sorted(scores):
                logprob = hyp.model_logprob + scores[token]
                if token == eot:
                    children.append(
                        replace(
                            hyp,
                            tokens=hyp.tokens + (eot,),
                            model_logprob=logprob,
                            reward=hyp.reward + trie.finalize(hyp.cursor),
                            cursor=trie.start_cursor(),
                            finished=True,
                        )
                    )
                    continue
                outcome = trie.advance(hyp.cursor, token, position)
                commits = hyp.commits
                if outcome.committed is not None:
                    merged = list(commits)
                    record_commit(merged, outcome.committed)
                    commits = tuple(merged)
                children.append(
                    Hypothesis(
                        tokens=hyp.tokens + (token,),
                        model_logprob=logprob,
                        reward=hyp.reward + outcome.reward_delta,
                        cursor=outcome.cursor,
                        commits=commits,
                    )
                )

        pool = [h for h in beam if h.finished] + children
        pool.sort(key=lambda h: _sort_key(h, cfg))
        beam = pool[: cfg.beam_size]

    beam.sort(key=lambda h: _sort_key(h, cfg))
    finished = [h for h in beam if h.finished]
    if finished:
        best = finished[0]
    else:
        best = beam[0]
        logger.warning(
            "no hypothesis finished within max_len=%d; returning best unfinished", cfg.max_len
        )
    text = rewrite(best, list(trie.hotwords.values()), vocab)
    return DecodeResult(best=best, rewritten_text=text, all_beams=tuple(beam))


def _split_whitespace(surface: str) -> tuple[str, str, str]:
    core = surface.strip()
    if not core:
        return surface, "", ""
    lead = surface[: len(surface) - len(surface.lstrip())]
    trail = surface[len(surface.rstrip()):]
    return lead, core, trail


def rewrite(best: Hypothesis, hotwords: list[Hotword], vocab: Vocabulary) -> str:
    """Replace committed variant spans with canonical hotword spellings.

    Whitespace at span boundaries is preserved (a variant piece that starts
    with a space keeps that space before the canonical text). Special
    tokens are dropped from the surface text.
    """
    by_id = {hw.id: hw for hw in hotwords}
    out: list[str] = []
    pos = 0
    tokens = best.tokens
    for hw_id, (start, end) in best.commits:
        hw = by_id.get(hw_id)
        if hw is None:
            raise ValueError(f"commit references unknown hotword id {hw_id}")
        out.append(_plain_text(tokens[pos:start], vocab))
        lead, _core, trail = _split_whitespace(detokenize(tokens[start : end + 1], vocab))
        out.append(lead + hw.canonical_text + trail)
        pos = end + 1
    out.append(_plain_text(tokens[pos:], vocab))
    return "".join(out)


def _plain_text(ids: TokenIds, vocab: Vocabulary) -> str:
    return detokenize([t for t in ids if t not in vocab.special_ids], vocab)
