"""Prefix-trie contextual biasing for beam-search ASR decoding."""

__version__ = "0.1.0"

from .biaslist import UtteranceBiasList, VocabularySplit, build_utterance_list, split_vocabulary
from .decoder import DecodeConfig, DecodeResult, Hypothesis, decode, rewrite
from .metrics import AlignmentReport, WerBreakdown, aggregate, align, score
from .scorer import ProcessScorer, ProtocolError, StepScorer, TableScorer
from .tokens import (
    NormalizedWord,
    Vocabulary,
    VocabularyError,
    detokenize,
    load_vocabulary,
    normalize_word,
)
from .trie import (
    AdvanceOutcome,
    BiasTrie,
    Hotword,
    TrieCursor,
    TrieError,
    build_trie,
    committed_matches,
    load_hotwords,
)
from .variants import (
    MarkerConfig,
    TemplateSpec,
    VariantCandidate,
    count_syllables,
    extract_candidates,
    extract_variants,
    render_templates,
    syllable_filter,
)

__all__ = [
    "AdvanceOutcome",
    "AlignmentReport",
    "BiasTrie",
    "DecodeConfig",
    "DecodeResult",
    "Hotword",
    "Hypothesis",
    "MarkerConfig",
    "NormalizedWord",
    "ProcessScorer",
    "ProtocolError",
    "StepScorer",
    "TableScorer",
    "TemplateSpec",
    "TrieCursor",
    "TrieError",
    "UtteranceBiasList",
    "VariantCandidate",
    "Vocabulary",
    "VocabularyError",
    "VocabularySplit",
    "WerBreakdown",
    "aggregate",
    "align",
    "build_trie",
    "build_utterance_list",
    "committed_matches",
    "count_syllables",
    "decode",
    "detokenize",
    "extract_candidates",
    "extract_variants",
    "load_hotwords",
    "load_vocabulary",
    "normalize_word",
    "render_templates",
    "rewrite",
    "score",
    "split_vocabulary",
    "syllable_filter",
]
