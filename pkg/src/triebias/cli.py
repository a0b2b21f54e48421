"""Command-line pipeline: biasing lists, variant extraction, biased
decoding, and WER/U-WER/B-WER scoring.

All intermediate artifacts are line-oriented (JSON-lines / TSV) so runs
diff cleanly. Exit codes: 0 ok, 2 input error, 3 protocol/runtime error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time
from dataclasses import dataclass, asdict
from pathlib import Path

from . import __version__
from .biaslist import (
    DEFAULT_COMMON_CUTOFF,
    DEFAULT_DISTRACTORS,
    build_utterance_list,
    dump_bias_lists,
    load_bias_lists,
    split_vocabulary,
)
from .decoder import DecodeConfig, decode
from .metrics import WerBreakdown, aggregate, align, score
from .scorer import ProcessScorer, ProtocolError, TableScorer
from .tokens import load_vocabulary, normalize_words
from .trie import SCHEME_FINAL, SCHEME_UNIFORM, build_trie, dump_hotwords, load_hotwords
from .variants import extract_variants, load_marker_config, load_transcripts

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3


@dataclass
class RunManifest:
    command: str
    arguments: dict
    seed: int | None
    version: str
    timestamp: str

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _manifest(command: str, args: argparse.Namespace, seed: int | None = None) -> RunManifest:
    arguments = {
        k: str(v) if isinstance(v, Path) else v
        for k, v in vars(args).items()
        if k != "func"
    }
    return RunManifest(
        command=command,
        arguments=arguments,
        seed=seed,
        version=__version__,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    )


def _read_utt_tsv(path: Path) -> list[tuple[str, str]]:
    if not path.exists():
        raise ValueError(f"file not found: {path}")
    rows: list[tuple[str, str]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected utt<TAB>text, got {line!r}")
        rows.append((parts[0], parts[1]))
    return rows


# -- make-biaslist ----------------------------------------------------------


def cmd_make_biaslist(args: argparse.Namespace) -> int:
    split = split_vocabulary(args.freq, cutoff=args.cutoff)
    refs = _read_utt_tsv(args.refs)
    lists = [
        build_utterance_list(
            utt, normalize_words(text), split, n_distractors=args.n, seed=args.seed
        )
        for utt, text in refs
    ]
    dump_bias_lists(lists, args.out)
    _manifest("make-biaslist", args, seed=args.seed).write(
        Path(str(args.out) + ".manifest.json")
    )
    total_targets = sum(len(bl.targets) for bl in lists)
    print(f"wrote {len(lists)} biasing lists ({total_targets} target words) to {args.out}")
    return EXIT_OK


# -- extract-variants --------------------------------------------------------


def cmd_extract_variants(args: argparse.Namespace) -> int:
    vocab = load_vocabulary(args.vocab)
    markers = load_marker_config(args.markers)
    hotwords = load_hotwords(args.hotwords, vocab)
    rows = load_transcripts(args.transcripts)
    merged, stats = extract_variants(
        rows, markers, hotwords, vocab, include_canonical=not args.without_canonical
    )
    dump_hotwords(merged, args.out)
    for hw in merged:
        st = stats[hw.id]
        print(
            f"{hw.canonical_text}: extracted {st.extracted}, kept {st.kept}, "
            f"discarded {st.discarded}, variants {len(hw.variants)}"
        )
    return EXIT_OK


# -- decode -------------------------------------------------------------------


def _decode_one(scorer, trie, vocab, cfg, utt: str, audio: str):
    scorer.begin(audio, session=utt)
    try:
        return decode(scorer, trie, vocab, cfg)
    finally:
        scorer.end()


def cmd_decode(args: argparse.Namespace) -> int:
    if (args.scorer_table is None) == (args.scorer_cmd is None):
        raise ValueError("exactly one of --scorer-table or --scorer-cmd is required")
    vocab = load_vocabulary(args.vocab)
    hotwords = load_hotwords(args.hotwords, vocab) if args.hotwords else []
    trie = build_trie(hotwords, args.scheme)
    cfg = DecodeConfig(
        beam_size=args.beam_size,
        max_len=args.max_len,
        candidates_per_beam=args.candidates_per_beam,
        length_normalization=args.length_normalization,
        reward_scale=args.reward_scale,
    )
    manifest = _read_utt_tsv(args.manifest)

    if args.scorer_table is not None:
        scorer = TableScorer.from_file(args.scorer_table, vocab)
        close = lambda: None  # noqa: E731
    else:
        scorer = ProcessScorer(args.scorer_cmd.split())
        close = scorer.close

    workers = args.workers
    if workers > 1 and scorer.concurrency != "concurrent":
        print("scorer is serial; running with a single worker", file=sys.stderr)
        workers = 1

    results = {}
    try:
        if workers > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_decode_one, scorer, trie, vocab, cfg, utt, audio): utt
                    for utt, audio in manifest
                }
                for fut in concurrent.futures.as_completed(futures):
                    results[futures[fut]] = fut.result()
        else:
            for utt, audio in manifest:
                results[utt] = _decode_one(scorer, trie, vocab, cfg, utt, audio)
    finally:
        close()

    out = Path(args.out)
    commits_path = Path(str(out) + ".commits.jsonl")
    with out.open("w", encoding="utf-8") as hyp_fh, commits_path.open(
        "w", encoding="utf-8"
    ) as commit_fh:
        for utt, _audio in manifest:
            result = results[utt]
            hyp_fh.write(f"{utt}\t{result.rewritten_text.strip()}\n")
            commit_fh.write(
                json.dumps(
                    {
                        "utt": utt,
                        "finished": result.best.finished,
                        "fused_score": result.best.fused_score(cfg.reward_scale),
                        "model_logprob": result.best.model_logprob,
                        "reward": result.best.reward,
                        "commits": [
                            {
                                "hotword": hw_id,
                                "text": trie.hotwords[hw_id].canonical_text,
                                "start": span[0],
                                "end": span[1],
                            }
                            for hw_id, span in result.best.commits
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    _manifest("decode", args).write(Path(str(out) + ".manifest.json"))
    print(f"decoded {len(manifest)} utterances to {out}")
    return EXIT_OK


# -- score --------------------------------------------------------------------


def cmd_score(args: argparse.Namespace) -> int:
    refs = dict(_read_utt_tsv(args.refs))
    hyps = dict(_read_utt_tsv(args.hyps))
    missing = [u for u in refs if u not in hyps]
    extra = [u for u in hyps if u not in refs]
    if missing or extra:
        problems = [f"missing hypothesis for {u!r}" for u in missing[:5]]
        problems += [f"hypothesis for unknown utterance {u!r}" for u in extra[:5]]
        raise ValueError("utterance ids do not match: " + "; ".join(problems[:5]))
    bias_lists = load_bias_lists(args.biaslist) if args.biaslist else {}

    per_utt: list[tuple[str, WerBreakdown]] = []
    for utt, ref_text in refs.items():
        bias_words = bias_lists[utt].word_set() if utt in bias_lists else frozenset()
        report = align(normalize_words(ref_text), normalize_words(hyps[utt]))
        per_utt.append((utt, score(report, bias_words)))

    total = aggregate(wb for _, wb in per_utt)
    summary = total.as_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.per_utt:
        with Path(args.per_utt).open("w", encoding="utf-8") as fh:
            fh.write("utt\twer\tu_wer\tb_wer\terrors\tref_words\n")
            for utt, wb in per_utt:
                fh.write(
                    f"{utt}\t{_fmt_rate(wb.wer)}\t{_fmt_rate(wb.u_wer)}"
                    f"\t{_fmt_rate(wb.b_wer)}\t{wb.errors}\t{wb.ref_words}\n"
                )

    print(f"{'':<10}{'WER':>8}{'U-WER':>8}{'B-WER':>8}")
    print(
        f"{'overall':<10}{_fmt_pct(total.wer):>8}{_fmt_pct(total.u_wer):>8}"
        f"{_fmt_pct(total.b_wer):>8}"
    )
    print(
        f"errors: {total.errors} over {total.ref_words} reference words "
        f"(biased {total.b_errors}/{total.b_ref}, unbiased {total.u_errors}/{total.u_ref})"
    )
    return EXIT_OK


def _fmt_rate(value: float) -> str:
    return "undefined" if value == float("inf") else f"{value:.6f}"


def _fmt_pct(value: float) -> str:
    return "undef" if value == float("inf") else f"{100 * value:.2f}"


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triebias",
        description="Prefix-trie contextual biasing pipeline for beam-search decoding",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-biaslist", help="build per-utterance biasing lists")
    p.add_argument("--freq", type=Path, required=True, help="word<TAB>count frequency file")
    p.add_argument("--refs", type=Path, required=True, help="utt<TAB>transcript references")
    p.add_argument("--n", type=int, default=DEFAULT_DISTRACTORS, help="distractors per utterance")
    p.add_argument("--cutoff", type=int, default=DEFAULT_COMMON_CUTOFF, help="common-word cutoff")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output JSON-lines path")
    p.set_defaults(func=cmd_make_biaslist)

    p = sub.add_parser("extract-variants", help="extract pronunciation variants")
    p.add_argument("--transcripts", type=Path, required=True, help="bridge transcript JSON-lines")
    p.add_argument("--markers", type=Path, required=True, help="marker config JSON")
    p.add_argument("--hotwords", type=Path, required=True, help="canonical hotword JSON-lines")
    p.add_argument("--vocab", type=Path, required=True, help="vocabulary file")
    p.add_argument("--out", type=Path, required=True, help="output hotword JSON-lines")
    p.add_argument(
        "--without-canonical",
        action="store_true",
        help="do not include the canonical spelling as a trie path",
    )
    p.set_defaults(func=cmd_extract_variants)

    p = sub.add_parser("decode", help="biased beam-search decoding")
    p.add_argument("--scorer-table", type=Path, help="toy table-scorer JSON file")
    p.add_argument("--scorer-cmd", help="command serving the scorer wire protocol")
    p.add_argument("--hotwords", type=Path, help="hotword JSON-lines (omit for unbiased)")
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True, help="utt<TAB>audio-ref lines")
    p.add_argument("--out", type=Path, required=True, help="output utt<TAB>text hypotheses")
    p.add_argument("--beam-size", type=int, default=10)
    p.add_argument("--max-len", type=int, default=256)
    p.add_argument("--candidates-per-beam", type=int, default=None)
    p.add_argument("--scheme", choices=[SCHEME_FINAL, SCHEME_UNIFORM], default=SCHEME_UNIFORM)
    p.add_argument("--reward-scale", type=float, default=1.0)
    p.add_argument("--length-normalization", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="WER / U-WER / B-WER scoring")
    p.add_argument("--refs", type=Path, required=True, help="utt<TAB>text references")
    p.add_argument("--hyps", type=Path, required=True, help="utt<TAB>text hypotheses")
    p.add_argument("--biaslist", type=Path, help="bias-list JSON-lines from make-biaslist")
    p.add_argument("--out", type=Path, help="JSON summary output path")
    p.add_argument("--per-utt", type=Path, help="per-utterance TSV output path")
    p.set_defaults(func=cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
