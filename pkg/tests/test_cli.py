import json
import sys
from pathlib import Path

import pytest

from triebias.cli import main

FAKE = Path(__file__).parent / "fake_scorer.py"


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def ab_files(tmp_path):
    """Vocabulary, scorer table, and hotwords for the a/b toy model."""
    vocab = write(
        tmp_path / "vocab.txt",
        '#special:2\n#eot:2\n0\t" a"\n1\t" b"\n2\t"<eot>"\n',
    )
    table = write(
        tmp_path / "table.json",
        json.dumps(
            {
                "order": 2,
                "floor_logprob": -25.0,
                "contexts": {
                    "": {"0": 0.7, "1": 0.3},
                    "0,0": {"2": 1.0},
                    "0,1": {"2": 1.0},
                    "1,0": {"2": 1.0},
                    "1,1": {"2": 1.0},
                },
            }
        ),
    )
    hotwords = write(
        tmp_path / "hotwords.jsonl",
        '{"id": 1, "text": "bee", "canonical": [1, 1], "variants": [[1, 1]]}\n',
    )
    manifest = write(tmp_path / "manifest.tsv", "u1\tclip1.wav\nu2\tclip2.wav\n")
    return vocab, table, hotwords, manifest


class TestMakeBiaslist:
    def setup_files(self, tmp_path, n_rare=30):
        freq_rows = [("the", 100), ("cat", 90)] + [(f"rare{i}", 1) for i in range(n_rare)]
        freq = write(tmp_path / "freq.tsv", "\n".join(f"{w}\t{c}" for w, c in freq_rows) + "\n")
        refs = write(tmp_path / "refs.tsv", "u1\tTHE CAT rare1\nu2\tthe rare2 rare3\n")
        return freq, refs

    def test_exit_zero_and_composition(self, tmp_path, capsys):
        freq, refs = self.setup_files(tmp_path)
        out = tmp_path / "bias.jsonl"
        rc = main(
            [
                "make-biaslist",
                "--freq", str(freq),
                "--refs", str(refs),
                "--n", "5",
                "--cutoff", "2",
                "--seed", "7",
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert rows[0]["utt"] == "u1" and rows[0]["targets"] == ["rare1"]
        assert rows[1]["targets"] == ["rare2", "rare3"]
        assert all(len(r["distractors"]) == 5 for r in rows)

    def test_deterministic_bytes(self, tmp_path):
        freq, refs = self.setup_files(tmp_path)
        out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        args = ["make-biaslist", "--freq", str(freq), "--refs", str(refs),
                "--n", "5", "--cutoff", "2", "--seed", "7"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_oversized_n_warns_but_succeeds(self, tmp_path, capsys, caplog):
        freq, refs = self.setup_files(tmp_path, n_rare=3)
        out = tmp_path / "bias.jsonl"
        rc = main(
            ["make-biaslist", "--freq", str(freq), "--refs", str(refs),
             "--n", "100", "--cutoff", "2", "--seed", "1", "--out", str(out)]
        )
        assert rc == 0
        assert any("wanted 100" in rec.getMessage() for rec in caplog.records)

    def test_missing_freq_file_exits_2(self, tmp_path, capsys):
        refs = write(tmp_path / "refs.tsv", "u1\thello\n")
        rc = main(
            ["make-biaslist", "--freq", str(tmp_path / "nope.tsv"), "--refs", str(refs),
             "--out", str(tmp_path / "o.jsonl")]
        )
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestExtractVariants:
    def fixture_files(self, tmp_path):
        vocab = write(
            tmp_path / "vocab.txt",
            "#special:0\n#eot:0\n"
            '0\t"<eot>"\n1\t"Start"\n2\t" End"\n3\t"Begin"\n'
            '4\t" valen"\n5\t"tinian"\n6\t" valentinian"\n7\t" kaylith"\n8\t"."\n',
        )
        markers = write(
            tmp_path / "markers.json",
            '{"start": [[1]], "end": [[2]], "begin": [[3]], "punctuation": [8]}',
        )
        hotwords = write(
            tmp_path / "hw.jsonl",
            '{"id": 1, "text": "valentinian", "canonical": [6], "variants": [[6]]}\n',
        )
        return vocab, markers, hotwords

    def test_sample_fixture_extracts_expected_set(self, tmp_path, capsys):
        vocab, markers, hotwords = self.fixture_files(tmp_path)
        transcripts = write(
            tmp_path / "tr.jsonl",
            json.dumps({"hotword_id": 1, "template": 0, "engine": "e", "voice": "v",
                        "tokens": [1, 4, 5, 2]}) + "\n"
            + json.dumps({"hotword_id": 1, "template": 0, "engine": "e", "voice": "v",
                          "tokens": [1, 6, 2]}) + "\n",
        )
        out = tmp_path / "out.jsonl"
        rc = main(
            ["extract-variants", "--transcripts", str(transcripts), "--markers", str(markers),
             "--hotwords", str(hotwords), "--vocab", str(vocab), "--out", str(out)]
        )
        assert rc == 0
        row = json.loads(out.read_text().splitlines()[0])
        assert row["variants"] == [[6], [4, 5]]  # canonical + surviving variant

    def test_exact_match_only_yields_zero_variants(self, tmp_path):
        vocab, markers, hotwords = self.fixture_files(tmp_path)
        transcripts = write(
            tmp_path / "tr.jsonl",
            json.dumps({"hotword_id": 1, "template": 0, "engine": "e", "voice": "v",
                        "tokens": [1, 6, 2]}) + "\n",
        )
        out = tmp_path / "out.jsonl"
        rc = main(
            ["extract-variants", "--transcripts", str(transcripts), "--markers", str(markers),
             "--hotwords", str(hotwords), "--vocab", str(vocab), "--out", str(out)]
        )
        assert rc == 0
        row = json.loads(out.read_text().splitlines()[0])
        assert row["variants"] == [[6]]  # canonical only

    def test_missing_marker_file_exits_2(self, tmp_path, capsys):
        vocab, _markers, hotwords = self.fixture_files(tmp_path)
        transcripts = write(tmp_path / "tr.jsonl", "")
        rc = main(
            ["extract-variants", "--transcripts", str(transcripts),
             "--markers", str(tmp_path / "missing.json"),
             "--hotwords", str(hotwords), "--vocab", str(vocab),
             "--out", str(tmp_path / "out.jsonl")]
        )
        assert rc == 2


class TestDecode:
    def test_toy_fixture_reproduces_expected_output(self, ab_files, tmp_path):
        vocab, table, hotwords, manifest = ab_files
        out = tmp_path / "hyps.tsv"
        rc = main(
            ["decode", "--scorer-table", str(table), "--hotwords", str(hotwords),
             "--vocab", str(vocab), "--manifest", str(manifest), "--out", str(out),
             "--beam-size", "3", "--max-len", "3", "--scheme", "uniform"]
        )
        assert rc == 0
        assert out.read_text() == "u1\tbee\nu2\tbee\n"
        commits = [json.loads(line) for line in
                   Path(str(out) + ".commits.jsonl").read_text().splitlines()]
        assert commits[0]["commits"] == [{"hotword": 1, "text": "bee", "start": 0, "end": 1}]
        assert commits[0]["reward"] == 2

    def test_final_scheme_keeps_model_output(self, ab_files, tmp_path):
        vocab, table, hotwords, manifest = ab_files
        out = tmp_path / "hyps.tsv"
        rc = main(
            ["decode", "--scorer-table", str(table), "--hotwords", str(hotwords),
             "--vocab", str(vocab), "--manifest", str(manifest), "--out", str(out),
             "--beam-size", "3", "--max-len", "3", "--scheme", "final"]
        )
        assert rc == 0
        assert out.read_text() == "u1\ta a\nu2\ta a\n"

    def test_rerun_is_byte_identical(self, ab_files, tmp_path):
        vocab, table, hotwords, manifest = ab_files
        args = ["decode", "--scorer-table", str(table), "--hotwords", str(hotwords),
                "--vocab", str(vocab), "--manifest", str(manifest),
                "--beam-size", "3", "--max-len", "3"]
        out1, out2 = tmp_path / "h1.tsv", tmp_path / "h2.tsv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert (
            Path(str(out1) + ".commits.jsonl").read_bytes()
            == Path(str(out2) + ".commits.jsonl").read_bytes()
        )

    def test_empty_hotword_file_equals_unbiased(self, ab_files, tmp_path):
        vocab, table, _hotwords, manifest = ab_files
        empty = write(tmp_path / "empty.jsonl", "")
        base = ["decode", "--scorer-table", str(table), "--vocab", str(vocab),
                "--manifest", str(manifest), "--beam-size", "3", "--max-len", "3"]
        out_none, out_empty = tmp_path / "none.tsv", tmp_path / "empty.tsv"
        assert main(base + ["--out", str(out_none)]) == 0
        assert main(base + ["--hotwords", str(empty), "--out", str(out_empty)]) == 0
        assert out_none.read_text() == out_empty.read_text() == "u1\ta a\nu2\ta a\n"

    def test_workers_split_utterances(self, ab_files, tmp_path):
        vocab, table, hotwords, manifest = ab_files
        out = tmp_path / "hyps.tsv"
        rc = main(
            ["decode", "--scorer-table", str(table), "--hotwords", str(hotwords),
             "--vocab", str(vocab), "--manifest", str(manifest), "--out", str(out),
             "--beam-size", "3", "--max-len", "3", "--workers", "4"]
        )
        assert rc == 0
        assert out.read_text() == "u1\tbee\nu2\tbee\n"

    def test_protocol_violation_exits_3(self, ab_files, tmp_path, capsys):
        vocab, _table, hotwords, manifest = ab_files
        out = tmp_path / "hyps.tsv"
        rc = main(
            ["decode", "--scorer-cmd", f"{sys.executable} {FAKE} missing-need",
             "--hotwords", str(hotwords), "--vocab", str(vocab),
             "--manifest", str(manifest), "--out", str(out),
             "--beam-size", "2", "--max-len", "3"]
        )
        assert rc == 3
        assert "missing from scores" in capsys.readouterr().err

    def test_wire_scorer_decodes(self, ab_files, tmp_path):
        vocab, _table, _hotwords, manifest = ab_files
        out = tmp_path / "hyps.tsv"
        rc = main(
            ["decode", "--scorer-cmd", f"{sys.executable} {FAKE} uniform",
             "--vocab", str(vocab), "--manifest", str(manifest), "--out", str(out),
             "--beam-size", "2", "--max-len", "2"]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2 and lines[0].startswith("u1\t")

    def test_requires_exactly_one_scorer(self, ab_files, tmp_path, capsys):
        vocab, table, _hw, manifest = ab_files
        rc = main(
            ["decode", "--vocab", str(vocab), "--manifest", str(manifest),
             "--out", str(tmp_path / "h.tsv")]
        )
        assert rc == 2


class TestScore:
    def test_identical_ref_hyp_all_zero(self, tmp_path, capsys):
        refs = write(tmp_path / "refs.tsv", "u1\tthe cat sat\n")
        hyps = write(tmp_path / "hyps.tsv", "u1\tthe cat sat\n")
        out = tmp_path / "summary.json"
        rc = main(["score", "--refs", str(refs), "--hyps", str(hyps), "--out", str(out)])
        assert rc == 0
        summary = json.loads(out.read_text())
        assert summary["wer"] == 0.0 and summary["errors"] == 0
        assert "0.00" in capsys.readouterr().out

    def test_acme_fixture(self, tmp_path, capsys):
        refs = write(tmp_path / "refs.tsv", "u1\tstart acme end\n")
        hyps = write(tmp_path / "hyps.tsv", "u1\tstart ak me end\n")
        bias = write(
            tmp_path / "bias.jsonl",
            '{"utt": "u1", "targets": ["acme"], "distractors": []}\n',
        )
        out = tmp_path / "summary.json"
        per_utt = tmp_path / "per_utt.tsv"
        rc = main(
            ["score", "--refs", str(refs), "--hyps", str(hyps), "--biaslist", str(bias),
             "--out", str(out), "--per-utt", str(per_utt)]
        )
        assert rc == 0
        summary = json.loads(out.read_text())
        assert summary["wer"] == pytest.approx(2 / 3)
        assert summary["u_wer"] == pytest.approx(1 / 2)
        assert summary["b_wer"] == pytest.approx(1 / 1)
        body = per_utt.read_text().splitlines()
        assert body[0].startswith("utt\t") and body[1].startswith("u1\t")

    def test_mismatched_utts_exit_2_listing_first_five(self, tmp_path, capsys):
        refs = write(
            tmp_path / "refs.tsv", "".join(f"u{i}\ttext\n" for i in range(8))
        )
        hyps = write(tmp_path / "hyps.tsv", "u0\ttext\n")
        rc = main(["score", "--refs", str(refs), "--hyps", str(hyps)])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.count("missing hypothesis") == 5


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
