/**
 * End-to-end directional check over the full pipeline: export assets,
 * build biasing lists, synthesize and transcribe pronunciation variants,
 * extract them, then decode a 60-utterance eval set with and without the
 * trie. Biasing must not raise B-WER, and U-WER may degrade by at most
 * 0.5 absolute WER points. Numbers at this desk scale are directional
 * only; the same harness drives full-size runs when a real model adapter
 * is attached.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

const CLI = path.join(__dirname, "..", "dist", "cli.js");
const PYTHON = process.env.PYTHON ?? "python3";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-e2e-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function run(cmd: string, args: string[]): string {
  const result = spawnSync(cmd, args, { encoding: "utf-8", maxBuffer: 64 * 1024 * 1024 });
  if (result.status !== 0) {
    throw new Error(
      `${cmd} ${args.join(" ")} exited ${result.status}\nstdout: ${result.stdout}\nstderr: ${result.stderr}`,
    );
  }
  return result.stdout;
}

function py(args: string[]): string {
  return run(PYTHON, ["-m", "triebias.cli", ...args]);
}

// deterministic small rng
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const COMMON = [
  "the", "cat", "saw", "a", "dog", "in", "park", "old", "man", "ship",
  "sun", "red", "ran", "to", "and", "we", "met", "by", "big", "sea",
];

function fantasyWords(n: number): string[] {
  const prefixes = ["kae", "velo", "mora", "tarn", "zepha", "quil", "bryn", "thal", "orin", "cass"];
  const middles = ["li", "ra", "ne", "vi", "do", "mi"];
  const suffixes = ["thane", "rion", "lith", "vine", "mande", "loria"];
  const out: string[] = [];
  for (const s of suffixes) {
    for (const m of middles) {
      for (const p of prefixes) {
        const word = p + m + s;
        if (word.length >= 6 && !out.includes(word)) out.push(word);
        if (out.length === n) return out;
      }
    }
  }
  throw new Error(`cannot build ${n} distinct words`);
}

interface Corpus {
  refs: string;
  freq: string;
  manifest: string;
  words: string;
  utterances: number;
}

function buildCorpus(dir: string): Corpus {
  const rng = mulberry32(20250809);
  const rare = fantasyWords(120);
  const targetsPool = rare.slice(0, 40);
  const audioDir = path.join(dir, "audio");
  fs.mkdirSync(audioDir, { recursive: true });

  const pick = <T>(arr: T[]): T => arr[Math.floor(rng() * arr.length)];
  const refLines: string[] = [];
  const manifestLines: string[] = [];
  const utterances = 60;
  for (let i = 0; i < utterances; i++) {
    const words: string[] = ["the"];
    const len = 3 + Math.floor(rng() * 5);
    for (let j = 0; j < len; j++) words.push(pick(COMMON));
    const nRare = 1 + (rng() < 0.4 ? 1 : 0);
    for (let j = 0; j < nRare; j++) {
      const pos = 1 + Math.floor(rng() * (words.length - 1));
      words.splice(pos, 0, pick(targetsPool));
    }
    const text = words.join(" ");
    const utt = `utt${String(i).padStart(3, "0")}`;
    const audio = path.join(audioDir, `${utt}.json`);
    fs.writeFileSync(audio, JSON.stringify({ text, voice: "eval", seed: i }));
    refLines.push(`${utt}\t${text}`);
    manifestLines.push(`${utt}\t${audio}`);
  }

  const freqLines = COMMON.map((w) => `${w}\t100`).concat(rare.map((w) => `${w}\t1`));
  const refs = path.join(dir, "refs.tsv");
  const freq = path.join(dir, "freq.tsv");
  const manifest = path.join(dir, "manifest.tsv");
  const words = path.join(dir, "words.txt");
  fs.writeFileSync(refs, refLines.join("\n") + "\n");
  fs.writeFileSync(freq, freqLines.join("\n") + "\n");
  fs.writeFileSync(manifest, manifestLines.join("\n") + "\n");
  fs.writeFileSync(words, rare.join("\n") + "\n");
  return { refs, freq, manifest, words, utterances };
}

interface Summary {
  wer: number;
  u_wer: number;
  b_wer: number;
  errors: number;
  ref_words: number;
}

function readSummary(p: string): Summary {
  return JSON.parse(fs.readFileSync(p, "utf-8"));
}

describe("end-to-end biasing pipeline", () => {
  it(
    "uniform multi-pron biasing improves B-WER without hurting U-WER",
    { timeout: 300_000 },
    () => {
      const corpus = buildCorpus(tmp);
      expect(corpus.utterances).toBeGreaterThanOrEqual(50);

      // model-side assets consumed by the decoder
      run("node", [CLI, "export-assets", "--out", path.join(tmp, "assets")]);
      const vocab = path.join(tmp, "assets", "vocab.txt");
      const markers = path.join(tmp, "assets", "markers.json");

      // biasing lists (targets + sampled distractors per utterance)
      const biaslist = path.join(tmp, "bias.jsonl");
      py([
        "make-biaslist",
        "--freq", corpus.freq,
        "--refs", corpus.refs,
        "--n", "100",
        "--cutoff", String(COMMON.length),
        "--seed", "11",
        "--out", biaslist,
      ]);

      // synthesize carrier utterances and transcribe them to tokens
      const synthDir = path.join(tmp, "synth");
      run("node", [CLI, "synthesize", "--words", corpus.words, "--out", synthDir, "--seed", "5"]);
      const transcripts = path.join(tmp, "transcripts.jsonl");
      run("node", [CLI, "transcribe", "--manifest", path.join(synthDir, "manifest.csv"),
        "--out", transcripts]);

      // canonical hotwords, then merge in extracted variants
      const canonical = path.join(tmp, "hotwords.jsonl");
      run("node", [CLI, "export-hotwords", "--words", corpus.words, "--out", canonical]);
      const hotwords = path.join(tmp, "hotwords-variants.jsonl");
      py([
        "extract-variants",
        "--transcripts", transcripts,
        "--markers", markers,
        "--hotwords", canonical,
        "--vocab", vocab,
        "--out", hotwords,
      ]);
      const multiPron = fs
        .readFileSync(hotwords, "utf-8")
        .split("\n")
        .filter((l) => l.trim())
        .map((l) => JSON.parse(l))
        .filter((h) => h.variants.length > 1);
      expect(multiPron.length).toBeGreaterThan(10); // synthesis really added variants

      // decode the eval set without and with the trie
      const decodeBase = [
        "decode",
        "--scorer-cmd", `node ${CLI} serve`,
        "--vocab", vocab,
        "--manifest", corpus.manifest,
        "--beam-size", "5",
        "--max-len", "150",
        "--scheme", "uniform",
      ];
      const baseHyps = path.join(tmp, "base.tsv");
      const biasedHyps = path.join(tmp, "biased.tsv");
      py([...decodeBase, "--out", baseHyps]);
      py([...decodeBase, "--hotwords", hotwords, "--out", biasedHyps]);

      // score both runs against the same biasing lists
      const baseSummary = path.join(tmp, "base.json");
      const biasedSummary = path.join(tmp, "biased.json");
      py(["score", "--refs", corpus.refs, "--hyps", baseHyps,
        "--biaslist", biaslist, "--out", baseSummary]);
      py(["score", "--refs", corpus.refs, "--hyps", biasedHyps,
        "--biaslist", biaslist, "--out", biasedSummary]);

      const base = readSummary(baseSummary);
      const biased = readSummary(biasedSummary);
      console.log(
        `baseline WER=${base.wer.toFixed(4)} U=${base.u_wer.toFixed(4)} B=${base.b_wer.toFixed(4)} | ` +
          `biased WER=${biased.wer.toFixed(4)} U=${biased.u_wer.toFixed(4)} B=${biased.b_wer.toFixed(4)}`,
      );

      expect(base.b_wer).toBeGreaterThan(0); // the check is not vacuous
      expect(biased.b_wer).toBeLessThanOrEqual(base.b_wer);
      expect(biased.u_wer - base.u_wer).toBeLessThanOrEqual(0.005);
    },
  );
});
