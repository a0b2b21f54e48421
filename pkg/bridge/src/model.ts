/**
 * Deterministic simulated ASR model.
 *
 * An "audio" file is a JSON descriptor {text, voice, engine?, seed} written
 * by the synthesis step (or by whatever recorded the utterance). The model
 * compiles the spoken text into a pronunciation lattice: common short words
 * are heard verbatim, longer words fan out into spelling alternatives whose
 * weights depend on the voice, mimicking how a real recognizer mishears
 * unfamiliar words differently per speaker. Scoring a hypothesis prefix
 * walks the lattice and returns a proper next-token distribution over the
 * whole vocabulary (a small uniform mixture keeps every token scoreable).
 *
 * A real model adapter would implement the same Session surface against
 * actual acoustics; everything downstream only sees the wire protocol.
 */

import * as fs from "node:fs";

import { Vocab, tokenizeText, tokenizeWord } from "./vocab";

export interface AudioDescriptor {
  text: string;
  voice: string;
  engine?: string;
  seed: number;
}

export function readDescriptor(path: string): AudioDescriptor {
  const raw = JSON.parse(fs.readFileSync(path, "utf-8"));
  if (typeof raw.text !== "string" || typeof raw.voice !== "string") {
    throw new Error(`descriptor ${path} is missing text/voice`);
  }
  return { text: raw.text, voice: raw.voice, engine: raw.engine, seed: raw.seed ?? 0 };
}

export function fnv1a(input: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < input.length; i++) {
    hash ^= input.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

// Spelling perturbations are chosen to preserve syllable structure so the
// downstream syllable filter usually keeps them: vowel-pair respellings
// stay inside one vowel group, i/y swaps only fire between consonants
// (never collapsing an i-a hiatus), and word-final ea/ee are left alone.
interface Rule {
  find: RegExp;
  to: string;
}

const RULES_A: Rule[] = [
  { find: /ae/, to: "ay" },
  { find: /ea(?!$)/, to: "ee" },
  { find: /(?<![aeiouy])i(?![aeiouy])/, to: "y" },
  { find: /ou/, to: "ow" },
  { find: /ck/, to: "k" },
  { find: /v/, to: "w" },
];
const RULES_B: Rule[] = [
  { find: /ae/, to: "ai" },
  { find: /ee(?!$)/, to: "ea" },
  { find: /(?<![aeiouy])y(?![aeiouy])/, to: "i" },
  { find: /th/, to: "t" },
  { find: /sh/, to: "s" },
  { find: /m/, to: "n" },
  { find: /l/, to: "ll" },
];

function applyRules(word: string, rules: Rule[]): string | null {
  let out = word;
  let applied = 0;
  for (const rule of rules) {
    if (applied >= 2) break;
    if (rule.find.test(out)) {
      out = out.replace(rule.find, rule.to);
      applied++;
    }
  }
  return out !== word ? out : null;
}

export function perturbA(word: string): string | null {
  return applyRules(word, RULES_A);
}

export function perturbB(word: string): string | null {
  return applyRules(word, RULES_B);
}

/** Words this short are always heard verbatim; longer ones may fan out. */
const VERBATIM_MAX_LEN = 5;
const MARKERS = new Set(["Start", "End", "Begin"]);

interface Spelling {
  tokens: number[];
  weight: number;
}

type WordLattice = Spelling[];

function spellingsFor(
  vocab: Vocab,
  word: string,
  wordIndex: number,
  voice: string,
): WordLattice {
  const tokenizePositional = (w: string) =>
    wordIndex === 0 ? tokenizeText(vocab, w) : tokenizeWord(vocab, w);
  const canonical = tokenizePositional(word);
  if (MARKERS.has(word) || word.length <= VERBATIM_MAX_LEN || !/^[a-z'-]+$/.test(word)) {
    return [{ tokens: canonical, weight: 1.0 }];
  }
  const a = perturbA(word);
  const b = perturbB(word);
  const mix: Array<[string | null, number]> =
    voice === "brit-f"
      ? [
          [a, 0.8],
          [null, 0.2],
        ]
      : voice === "brit-m"
        ? [
            [b, 0.8],
            [null, 0.2],
          ]
        : voice === "eval"
          ? [
              [a, 0.4],
              [b, 0.35],
              [null, 0.25],
            ]
          : [[null, 1.0]]; // am-m and unknown voices hear the spelling as written
  const out: WordLattice = [];
  let canonicalWeight = 0;
  for (const [spelling, weight] of mix) {
    if (spelling === null) {
      canonicalWeight += weight;
    } else {
      out.push({ tokens: tokenizePositional(spelling), weight });
    }
  }
  out.push({ tokens: canonical, weight: canonicalWeight });
  const total = out.reduce((s, sp) => s + sp.weight, 0);
  return out.map((sp) => ({ tokens: sp.tokens, weight: sp.weight / total }));
}

const TRAILING_PERIOD_P = 0.6;
const NOISE_EPS = 1e-4;

/**
 * Lattice states: inside word w spelling s at token position k, the
 * boundary before word w, the optional trailing-period state, or
 * off-lattice (uniform forever after).
 */
export class Session {
  private words: WordLattice[];
  private vocab: Vocab;
  private periodId: number;

  constructor(vocab: Vocab, descriptor: AudioDescriptor) {
    this.vocab = vocab;
    this.periodId = vocab.ids.get(".")!;
    const words = descriptor.text.split(/\s+/).filter((w) => w.length > 0);
    this.words = words.map((w, i) => spellingsFor(vocab, w, i, descriptor.voice));
  }

  /** P(next token | prefix) over the full vocabulary, natural-log.
   * Off-lattice prefixes score uniformly; either way the distribution is
   * proper (its exponentials sum to one). */
  step(prefix: number[]): Map<number, number> {
    const arcs = this.arcMass(prefix);
    const v = this.vocab.pieces.size;
    const out = new Map<number, number>();
    for (const id of this.vocab.pieces.keys()) {
      const lattice = arcs.size === 0 ? 1 / v : (arcs.get(id) ?? 0);
      out.set(id, Math.log((1 - NOISE_EPS) * lattice + NOISE_EPS / v));
    }
    return out;
  }

  /** Aggregate next-token mass from all lattice states reachable by the
   * prefix; an empty map means the prefix has left the lattice. */
  private arcMass(prefix: number[]): Map<number, number> {
    // state key: `${word}:${spelling}:${pos}` | `b:${word}` | "punct"
    let active = new Map<string, number>([[`b:0`, 1.0]]);
    for (const tok of prefix) {
      const next = new Map<string, number>();
      for (const [state, mass] of active) {
        for (const [arcTok, arcP, dest] of this.arcsFrom(state)) {
          if (arcTok === tok) {
            next.set(dest, (next.get(dest) ?? 0) + mass * arcP);
          }
        }
      }
      active = next;
      if (active.size === 0) return new Map();
    }
    const total = [...active.values()].reduce((a, b) => a + b, 0);
    const out = new Map<number, number>();
    if (total === 0) return out;
    for (const [state, mass] of active) {
      for (const [arcTok, arcP] of this.arcsFrom(state)) {
        out.set(arcTok, (out.get(arcTok) ?? 0) + (mass / total) * arcP);
      }
    }
    return out;
  }

  private arcsFrom(state: string): Array<[number, number, string]> {
    if (state === "punct") {
      return [[this.vocab.eotId, 1.0, "done"]];
    }
    if (state === "done") {
      return [];
    }
    const parts = state.split(":").map(Number);
    if (state.startsWith("b:")) {
      const w = parts[1];
      if (w >= this.words.length) {
        return [
          [this.periodId, TRAILING_PERIOD_P, "punct"],
          [this.vocab.eotId, 1 - TRAILING_PERIOD_P, "done"],
        ];
      }
      return this.words[w].map((sp, s): [number, number, string] => [
        sp.tokens[0],
        sp.weight,
        sp.tokens.length === 1 ? `b:${w + 1}` : `${w}:${s}:1`,
      ]);
    }
    const [w, s, k] = parts;
    const tokens = this.words[w][s].tokens;
    const dest = k + 1 === tokens.length ? `b:${w + 1}` : `${w}:${s}:${k + 1}`;
    return [[tokens[k], 1.0, dest]];
  }

  /** Greedy argmax decode, the transcription path of the pipeline. */
  transcribeGreedy(maxLen = 400): number[] {
    const prefix: number[] = [];
    for (let i = 0; i < maxLen; i++) {
      const scores = this.step(prefix);
      let best = -1;
      let bestScore = -Infinity;
      for (const [tok, lp] of scores) {
        if (lp > bestScore || (lp === bestScore && tok < best)) {
          best = tok;
          bestScore = lp;
        }
      }
      if (best === this.vocab.eotId) break;
      prefix.push(best);
    }
    return prefix;
  }
}

export class SimModel {
  constructor(private vocab: Vocab) {}

  open(audioPath: string): Session {
    return new Session(this.vocab, readDescriptor(audioPath));
  }
}
