/**
 * Export the model-side assets the decoder pipeline consumes: the
 * vocabulary file, the marker tokenization config, and canonical hotword
 * records (id, text, canonical token ids) for a word list.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Vocab, markerConfig, tokenizeWord, vocabFileContents } from "./vocab";

export function exportAssets(vocab: Vocab, outDir: string): { vocab: string; markers: string } {
  fs.mkdirSync(outDir, { recursive: true });
  const vocabPath = path.join(outDir, "vocab.txt");
  const markersPath = path.join(outDir, "markers.json");
  fs.writeFileSync(vocabPath, vocabFileContents(vocab));
  fs.writeFileSync(markersPath, JSON.stringify(markerConfig(vocab), null, 2) + "\n");
  return { vocab: vocabPath, markers: markersPath };
}

export function readWordList(wordsPath: string): string[] {
  return fs
    .readFileSync(wordsPath, "utf-8")
    .split("\n")
    .map((w) => w.trim())
    .filter((w) => w.length > 0);
}

/** Hotword JSON-lines with canonical tokens only (variants start as just
 * the canonical path; extraction merges in the synthesized ones). */
export function exportHotwords(vocab: Vocab, words: string[], outPath: string): void {
  const lines = words.map((word, id) =>
    JSON.stringify({
      id,
      text: word,
      canonical: tokenizeWord(vocab, word),
      variants: [tokenizeWord(vocab, word)],
    }),
  );
  fs.writeFileSync(outPath, lines.join("\n") + "\n");
}
