#!/usr/bin/env node
/**
 * Bridge CLI: serve the scorer protocol, synthesize carrier utterances,
 * transcribe them to token JSON-lines, and export vocabulary/marker/
 * hotword assets for the decoding side.
 */

import * as path from "node:path";

import { exportAssets, exportHotwords, readWordList } from "./assets";
import { serve } from "./server";
import {
  DEFAULT_ENGINES,
  DEFAULT_TEMPLATES,
  DEFAULT_VOICES,
  makeEngine,
  readManifest,
  synthesize,
  writeManifest,
} from "./synthesize";
import { transcribeManifest, writeTranscripts } from "./transcribe";
import { buildVocab } from "./vocab";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument ${arg}`);
    const value = i + 1 < argv.length && !argv[i + 1].startsWith("--") ? argv[++i] : "true";
    flags.set(arg.slice(2), value);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`missing required flag --${name}`);
  return value;
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  const vocab = buildVocab();
  switch (command) {
    case "serve": {
      serve(vocab);
      return; // keeps reading stdin until EOF
    }
    case "export-assets": {
      const flags = parseFlags(rest);
      const out = exportAssets(vocab, required(flags, "out"));
      console.log(`wrote ${out.vocab} and ${out.markers}`);
      return;
    }
    case "export-hotwords": {
      const flags = parseFlags(rest);
      const words = readWordList(required(flags, "words"));
      exportHotwords(vocab, words, required(flags, "out"));
      console.log(`wrote ${words.length} hotwords`);
      return;
    }
    case "synthesize": {
      const flags = parseFlags(rest);
      const words = readWordList(required(flags, "words"));
      const outDir = required(flags, "out");
      const engines = (flags.get("engines")?.split(",") ?? DEFAULT_ENGINES).map(makeEngine);
      const voices = flags.get("voices")?.split(",") ?? DEFAULT_VOICES;
      const templates = flags.get("templates")?.split("|") ?? DEFAULT_TEMPLATES;
      const seed = Number(flags.get("seed") ?? "0");
      const rows = synthesize(words, outDir, engines, voices, templates, seed);
      const manifestPath = flags.get("manifest") ?? path.join(outDir, "manifest.csv");
      writeManifest(rows, manifestPath);
      const skipped = rows.filter((r) => r.note).length;
      console.log(`synthesized ${rows.length - skipped} utterances (${skipped} skipped)`);
      return;
    }
    case "transcribe": {
      const flags = parseFlags(rest);
      const rows = readManifest(required(flags, "manifest"));
      const transcripts = transcribeManifest(vocab, rows);
      writeTranscripts(transcripts, required(flags, "out"));
      const failed = transcripts.filter((t) => t.error).length;
      console.log(`transcribed ${transcripts.length - failed} rows (${failed} failed)`);
      return;
    }
    default:
      console.error(
        "usage: cli.js <serve|export-assets|export-hotwords|synthesize|transcribe> [flags]",
      );
      process.exit(2);
  }
}

main();
