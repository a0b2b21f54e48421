/**
 * Token-level transcription of synthesized audio: greedy decoding with the
 * simulated model, emitted as the extractor's JSON-lines input format. A
 * row that fails (missing or unreadable audio) keeps its slot with an
 * error field; processing continues.
 */

import * as fs from "node:fs";

import { SimModel } from "./model";
import { ManifestRow } from "./synthesize";
import { Vocab } from "./vocab";

export interface TranscriptRow {
  hotword_id: number;
  template: number;
  engine: string;
  voice: string;
  tokens: number[];
  error?: string;
}

export function transcribeManifest(vocab: Vocab, rows: ManifestRow[]): TranscriptRow[] {
  const model = new SimModel(vocab);
  return rows.map((row) => {
    const base = {
      hotword_id: row.hotword_id,
      template: row.template,
      engine: row.engine,
      voice: row.voice,
    };
    if (row.note) {
      return { ...base, tokens: [], error: row.note };
    }
    try {
      const session = model.open(row.path);
      return { ...base, tokens: session.transcribeGreedy() };
    } catch (err) {
      return { ...base, tokens: [], error: (err as Error).message };
    }
  });
}

export function writeTranscripts(rows: TranscriptRow[], outPath: string): void {
  const lines = rows.map((row) => JSON.stringify(row));
  fs.writeFileSync(outPath, lines.join("\n") + "\n");
}
