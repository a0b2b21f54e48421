/**
 * Batch speech synthesis over the carrier templates.
 *
 * Engines are pluggable adapters. The three reference engine names run in
 * mock mode here: they write JSON audio descriptors the simulated model
 * knows how to "hear" (a real adapter would shell out to an actual TTS and
 * write waveforms). Every (hotword x template x engine x voice) cell lands
 * in a CSV manifest; unavailable engines are skipped with a note.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { fnv1a } from "./model";

export const DEFAULT_ENGINES = ["cosyvoice", "f5tts", "gptsovits"];
export const DEFAULT_VOICES = ["brit-f", "brit-m", "am-m"];
export const DEFAULT_TEMPLATES = ["Start {} End", "Begin {}"];

export interface Engine {
  name: string;
  available(): boolean;
  synthesize(text: string, voice: string, seed: number, outPath: string): void;
}

export class MockEngine implements Engine {
  constructor(public name: string) {}

  available(): boolean {
    return true;
  }

  synthesize(text: string, voice: string, seed: number, outPath: string): void {
    fs.writeFileSync(
      outPath,
      JSON.stringify({ text, voice, engine: this.name, seed }) + "\n",
    );
  }
}

/** Placeholder for a real TTS binary; reports unavailable unless the
 * command exists, so mock runs skip it with a manifest note. */
export class CommandEngine implements Engine {
  constructor(
    public name: string,
    private command: string,
  ) {}

  available(): boolean {
    return fs.existsSync(this.command);
  }

  synthesize(): void {
    throw new Error(`command engine ${this.name} not wired in this build`);
  }
}

export function makeEngine(spec: string): Engine {
  if (spec.startsWith("cmd:")) {
    const [name, command] = spec.slice(4).split("=", 2);
    return new CommandEngine(name, command ?? name);
  }
  return new MockEngine(spec);
}

export interface ManifestRow {
  hotword_id: number;
  text: string;
  template: number;
  engine: string;
  voice: string;
  path: string;
  note: string;
}

export function synthesize(
  words: string[],
  outDir: string,
  engines: Engine[] = DEFAULT_ENGINES.map((n) => new MockEngine(n)),
  voices: string[] = DEFAULT_VOICES,
  templates: string[] = DEFAULT_TEMPLATES,
  seed = 0,
): ManifestRow[] {
  fs.mkdirSync(outDir, { recursive: true });
  const rows: ManifestRow[] = [];
  words.forEach((word, hotwordId) => {
    templates.forEach((template, templateIdx) => {
      const text = template.replace("{}", word);
      for (const engine of engines) {
        for (const voice of voices) {
          const fileName = `${hotwordId}_${templateIdx}_${engine.name}_${voice}.json`;
          const outPath = path.join(outDir, fileName);
          const row: ManifestRow = {
            hotword_id: hotwordId,
            text: word,
            template: templateIdx,
            engine: engine.name,
            voice,
            path: outPath,
            note: "",
          };
          if (!engine.available()) {
            row.note = "engine unavailable; skipped";
            row.path = "";
          } else {
            engine.synthesize(text, voice, seed ^ fnv1a(`${word}|${voice}`), outPath);
          }
          rows.push(row);
        }
      }
    });
  });
  return rows;
}

const MANIFEST_HEADER = "hotword_id,text,template,engine,voice,path,note";

export function writeManifest(rows: ManifestRow[], manifestPath: string): void {
  const lines = [MANIFEST_HEADER];
  for (const r of rows) {
    lines.push(
      [r.hotword_id, r.text, r.template, r.engine, r.voice, r.path, r.note]
        .map((v) => String(v).replace(/,/g, ";"))
        .join(","),
    );
  }
  fs.writeFileSync(manifestPath, lines.join("\n") + "\n");
}

export function readManifest(manifestPath: string): ManifestRow[] {
  const lines = fs.readFileSync(manifestPath, "utf-8").split("\n").filter((l) => l.trim());
  if (lines[0] !== MANIFEST_HEADER) {
    throw new Error(`unexpected manifest header: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [hotword_id, text, template, engine, voice, p, note] = line.split(",");
    return {
      hotword_id: Number(hotword_id),
      text,
      template: Number(template),
      engine,
      voice,
      path: p,
      note: note ?? "",
    };
  });
}
