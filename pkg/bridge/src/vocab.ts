/**
 * Fixed token inventory for the simulated ASR model.
 *
 * Marker words carry dedicated whole-word pieces (the way frequent words
 * do under BPE); everything else tokenizes into single-letter pieces with
 * the usual leading-space convention. Detokenization is plain
 * concatenation, matching the decoder side.
 */

export interface Vocab {
  pieces: Map<number, string>;
  ids: Map<string, number>;
  specialIds: Set<number>;
  eotId: number;
  maxPieceLen: number;
}

const MARKER_PIECES = [
  "Start",
  " Start",
  "End",
  " End",
  "Begin",
  " Begin",
];

const PUNCT_PIECES = [".", ","];

export function buildVocab(): Vocab {
  const pieces = new Map<number, string>();
  const ids = new Map<string, number>();
  let next = 0;
  const add = (piece: string): number => {
    if (ids.has(piece)) return ids.get(piece)!;
    const id = next++;
    pieces.set(id, piece);
    ids.set(piece, id);
    return id;
  };
  const eotId = add("<eot>");
  for (const piece of MARKER_PIECES) add(piece);
  for (const piece of PUNCT_PIECES) add(piece);
  for (let c = 97; c <= 122; c++) {
    add(" " + String.fromCharCode(c));
    add(String.fromCharCode(c));
  }
  add("'");
  add("-");
  let maxPieceLen = 0;
  for (const piece of ids.keys()) maxPieceLen = Math.max(maxPieceLen, piece.length);
  return { pieces, ids, specialIds: new Set([eotId]), eotId, maxPieceLen };
}

/** Greedy longest-match tokenization; throws on uncoverable input. */
export function tokenizeText(vocab: Vocab, text: string): number[] {
  const out: number[] = [];
  let pos = 0;
  while (pos < text.length) {
    let matched = false;
    for (let len = Math.min(vocab.maxPieceLen, text.length - pos); len >= 1; len--) {
      const id = vocab.ids.get(text.slice(pos, pos + len));
      if (id !== undefined) {
        out.push(id);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw new Error(`cannot tokenize ${JSON.stringify(text)} at offset ${pos}`);
    }
  }
  return out;
}

/** Tokenize a single word as it appears mid-utterance (leading space). */
export function tokenizeWord(vocab: Vocab, word: string): number[] {
  return tokenizeText(vocab, " " + word);
}

export function detokenize(vocab: Vocab, tokens: number[]): string {
  let out = "";
  for (const id of tokens) {
    const piece = vocab.pieces.get(id);
    if (piece === undefined) throw new Error(`unknown token id ${id}`);
    out += piece;
  }
  return out;
}

/** Vocabulary file in the decoder's format: #special/#eot headers plus
 * one `<id><TAB><JSON piece>` line per token. */
export function vocabFileContents(vocab: Vocab): string {
  const lines: string[] = [];
  lines.push("#special:" + [...vocab.specialIds].sort((a, b) => a - b).join(","));
  lines.push("#eot:" + vocab.eotId);
  const orderedIds = [...vocab.pieces.keys()].sort((a, b) => a - b);
  for (const id of orderedIds) {
    lines.push(`${id}\t${JSON.stringify(vocab.pieces.get(id))}`);
  }
  return lines.join("\n") + "\n";
}

/** Marker config in the extractor's JSON format: every tokenization of
 * each carrier word, plus the punctuation ids stripped from tails. */
export function markerConfig(vocab: Vocab): {
  start: number[][];
  end: number[][];
  begin: number[][];
  punctuation: number[];
} {
  const tk = (s: string) => tokenizeText(vocab, s);
  return {
    start: [tk("Start"), tk(" Start")],
    end: [tk("End"), tk(" End")],
    begin: [tk("Begin"), tk(" Begin")],
    punctuation: PUNCT_PIECES.map((p) => vocab.ids.get(p)!),
  };
}
