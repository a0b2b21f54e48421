/**
 * Scorer wire protocol served over stdin/stdout, one JSON object per line:
 *
 *   {"type":"begin","session":s,"audio":path}  -> {"type":"ready","session":s}
 *   {"type":"step","session":s,"hyps":[{"id":i,"tokens":[...]}],
 *    "need":[[...],...],"topk":k}              -> {"type":"scores","session":s,
 *                                                  "hyps":[{"id":i,"scores":{...}}]}
 *   {"type":"end","session":s}                 -> {"type":"ended","session":s}
 *
 * Malformed requests produce {"type":"error","message":...} without
 * dropping the current session. Scores are natural-log probabilities;
 * every token id listed in "need" is present in the reply.
 */

import * as readline from "node:readline";

import { SimModel, Session } from "./model";
import { Vocab } from "./vocab";

interface StepRequest {
  type: "step";
  session: string;
  hyps: Array<{ id: number; tokens: number[] }>;
  need: number[][];
  topk: number;
}

export function scoresForHyp(
  vocab: Vocab,
  session: Session,
  tokens: number[],
  need: number[],
  topk: number,
): Record<string, number> {
  const full = session.step(tokens);
  const ranked = [...full.entries()].sort((a, b) => b[1] - a[1] || a[0] - b[0]);
  const chosen = new Map<number, number>();
  for (const [tok, lp] of ranked.slice(0, Math.max(0, topk))) chosen.set(tok, lp);
  for (const tok of need) {
    const lp = full.get(tok);
    if (lp === undefined) throw new Error(`need token ${tok} is not in the vocabulary`);
    chosen.set(tok, lp);
  }
  const out: Record<string, number> = {};
  for (const [tok, lp] of chosen) out[String(tok)] = lp;
  return out;
}

export function serve(vocab: Vocab, input = process.stdin, output = process.stdout): void {
  const model = new SimModel(vocab);
  const sessions = new Map<string, Session>();
  const reply = (obj: unknown) => output.write(JSON.stringify(obj) + "\n");
  const rl = readline.createInterface({ input, terminal: false });

  rl.on("line", (line) => {
    if (!line.trim()) return;
    let req: any;
    try {
      req = JSON.parse(line);
    } catch {
      reply({ type: "error", message: `request is not valid JSON: ${line.slice(0, 80)}` });
      return;
    }
    try {
      switch (req.type) {
        case "begin": {
          const session = String(req.session ?? req.audio ?? "");
          if (!session) throw new Error("begin needs a session or audio id");
          sessions.set(session, model.open(String(req.audio)));
          reply({ type: "ready", session });
          break;
        }
        case "step": {
          const { session: name, hyps, need, topk } = req as StepRequest;
          const session = sessions.get(name);
          if (!session) throw new Error(`no open session ${JSON.stringify(name)}`);
          if (!Array.isArray(hyps) || !Array.isArray(need) || need.length !== hyps.length) {
            throw new Error("step needs order-aligned hyps and need lists");
          }
          const entries = hyps.map((hyp, i) => ({
            id: hyp.id,
            scores: scoresForHyp(vocab, session, hyp.tokens, need[i], topk ?? 0),
          }));
          reply({ type: "scores", session: name, hyps: entries });
          break;
        }
        case "end": {
          const name = String(req.session ?? "");
          sessions.delete(name);
          reply({ type: "ended", session: name });
          break;
        }
        default:
          throw new Error(`unknown request type ${JSON.stringify(req.type)}`);
      }
    } catch (err) {
      reply({ type: "error", message: (err as Error).message });
    }
  });
}
