import { ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import * as readline from "node:readline";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

const CLI = path.join(__dirname, "..", "dist", "cli.js");

class Client {
  private proc: ChildProcessWithoutNullStreams;
  private lines: AsyncIterableIterator<string>;

  constructor() {
    this.proc = spawn("node", [CLI, "serve"], { stdio: ["pipe", "pipe", "inherit"] });
    const rl = readline.createInterface({ input: this.proc.stdout });
    this.lines = rl[Symbol.asyncIterator]();
  }

  async call(frame: unknown): Promise<any> {
    this.proc.stdin.write(JSON.stringify(frame) + "\n");
    const { value, done } = await this.lines.next();
    if (done) throw new Error("server closed its output");
    return JSON.parse(value);
  }

  close(): void {
    this.proc.stdin.end();
    this.proc.kill();
  }
}

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-server-"));
const clip = path.join(tmp, "clip.json");
let client: Client;

beforeAll(() => {
  fs.writeFileSync(clip, JSON.stringify({ text: "the kaelith ran", voice: "eval", seed: 1 }));
  client = new Client();
});

afterAll(() => {
  client.close();
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("scorer protocol server", () => {
  it("answers begin with ready", async () => {
    const reply = await client.call({ type: "begin", session: "s1", audio: clip });
    expect(reply).toEqual({ type: "ready", session: "s1" });
  });

  it("serves order-aligned scores including every need token", async () => {
    const reply = await client.call({
      type: "step",
      session: "s1",
      hyps: [
        { id: 0, tokens: [] },
        { id: 1, tokens: [1] },
      ],
      need: [[0, 5], [0]],
      topk: 3,
    });
    expect(reply.type).toBe("scores");
    expect(reply.session).toBe("s1");
    expect(reply.hyps.map((h: any) => h.id)).toEqual([0, 1]);
    expect(reply.hyps[0].scores).toHaveProperty("0");
    expect(reply.hyps[0].scores).toHaveProperty("5");
    for (const entry of reply.hyps) {
      for (const lp of Object.values(entry.scores)) {
        expect(lp as number).toBeLessThanOrEqual(0);
      }
    }
  });

  it("reports errors without dropping the session", async () => {
    const bad = await client.call({ type: "step", session: "nope", hyps: [], need: [], topk: 1 });
    expect(bad.type).toBe("error");
    expect(bad.message).toMatch(/no open session/);
    const ok = await client.call({
      type: "step",
      session: "s1",
      hyps: [{ id: 0, tokens: [] }],
      need: [[0]],
      topk: 1,
    });
    expect(ok.type).toBe("scores");
  });

  it("rejects malformed JSON with an error frame", async () => {
    const reply = await client.call("not an object");
    expect(reply.type).toBe("error");
  });

  it("reports missing audio files as error frames", async () => {
    const reply = await client.call({
      type: "begin",
      session: "s2",
      audio: path.join(tmp, "missing.json"),
    });
    expect(reply.type).toBe("error");
  });

  it("closes sessions on end", async () => {
    const reply = await client.call({ type: "end", session: "s1" });
    expect(reply).toEqual({ type: "ended", session: "s1" });
    const after = await client.call({
      type: "step",
      session: "s1",
      hyps: [{ id: 0, tokens: [] }],
      need: [[]],
      topk: 1,
    });
    expect(after.type).toBe("error");
  });
});
