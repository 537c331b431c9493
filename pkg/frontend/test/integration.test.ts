// End-to-end test against a live harness `serve` instance: trains a tiny
// pipeline through the CLI, starts the service, and drives the full
// annotator flow over HTTP.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { EvalApi } from "../src/api.js";
import { ChatSessionController } from "../src/session.js";

const PORT = 8571;
const BASE = `http://127.0.0.1:${PORT}`;

const TINY_INI = (workdir: string) => `
[experiment]
workdir = ${workdir}
seed = 3

[corpus]
n_dialogues = 30
n_topics = 12
n_actions = 8
seed = 3

[planner]
hidden_size = 32
encoder_layers = 1
encoder_heads = 2
decoder_layers = 1
decoder_heads = 2
ffn_size = 64
max_context_len = 256
max_target_len = 16
max_path_len = 96
dropout = 0.0

[planner_train]
lr = 1e-3
warmup_steps = 2
train_steps = 8
batch_size = 4
seed = 3

[decode]
beam_size = 2
max_length = 40

[responder]
hidden_size = 32
lm_layers = 1
lm_heads = 2
plan_layers = 1
plan_heads = 2
ffn_size = 64
max_context_len = 320
max_gen_len = 10
dropout = 0.0

[responder_train]
lr = 1e-3
warmup_steps = 2
train_steps = 8
batch_size = 4
seed = 3

[service]
port = ${PORT}
`;

let server: ChildProcess | null = null;

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 500));
  }
  throw new Error("harness service did not come up");
}

beforeAll(async () => {
  const workdir = mkdtempSync(join(tmpdir(), "dialplan-console-"));
  const ini = join(workdir, "exp.ini");
  writeFileSync(ini, TINY_INI(join(workdir, "run")));
  for (const cmd of ["synth", "prepare-data", "train-planner", "train-responder"]) {
    const result = spawnSync(
      "python3", ["-m", "dialplan.harness.cli", cmd, "--config", ini],
      { stdio: "inherit", timeout: 300_000 },
    );
    expect(result.status).toBe(0);
  }
  server = spawn(
    "python3", ["-m", "dialplan.harness.cli", "serve", "--config", ini],
    { stdio: "ignore" },
  );
  await waitForHealth(60_000);
}, 420_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("eval console against a live harness", () => {
  it("create -> 3 turns -> finish -> scores -> export round trip", async () => {
    const api = new EvalApi(BASE);
    const controller = await ChatSessionController.create(api, "prompt");
    const payloads: string[] = [];

    for (const text of ["hello there", "tell me more", "sounds interesting"]) {
      await controller.send(text);
      payloads.push(JSON.stringify(controller.snapshot()));
    }
    expect(controller.snapshot().bubbles).toHaveLength(6);
    expect(controller.snapshot().turnCount).toBe(3);

    const preRevealExport = await api.export(controller.sessionId);
    payloads.push(JSON.stringify(preRevealExport));
    expect(preRevealExport.state).toBe("chatting");
    expect(preRevealExport.target).toBeUndefined();
    expect(preRevealExport.variant).toBeUndefined();

    const target = await controller.reveal();
    expect(target.topic.length).toBeGreaterThan(0);

    // the hidden target never appeared in any pre-reveal payload
    for (const payload of payloads) {
      expect(payload).not.toContain(target.topic);
    }

    await controller.submitScores({ proactivity: 2, coherence: 1, goal_success: 0 });
    const exported = await api.export(controller.sessionId);
    expect(exported.state).toBe("scored");
    expect(exported.scores).toEqual({
      proactivity: 2,
      coherence: 1,
      goal_success: 0,
    });
    expect(exported.target).toEqual(target);
    expect(exported.history.filter((m) => m.speaker === "user")).toHaveLength(3);
  }, 120_000);

  it("15-turn cap auto-finishes the session", async () => {
    const api = new EvalApi(BASE);
    const controller = await ChatSessionController.create(api, "prompt");
    for (let i = 0; i < 15; i++) {
      expect(controller.snapshot().state).toBe("chatting");
      await controller.send(`turn ${i}`);
    }
    const snap = controller.snapshot();
    expect(snap.turnCount).toBe(15);
    expect(snap.state).toBe("revealed");
    expect(snap.inputEnabled).toBe(false);
    // a further message is refused server-side
    await expect(api.sendMessage(controller.sessionId, "extra")).rejects.toThrow();
  }, 180_000);

  it("server rejects out-of-scale scores", async () => {
    const api = new EvalApi(BASE);
    const created = await api.createSession("prompt");
    await api.finish(created.session_id);
    await expect(
      api.submitScores(created.session_id, {
        proactivity: 7,
        coherence: 0,
        goal_success: 0,
      }),
    ).rejects.toThrow();
  }, 60_000);

  it("double submit surfaces the conflict", async () => {
    const api = new EvalApi(BASE);
    const created = await api.createSession("prompt");
    await api.finish(created.session_id);
    const scores = { proactivity: 1, coherence: 1, goal_success: 1 };
    await api.submitScores(created.session_id, scores);
    await expect(api.submitScores(created.session_id, scores)).rejects.toThrow();
  }, 60_000);
});
