import { describe, expect, it } from "vitest";

import type {
  CreateSessionResponse,
  FinishResponse,
  MessageResponse,
  Scores,
  SessionExport,
} from "../src/api.js";
import { ChatSessionController, validateScores } from "../src/session.js";

// In-memory fake of the evaluation service, mirroring its state machine.
class FakeApi {
  history: { speaker: "user" | "system"; text: string }[] = [];
  turnCount = 0;
  finished = false;
  scores: Scores | null = null;
  failNextSend: "before" | "after" | null = null;
  maxTurns = 15;

  async createSession(): Promise<CreateSessionResponse> {
    return { session_id: "s1", profile: { likes: "media" } };
  }

  async sendMessage(_sid: string, utterance: string): Promise<MessageResponse> {
    if (this.failNextSend === "before") {
      this.failNextSend = null;
      throw new Error("network down");
    }
    if (this.finished) {
      throw new Error("409");
    }
    this.history.push({ speaker: "user", text: utterance });
    this.history.push({ speaker: "system", text: `reply to ${utterance}` });
    this.turnCount += 1;
    if (this.turnCount >= this.maxTurns) {
      this.finished = true;
    }
    if (this.failNextSend === "after") {
      this.failNextSend = null;
      throw new Error("response lost");
    }
    return {
      reply: `reply to ${utterance}`,
      turn_count: this.turnCount,
      finished: this.finished,
    };
  }

  async finish(): Promise<FinishResponse> {
    this.finished = true;
    return {
      revealed_target: { action: "recommend media", topic: "amber atlas" },
      variant: "prompt",
      turn_count: this.turnCount,
    };
  }

  async submitScores(_sid: string, scores: Scores): Promise<{ status: string }> {
    if (!this.finished) {
      throw new Error("409");
    }
    if (this.scores) {
      throw new Error("409 already scored");
    }
    this.scores = scores;
    return { status: "recorded" };
  }

  async export(): Promise<SessionExport> {
    const out: SessionExport = {
      session_id: "s1",
      history: [...this.history],
      turn_count: this.turnCount,
      state: this.scores ? "scored" : this.finished ? "revealed" : "chatting",
    };
    if (this.finished) {
      out.target = { action: "recommend media", topic: "amber atlas" };
      out.variant = "prompt";
      if (this.scores) {
        out.scores = this.scores;
      }
    }
    return out;
  }
}

async function makeController(maxTurns = 15) {
  const api = new FakeApi();
  api.maxTurns = maxTurns;
  const controller = await ChatSessionController.create(api as never, "random", maxTurns);
  return { api, controller };
}

describe("chat flow", () => {
  it("three turns render six bubbles in order", async () => {
    const { controller } = await makeController();
    await controller.send("one");
    await controller.send("two");
    await controller.send("three");
    const snap = controller.snapshot();
    expect(snap.bubbles.map((b) => b.speaker)).toEqual([
      "user", "system", "user", "system", "user", "system",
    ]);
    expect(snap.bubbles[1].text).toBe("reply to one");
    expect(snap.turnCount).toBe(3);
  });

  it("exactly one reply per user message", async () => {
    const { api, controller } = await makeController();
    await controller.send("hello");
    expect(api.history.filter((m) => m.speaker === "system")).toHaveLength(1);
  });

  it("target is invisible while chatting", async () => {
    const { controller } = await makeController();
    await controller.send("hello");
    const snap = controller.snapshot();
    expect(snap.target).toBeNull();
    expect(snap.variant).toBeNull();
    expect(JSON.stringify(snap)).not.toContain("amber atlas");
  });

  it("reaching the turn cap disables input and reveals", async () => {
    const { controller } = await makeController(3);
    await controller.send("a");
    await controller.send("b");
    expect(controller.snapshot().inputEnabled).toBe(true);
    await controller.send("c");
    const snap = controller.snapshot();
    expect(snap.state).toBe("revealed");
    expect(snap.inputEnabled).toBe(false);
    expect(snap.target?.topic).toBe("amber atlas");
  });

  it("sends after the cap are ignored", async () => {
    const { api, controller } = await makeController(2);
    await controller.send("a");
    await controller.send("b");
    await controller.send("c");
    expect(api.turnCount).toBe(2);
  });
});

describe("retry behavior", () => {
  it("network failure before processing shows banner without duplicates", async () => {
    const { api, controller } = await makeController();
    api.failNextSend = "before";
    await controller.send("hello");
    let snap = controller.snapshot();
    expect(snap.retryBanner).toBe(true);
    expect(api.history).toHaveLength(0);
    await controller.retry();
    snap = controller.snapshot();
    expect(snap.retryBanner).toBe(false);
    expect(api.history.filter((m) => m.speaker === "user")).toHaveLength(1);
  });

  it("lost response reconciles from export without a duplicate send", async () => {
    const { api, controller } = await makeController();
    api.failNextSend = "after";
    await controller.send("hello");
    const snap = controller.snapshot();
    expect(snap.retryBanner).toBe(false);
    expect(snap.bubbles).toHaveLength(2);
    expect(api.history.filter((m) => m.text === "hello")).toHaveLength(1);
  });
});

describe("reveal and scoring", () => {
  it("submitting scores persists and re-export matches", async () => {
    const { api, controller } = await makeController();
    await controller.send("hi");
    await controller.reveal();
    const receipt = await controller.submitScores({
      proactivity: 2, coherence: 1, goal_success: 2,
    });
    expect(receipt).toContain("s1");
    expect(api.scores).toEqual({ proactivity: 2, coherence: 1, goal_success: 2 });
    const exported = await api.export();
    expect(exported.state).toBe("scored");
    expect(exported.scores).toEqual({ proactivity: 2, coherence: 1, goal_success: 2 });
  });

  it("scores outside 0..2 are rejected client-side", () => {
    expect(() =>
      validateScores({ proactivity: 3, coherence: 0, goal_success: 0 }),
    ).toThrow();
    expect(() =>
      validateScores({ proactivity: 2, coherence: 2, goal_success: 2 }),
    ).not.toThrow();
  });

  it("scoring before reveal is refused", async () => {
    const { controller } = await makeController();
    await controller.send("hi");
    await expect(
      controller.submitScores({ proactivity: 1, coherence: 1, goal_success: 1 }),
    ).rejects.toThrow();
  });

  it("restore rebuilds history from the export endpoint", async () => {
    const { api, controller } = await makeController();
    await controller.send("hello there");
    const restored = await ChatSessionController.restore(api as never, "s1");
    const snap = restored.snapshot();
    expect(snap.bubbles.map((b) => b.text)).toEqual([
      "hello there", "reply to hello there",
    ]);
    expect(snap.turnCount).toBe(1);
    expect(snap.state).toBe("chatting");
  });
});
