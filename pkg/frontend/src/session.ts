// Chat session state machine. The target stays invisible until the reveal;
// sends are single-flight and reconciled against the export endpoint so a
// retried message never produces a duplicate reply.

import {
  EvalApi,
  ExportMessage,
  RevealedTarget,
  Scores,
  SessionExport,
} from "./api.js";

export const MAX_TURNS = 15;

export type SessionState = "chatting" | "revealed" | "scored";

export interface Bubble {
  speaker: "user" | "system";
  text: string;
  pending?: boolean;
}

export interface SessionSnapshot {
  sessionId: string;
  state: SessionState;
  bubbles: Bubble[];
  turnCount: number;
  maxTurns: number;
  target: RevealedTarget | null;
  variant: string | null;
  retryBanner: boolean;
  inputEnabled: boolean;
  profile: Record<string, string>;
}

export class ChatSessionController {
  private bubbles: Bubble[] = [];
  private turnCount = 0;
  private state: SessionState = "chatting";
  private target: RevealedTarget | null = null;
  private variant: string | null = null;
  private retryBanner = false;
  private inFlight = false;
  private pendingUtterance: string | null = null;
  private listeners: Array<(snap: SessionSnapshot) => void> = [];

  constructor(
    private api: EvalApi,
    public readonly sessionId: string,
    private profile: Record<string, string> = {},
    private maxTurns: number = MAX_TURNS,
  ) {}

  static async create(
    api: EvalApi,
    variant: string = "random",
    maxTurns: number = MAX_TURNS,
  ): Promise<ChatSessionController> {
    const created = await api.createSession(variant);
    return new ChatSessionController(api, created.session_id, created.profile, maxTurns);
  }

  static async restore(
    api: EvalApi,
    sessionId: string,
    maxTurns: number = MAX_TURNS,
  ): Promise<ChatSessionController> {
    const controller = new ChatSessionController(api, sessionId, {}, maxTurns);
    const exported = await api.export(sessionId);
    controller.applyExport(exported);
    return controller;
  }

  subscribe(listener: (snap: SessionSnapshot) => void): void {
    this.listeners.push(listener);
    listener(this.snapshot());
  }

  snapshot(): SessionSnapshot {
    return {
      sessionId: this.sessionId,
      state: this.state,
      bubbles: [...this.bubbles],
      turnCount: this.turnCount,
      maxTurns: this.maxTurns,
      target: this.state === "chatting" ? null : this.target,
      variant: this.state === "chatting" ? null : this.variant,
      retryBanner: this.retryBanner,
      inputEnabled:
        this.state === "chatting" && !this.inFlight && this.turnCount < this.maxTurns,
      profile: { ...this.profile },
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) {
      listener(snap);
    }
  }

  private applyExport(exported: SessionExport): void {
    this.bubbles = exported.history.map((m: ExportMessage) => ({
      speaker: m.speaker,
      text: m.text,
    }));
    this.turnCount = exported.turn_count;
    this.state = exported.state;
    this.target = exported.target ?? null;
    this.variant = exported.variant ?? null;
    this.emit();
  }

  /** Send one user utterance; exactly one model reply per send. */
  async send(utterance: string): Promise<void> {
    if (this.state !== "chatting" || this.inFlight) {
      return;
    }
    if (this.turnCount >= this.maxTurns) {
      return;
    }
    this.inFlight = true;
    this.retryBanner = false;
    this.pendingUtterance = utterance;
    this.bubbles.push({ speaker: "user", text: utterance, pending: true });
    this.emit();
    try {
      const resp = await this.api.sendMessage(this.sessionId, utterance);
      this.bubbles[this.bubbles.length - 1].pending = false;
      this.bubbles.push({ speaker: "system", text: resp.reply });
      this.turnCount = resp.turn_count;
      this.pendingUtterance = null;
      if (resp.finished || resp.turn_count >= this.maxTurns) {
        await this.reveal();
        return;
      }
    } catch {
      // network failure: reconcile with the server before allowing a retry
      const recovered = await this.reconcile();
      if (!recovered) {
        this.bubbles.pop(); // drop the optimistic bubble; user may retry
        this.retryBanner = true;
      }
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  /** True when the server had already processed the lost message. */
  private async reconcile(): Promise<boolean> {
    try {
      const exported = await this.api.export(this.sessionId);
      const processed =
        this.pendingUtterance !== null &&
        exported.history.some(
          (m) => m.speaker === "user" && m.text === this.pendingUtterance,
        );
      if (processed) {
        this.pendingUtterance = null;
        this.applyExport(exported);
        return true;
      }
    } catch {
      // server unreachable; caller shows the retry banner
    }
    return false;
  }

  async retry(): Promise<void> {
    const utterance = this.pendingUtterance;
    this.pendingUtterance = null;
    this.retryBanner = false;
    if (utterance !== null) {
      await this.send(utterance);
    }
  }

  /** Finish the dialogue and expose the hidden target for scoring. */
  async reveal(): Promise<RevealedTarget> {
    const resp = await this.api.finish(this.sessionId);
    this.state = "revealed";
    this.target = resp.revealed_target;
    this.variant = resp.variant;
    this.emit();
    return resp.revealed_target;
  }

  async submitScores(scores: Scores): Promise<string> {
    if (this.state !== "revealed") {
      throw new Error("scores can only be submitted after the reveal");
    }
    validateScores(scores);
    const resp = await this.api.submitScores(this.sessionId, scores);
    this.state = "scored";
    this.emit();
    return `${this.sessionId}-${resp.status}`;
  }
}

export function validateScores(scores: Scores): void {
  for (const [name, value] of Object.entries(scores)) {
    if (![0, 1, 2].includes(value)) {
      throw new Error(`${name} must be 0, 1 or 2, got ${value}`);
    }
  }
}
