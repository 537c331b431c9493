// Typed client for the evaluation service. All state is server-authoritative;
// callers reconcile through export() after any failed send.

export interface CreateSessionResponse {
  session_id: string;
  profile: Record<string, string>;
}

export interface MessageResponse {
  reply: string;
  turn_count: number;
  finished: boolean;
}

export interface RevealedTarget {
  action: string;
  topic: string;
}

export interface FinishResponse {
  revealed_target: RevealedTarget;
  variant: string;
  turn_count: number;
}

export interface ExportMessage {
  speaker: "user" | "system";
  text: string;
}

export interface SessionExport {
  session_id: string;
  history: ExportMessage[];
  turn_count: number;
  state: "chatting" | "revealed" | "scored";
  target?: RevealedTarget;
  variant?: string;
  scores?: Scores;
}

export interface Scores {
  proactivity: number;
  coherence: number;
  goal_success: number;
}

export interface SessionsListing {
  sessions: { session_id: string; state: string; turn_count: number }[];
  scored: number;
}

export interface TurnLevelItem {
  item_id: string;
  history: ExportMessage[];
  profile: Record<string, string>;
  outputs: { key: string; text: string }[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(
  base: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    const body = await resp.text();
    throw new ApiError(resp.status, body || resp.statusText);
  }
  return (await resp.json()) as T;
}

export class EvalApi {
  constructor(private base: string) {}

  createSession(variant: string = "random"): Promise<CreateSessionResponse> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ variant }),
    });
  }

  sendMessage(sessionId: string, utterance: string): Promise<MessageResponse> {
    return request(this.base, `/sessions/${sessionId}/message`, {
      method: "POST",
      body: JSON.stringify({ utterance }),
    });
  }

  finish(sessionId: string): Promise<FinishResponse> {
    return request(this.base, `/sessions/${sessionId}/finish`, {
      method: "POST",
    });
  }

  submitScores(sessionId: string, scores: Scores): Promise<{ status: string }> {
    return request(this.base, `/sessions/${sessionId}/scores`, {
      method: "POST",
      body: JSON.stringify(scores),
    });
  }

  export(sessionId: string): Promise<SessionExport> {
    return request(this.base, `/sessions/${sessionId}/export`);
  }

  listSessions(): Promise<SessionsListing> {
    return request(this.base, "/sessions");
  }

  turnLevelSample(n: number, split: string): Promise<{ items: TurnLevelItem[] }> {
    return request(this.base, `/turnlevel/sample?n=${n}&split=${split}`);
  }

  submitTurnLevelScores(
    itemId: string,
    scores: Record<string, { appropriateness: number; informativeness: number }>,
  ): Promise<{ status: string }> {
    return request(this.base, "/turnlevel/scores", {
      method: "POST",
      body: JSON.stringify({ item_id: itemId, scores }),
    });
  }
}
