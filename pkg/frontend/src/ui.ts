// DOM rendering for the chat console. All content flows from
// SessionSnapshot objects; nothing target-related is rendered while the
// session is in the chatting state.

import { SessionSnapshot } from "./session.js";

export function renderSession(root: HTMLElement, snap: SessionSnapshot): void {
  root.replaceChildren();

  const header = document.createElement("div");
  header.className = "header";
  header.textContent = `session ${snap.sessionId} — turn ${snap.turnCount}/${snap.maxTurns}`;
  root.appendChild(header);

  if (Object.keys(snap.profile).length > 0) {
    const profile = document.createElement("div");
    profile.className = "profile-card";
    profile.textContent =
      "user profile: " +
      Object.entries(snap.profile)
        .map(([k, v]) => `${k}=${v}`)
        .join(", ");
    root.appendChild(profile);
  }

  const log = document.createElement("div");
  log.className = "chat-log";
  for (const bubble of snap.bubbles) {
    const div = document.createElement("div");
    div.className = `bubble ${bubble.speaker}` + (bubble.pending ? " pending" : "");
    div.textContent = bubble.text;
    log.appendChild(div);
  }
  root.appendChild(log);

  if (snap.retryBanner) {
    const banner = document.createElement("div");
    banner.className = "retry-banner";
    banner.textContent = "message failed to send";
    const button = document.createElement("button");
    button.id = "retry";
    button.textContent = "retry";
    banner.appendChild(button);
    root.appendChild(banner);
  }

  const input = document.createElement("input");
  input.id = "utterance";
  input.disabled = !snap.inputEnabled;
  root.appendChild(input);
  const send = document.createElement("button");
  send.id = "send";
  send.textContent = "send";
  send.disabled = !snap.inputEnabled;
  root.appendChild(send);

  const finish = document.createElement("button");
  finish.id = "finish";
  finish.textContent = "finish dialogue";
  finish.disabled = snap.state !== "chatting";
  root.appendChild(finish);

  if (snap.state !== "chatting" && snap.target) {
    const reveal = document.createElement("div");
    reveal.className = "reveal";
    reveal.textContent = `target: ${snap.target.action} / ${snap.target.topic}`;
    root.appendChild(reveal);
    root.appendChild(renderScoreForm(snap.state === "scored"));
  }
}

export function renderScoreForm(alreadyScored: boolean): HTMLElement {
  const form = document.createElement("div");
  form.className = "score-form";
  for (const name of ["proactivity", "coherence", "goal_success"]) {
    const label = document.createElement("label");
    label.textContent = name;
    const select = document.createElement("select");
    select.id = `score-${name}`;
    for (const value of ["", "0", "1", "2"]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value || "choose";
      select.appendChild(option);
    }
    select.disabled = alreadyScored;
    label.appendChild(select);
    form.appendChild(label);
  }
  const submit = document.createElement("button");
  submit.id = "submit-scores";
  submit.textContent = alreadyScored ? "scores recorded" : "submit scores";
  submit.disabled = alreadyScored;
  form.appendChild(submit);
  return form;
}

export function readScoreForm(root: HTMLElement):
  | { proactivity: number; coherence: number; goal_success: number }
  | null {
  const values: Record<string, number> = {};
  for (const name of ["proactivity", "coherence", "goal_success"]) {
    const select = root.querySelector<HTMLSelectElement>(`#score-${name}`);
    if (!select || select.value === "") {
      return null; // inline validation: all three are required
    }
    values[name] = Number(select.value);
  }
  return values as { proactivity: number; coherence: number; goal_success: number };
}
