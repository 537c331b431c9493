// Console entry point: one blind-randomized session per page load, manual
// finish, reveal + scoring, and session restore across refreshes.

import { EvalApi } from "./api.js";
import { ChatSessionController } from "./session.js";
import { readScoreForm, renderSession } from "./ui.js";
import { campaignProgress } from "./campaign.js";

const api = new EvalApi("");
const root = document.getElementById("app") as HTMLElement;
const progress = document.getElementById("campaign") as HTMLElement;

async function boot(): Promise<void> {
  const saved = sessionStorage.getItem("dialplan-session");
  const controller = saved
    ? await ChatSessionController.restore(api, saved)
    : await ChatSessionController.create(api, "random");
  sessionStorage.setItem("dialplan-session", controller.sessionId);

  controller.subscribe((snap) => {
    renderSession(root, snap);
    wire(controller);
  });
  await refreshCampaign();
}

function wire(controller: ChatSessionController): void {
  const send = document.getElementById("send");
  const input = document.getElementById("utterance") as HTMLInputElement | null;
  send?.addEventListener("click", async () => {
    if (input && input.value.trim()) {
      const text = input.value.trim();
      input.value = "";
      await controller.send(text);
    }
  });
  document.getElementById("retry")?.addEventListener("click", () => controller.retry());
  document.getElementById("finish")?.addEventListener("click", () => controller.reveal());
  document.getElementById("submit-scores")?.addEventListener("click", async () => {
    const scores = readScoreForm(root);
    if (scores) {
      await controller.submitScores(scores);
      sessionStorage.removeItem("dialplan-session");
      await refreshCampaign();
    }
  });
}

async function refreshCampaign(): Promise<void> {
  try {
    const p = await campaignProgress(api);
    progress.textContent = `campaign: ${p.scored}/${p.goal} dialogues scored`;
  } catch {
    progress.textContent = "";
  }
}

boot();
