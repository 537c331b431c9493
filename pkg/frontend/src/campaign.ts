// Campaign progress over the 50-target evaluation plus the turn-level
// side-by-side scoring mode.

import { EvalApi, TurnLevelItem } from "./api.js";

export const CAMPAIGN_GOAL = 50;

export interface CampaignProgress {
  scored: number;
  goal: number;
  done: boolean;
}

export async function campaignProgress(
  api: EvalApi,
  goal: number = CAMPAIGN_GOAL,
): Promise<CampaignProgress> {
  const listing = await api.listSessions();
  return { scored: listing.scored, goal, done: listing.scored >= goal };
}

export interface TurnLevelScore {
  appropriateness: number;
  informativeness: number;
}

export class TurnLevelController {
  private items: TurnLevelItem[] = [];
  private index = 0;

  constructor(private api: EvalApi) {}

  async load(n: number, split: string): Promise<number> {
    const resp = await this.api.turnLevelSample(n, split);
    this.items = resp.items;
    this.index = 0;
    return this.items.length;
  }

  current(): TurnLevelItem | null {
    return this.items[this.index] ?? null;
  }

  /** Scores keyed by the masked output keys (m1, m2, ...). */
  async score(scores: Record<string, TurnLevelScore>): Promise<boolean> {
    const item = this.current();
    if (!item) {
      return false;
    }
    for (const key of item.outputs.map((o) => o.key)) {
      const s = scores[key];
      if (!s) {
        throw new Error(`missing scores for output ${key}`);
      }
      for (const value of [s.appropriateness, s.informativeness]) {
        if (![0, 1, 2].includes(value)) {
          throw new Error("turn-level scores must be 0, 1 or 2");
        }
      }
    }
    await this.api.submitTurnLevelScores(item.item_id, scores);
    this.index += 1;
    return this.index < this.items.length;
  }

  remaining(): number {
    return Math.max(0, this.items.length - this.index);
  }
}
