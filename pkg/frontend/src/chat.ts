// Chat view model: transcript state plus the send/rate flows. Keeps no
// server-side state; a page reload starts a fresh session on purpose.

import { TabotClient } from "./api.js";
import type { ChatAnswer } from "./types.js";

export type TranscriptEntry =
  | { speaker: "user"; text: string; failed?: boolean }
  | { speaker: "bot"; answer: ChatAnswer };

export class ChatViewModel {
  transcript: TranscriptEntry[] = [];
  sessionId: string;
  busy = false;

  constructor(
    private client: TabotClient,
    private datasetId: string,
    sessionId?: string,
  ) {
    this.sessionId = sessionId ?? `web-${Math.random().toString(36).slice(2, 10)}`;
  }

  async send(text: string): Promise<ChatAnswer | null> {
    const trimmed = text.trim();
    if (!trimmed || this.busy) return null;
    this.busy = true;
    const entry: TranscriptEntry = { speaker: "user", text: trimmed };
    this.transcript.push(entry);
    try {
      const answer = await this.client.chat(this.datasetId, this.sessionId, trimmed);
      this.transcript.push({ speaker: "bot", answer });
      return answer;
    } catch (error) {
      // network failure: keep the message in the transcript, flag it for retry
      entry.failed = true;
      return null;
    } finally {
      this.busy = false;
    }
  }

  async retryLastFailed(): Promise<ChatAnswer | null> {
    for (let i = this.transcript.length - 1; i >= 0; i--) {
      const entry = this.transcript[i];
      if (entry.speaker === "user" && entry.failed) {
        this.transcript.splice(i, 1);
        return this.send(entry.text);
      }
    }
    return null;
  }

  async rate(turnIndex: number, rating: "up" | "down"): Promise<boolean> {
    try {
      await this.client.rate(this.datasetId, this.sessionId, turnIndex, rating);
      return true;
    } catch {
      return false; // rating is optimistic; a failure only skips the ack
    }
  }
}
