/** In-memory stand-in for the session service, following the documented
 * contract: one candidates message per position answered by exactly one
 * valid select; unknown words produce a non-fatal error with the same list
 * still in force; a finite auto-accept threshold skips points whose score
 * gap reaches it (single-candidate lists always skip); the session ends
 * with result followed by stats.
 */

import type {
  CandidateView,
  EventBatch,
  SelectionRecord,
  ServerEvent,
} from "../src/protocol.js";
import type { Transport } from "../src/transport.js";

export class MockServer implements Transport {
  position = 0;
  transcript: string[] = [];
  selections: SelectionRecord[] = [];
  /** select requests actually received, per position (liveness probe) */
  selectCounts: number[];
  stopped = false;

  constructor(
    private readonly lists: CandidateView[][],
    private readonly threshold: number | null = null,
  ) {
    this.selectCounts = lists.map(() => 0);
  }

  private currentGap(list: CandidateView[]): number | null {
    return list.length > 1 ? list[1].score - list[0].score : null;
  }

  private advance(): ServerEvent[] {
    const events: ServerEvent[] = [];
    while (this.position < this.lists.length && !this.stopped) {
      const list = this.lists[this.position];
      const gap = this.currentGap(list);
      const autoFires =
        this.threshold !== null &&
        Number.isFinite(this.threshold) &&
        (gap === null || gap >= this.threshold);
      if (autoFires) {
        const word = list[0].word;
        this.selections.push({
          position: this.position,
          word,
          rank: 0,
          auto: true,
          gap,
        });
        this.transcript.push(word);
        events.push({
          kind: "auto_accepted",
          session_id: "mock",
          payload: { position: this.position, word, score: list[0].score },
        });
        this.position += 1;
        continue;
      }
      events.push({
        kind: "candidates",
        session_id: "mock",
        payload: { position: this.position, candidates: list },
      });
      return events;
    }
    events.push({
      kind: "result",
      session_id: "mock",
      payload: { transcript: [...this.transcript] },
    });
    events.push({
      kind: "stats",
      session_id: "mock",
      payload: { transcript: [...this.transcript], selections: [...this.selections] },
    });
    return events;
  }

  async start(): Promise<EventBatch> {
    return { session_id: "mock", events: this.advance() };
  }

  async select(_sid: string, word: string): Promise<EventBatch> {
    const list = this.lists[this.position];
    this.selectCounts[this.position] += 1;
    const candidate = list.find((c) => c.word === word);
    if (!candidate) {
      return {
        session_id: "mock",
        events: [
          {
            kind: "error",
            session_id: "mock",
            payload: { code: "unknown_word", message: `no candidate ${word}`, fatal: false },
          },
        ],
      };
    }
    this.selections.push({
      position: this.position,
      word,
      rank: candidate.rank,
      auto: false,
      gap: this.currentGap(list),
    });
    this.transcript.push(word);
    this.position += 1;
    return { session_id: "mock", events: this.advance() };
  }

  async stop(): Promise<EventBatch> {
    this.stopped = true;
    return { session_id: "mock", events: this.advance() };
  }
}

export function list(...words: [string, number][]): CandidateView[] {
  return words.map(([word, score], rank) => ({ word, score, rank }));
}
