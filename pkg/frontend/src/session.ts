/** Client-side session state machine.
 *
 * Consumes server event batches and exposes a render-ready view.  Exactly
 * one protocol message is sent per user action: a selection is only
 * dispatched while the session awaits one and no other request is in
 * flight, so rapid repeated clicks cannot produce a second `select` for the
 * same candidate list.  Candidates are displayed in protocol order; the
 * client never reorders or fabricates entries.
 */

import type {
  CandidateView,
  HelloPayload,
  ServerEvent,
  StatsPayload,
} from "./protocol.js";
import { isFatalError } from "./protocol.js";
import type { Transport } from "./transport.js";

export type SessionStatus =
  | "idle"
  | "decoding"
  | "awaiting_selection"
  | "done"
  | "error";

export type PositionRecord = {
  position: number;
  /** Candidate list shown for this position; empty when auto-accepted. */
  shown: CandidateView[];
  word: string;
  rank: number;
  auto: boolean;
};

export type SessionView = {
  sessionId: string | null;
  status: SessionStatus;
  transcript: string[];
  /** Current candidate list; non-null only in awaiting_selection. */
  candidates: CandidateView[] | null;
  position: number;
  history: PositionRecord[];
  stats: StatsPayload | null;
  /** Most recent non-fatal protocol error, cleared on the next action. */
  notice: string | null;
  error: string | null;
};

type Listener = (view: SessionView) => void;

export class SessionCore {
  private sessionId: string | null = null;
  private status: SessionStatus = "idle";
  private transcript: string[] = [];
  private candidates: CandidateView[] | null = null;
  private position = 0;
  private history: PositionRecord[] = [];
  private stats: StatsPayload | null = null;
  private notice: string | null = null;
  private error: string | null = null;
  private inflight = false;
  private listeners: Listener[] = [];

  constructor(private readonly transport: Transport) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  view(): SessionView {
    return {
      sessionId: this.sessionId,
      status: this.status,
      transcript: [...this.transcript],
      candidates: this.candidates ? [...this.candidates] : null,
      position: this.position,
      history: [...this.history],
      stats: this.stats,
      notice: this.notice,
      error: this.error,
    };
  }

  private emit(): void {
    const snapshot = this.view();
    for (const listener of this.listeners) {
      listener(snapshot);
    }
  }

  async start(hello: HelloPayload): Promise<SessionView> {
    if (this.status !== "idle") {
      throw new Error("session already started");
    }
    this.status = "decoding";
    this.inflight = true;
    this.emit();
    try {
      const batch = await this.transport.start(hello);
      this.sessionId = batch.session_id;
      this.applyEvents(batch.events);
    } catch (err) {
      this.status = "error";
      this.error = String(err);
    } finally {
      this.inflight = false;
    }
    this.emit();
    return this.view();
  }

  /** True when a selection would be dispatched right now. */
  canSelect(): boolean {
    return (
      this.status === "awaiting_selection" &&
      !this.inflight &&
      this.candidates !== null
    );
  }

  async selectRank(rank: number): Promise<boolean> {
    if (!this.canSelect()) return false;
    const candidate = this.candidates!.find((c) => c.rank === rank);
    if (!candidate) return false;
    return this.selectWord(candidate.word);
  }

  async selectWord(word: string): Promise<boolean> {
    if (!this.canSelect()) return false;
    const shown = this.candidates!;
    const candidate = shown.find((c) => c.word === word);
    if (!candidate) return false; // the UI never invents candidates
    this.inflight = true;
    this.notice = null;
    this.emit();
    try {
      const batch = await this.transport.select(this.sessionId!, word);
      const first = batch.events[0];
      if (first && first.kind === "error" && !first.payload.fatal) {
        // selection rejected; the same candidate list stays in force
        this.notice = first.payload.message;
        return false;
      }
      this.history.push({
        position: this.position,
        shown,
        word: candidate.word,
        rank: candidate.rank,
        auto: false,
      });
      this.transcript.push(candidate.word);
      this.candidates = null;
      this.position += 1;
      this.status = "decoding";
      this.applyEvents(batch.events);
      return true;
    } catch (err) {
      this.status = "error";
      this.error = String(err);
      return false;
    } finally {
      this.inflight = false;
      this.emit();
    }
  }

  async stop(): Promise<void> {
    if (!this.canSelect()) return;
    this.inflight = true;
    this.emit();
    try {
      const batch = await this.transport.stop(this.sessionId!);
      this.candidates = null;
      this.status = "decoding";
      this.applyEvents(batch.events);
    } catch (err) {
      this.status = "error";
      this.error = String(err);
    } finally {
      this.inflight = false;
      this.emit();
    }
  }

  private applyEvents(events: ServerEvent[]): void {
    for (const event of events) {
      if (isFatalError(event)) {
        this.status = "error";
        this.error = `${(event.payload as { code: string }).code}: ${
          (event.payload as { message: string }).message
        }`;
        this.candidates = null;
        return;
      }
      switch (event.kind) {
        case "candidates": {
          this.candidates = event.payload.candidates;
          this.position = event.payload.position;
          this.status = "awaiting_selection";
          break;
        }
        case "auto_accepted": {
          this.history.push({
            position: event.payload.position,
            shown: [],
            word: event.payload.word,
            rank: 0,
            auto: true,
          });
          this.transcript.push(event.payload.word);
          this.position = event.payload.position + 1;
          this.status = "decoding";
          break;
        }
        case "result": {
          this.transcript = [...event.payload.transcript];
          break;
        }
        case "stats": {
          this.stats = event.payload;
          this.status = "done";
          this.candidates = null;
          break;
        }
        case "error": {
          this.notice = event.payload.message;
          break;
        }
      }
    }
  }
}
