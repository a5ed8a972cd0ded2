/** Message types of the decode-session protocol (HTTP mapping).
 *
 * Field names mirror the wire format exactly; the client treats the server
 * as the single source of truth for candidate order and scores.
 */

export type CandidateView = {
  word: string;
  score: number;
  rank: number;
};

export type SelectionRecord = {
  position: number;
  word: string;
  rank: number;
  auto: boolean;
  gap: number | null;
};

export type StatsPayload = {
  transcript: string[];
  selections: SelectionRecord[];
};

export type ServerEvent =
  | { kind: "candidates"; session_id: string; payload: { position: number; candidates: CandidateView[] } }
  | { kind: "auto_accepted"; session_id: string; payload: { position: number; word: string; score: number } }
  | { kind: "result"; session_id: string; payload: { transcript: string[] } }
  | { kind: "stats"; session_id: string; payload: StatsPayload }
  | { kind: "error"; session_id: string; payload: { code: string; message: string; fatal?: boolean } };

export type InlineFrames = {
  phonemes: string[];
  probs: number[][];
};

export type DecodeConfigView = {
  beam_width: number;
  fst_branch_cap: number;
  candidate_cap: number;
  phoneme_floor: number;
  auto_accept_threshold: number | null;
};

export type HelloPayload = {
  frames?: InlineFrames;
  frames_path?: string;
  config?: Partial<DecodeConfigView>;
};

export type EventBatch = {
  session_id: string;
  events: ServerEvent[];
};

export function isFatalError(event: ServerEvent): boolean {
  return event.kind === "error" && Boolean(event.payload.fatal);
}
