/** Keyboard-first interaction: digits pick the first nine candidates,
 * arrows plus enter reach deeper ranks, escape (or s) stops the session.
 */

export type KeyAction =
  | { type: "select-rank"; rank: number }
  | { type: "move"; delta: number }
  | { type: "confirm" }
  | { type: "stop" }
  | null;

export function actionForKey(key: string): KeyAction {
  if (key >= "1" && key <= "9") {
    return { type: "select-rank", rank: Number(key) - 1 };
  }
  switch (key) {
    case "ArrowDown":
    case "j":
      return { type: "move", delta: 1 };
    case "ArrowUp":
    case "k":
      return { type: "move", delta: -1 };
    case "Enter":
      return { type: "confirm" };
    case "Escape":
    case "s":
      return { type: "stop" };
    default:
      return null;
  }
}

export function clampRank(rank: number, count: number): number {
  if (count <= 0) return 0;
  return Math.min(Math.max(rank, 0), count - 1);
}
