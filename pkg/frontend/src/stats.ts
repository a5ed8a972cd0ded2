/** Post-session report: selected-rank histogram and score-gap analysis. */

import type { SelectionRecord } from "./protocol.js";

export type HistogramBucket = { rank: number; count: number };

export function rankHistogram(selections: SelectionRecord[]): HistogramBucket[] {
  const counts = new Map<number, number>();
  for (const s of selections) {
    counts.set(s.rank, (counts.get(s.rank) ?? 0) + 1);
  }
  return [...counts.entries()]
    .map(([rank, count]) => ({ rank, count }))
    .sort((a, b) => a.rank - b.rank);
}

export type GapRow = {
  position: number;
  word: string;
  gap: number | null; // null when there was no runner-up
  auto: boolean;
  /** Whether the configured threshold would have skipped this point. */
  wouldAutoAccept: boolean;
};

export function gapAnalysis(
  selections: SelectionRecord[],
  threshold: number | null,
): GapRow[] {
  return selections.map((s) => ({
    position: s.position,
    word: s.word,
    gap: s.gap,
    auto: s.auto,
    wouldAutoAccept:
      threshold !== null && (s.gap === null || s.gap >= threshold),
  }));
}

export function totalSelections(histogram: HistogramBucket[]): number {
  return histogram.reduce((acc, b) => acc + b.count, 0);
}
