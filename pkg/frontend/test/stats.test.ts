import { describe, expect, it } from "vitest";

import type { SelectionRecord } from "../src/protocol.js";
import { gapAnalysis, rankHistogram, totalSelections } from "../src/stats.js";

function sel(position: number, rank: number, gap: number | null, auto = false): SelectionRecord {
  return { position, word: `w${position}`, rank, auto, gap };
}

describe("rank histogram", () => {
  it("counts selections per rank in ascending rank order", () => {
    const hist = rankHistogram([sel(0, 0, 1), sel(1, 3, 1), sel(2, 0, 1)]);
    expect(hist).toEqual([
      { rank: 0, count: 2 },
      { rank: 3, count: 1 },
    ]);
    expect(totalSelections(hist)).toBe(3);
  });

  it("is empty for an empty session", () => {
    expect(rankHistogram([])).toEqual([]);
    expect(totalSelections([])).toBe(0);
  });
});

describe("gap analysis", () => {
  it("flags positions the threshold would not have auto-accepted", () => {
    const rows = gapAnalysis(
      [sel(0, 0, 2.5), sel(1, 1, 0.2), sel(2, 0, null)],
      1.0,
    );
    expect(rows.map((r) => r.wouldAutoAccept)).toEqual([true, false, true]);
  });

  it("flags nothing when the threshold is off", () => {
    const rows = gapAnalysis([sel(0, 0, 5.0)], null);
    expect(rows[0].wouldAutoAccept).toBe(false);
  });
});
