/** Browser entry point: wires the session core to the DOM.
 *
 * Scores are displayed as gaps relative to the best candidate rather than
 * raw negative-log values.  Digit keys 1-9 select the first nine
 * candidates; arrows + enter reach the rest; escape stops.
 */

import { actionForKey, clampRank } from "./keyboard.js";
import type { SessionView } from "./session.js";
import { SessionCore } from "./session.js";
import { gapAnalysis, rankHistogram, totalSelections } from "./stats.js";
import { HttpTransport } from "./transport.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let core: SessionCore | null = null;
let cursor = 0; // arrow-key cursor into the candidate list
let threshold: number | null = null;

function startSession(): void {
  const server = (el<HTMLInputElement>("server").value || "").replace(/\/$/, "");
  const framesPath = el<HTMLInputElement>("frames").value.trim();
  const thresholdRaw = el<HTMLInputElement>("threshold").value.trim();
  threshold = thresholdRaw === "" ? null : Number(thresholdRaw);
  if (!framesPath) {
    el<HTMLElement>("status").textContent = "enter a frames path known to the server";
    return;
  }
  core = new SessionCore(new HttpTransport(server));
  cursor = 0;
  core.onChange(render);
  core.start({
    frames_path: framesPath,
    config: threshold === null ? {} : { auto_accept_threshold: threshold },
  });
  render(core.view());
}

function render(view: SessionView): void {
  el<HTMLElement>("status").textContent = describe(view);
  el<HTMLElement>("transcript").textContent = view.transcript.join(" ") || "(empty)";

  const list = el<HTMLOListElement>("candidates");
  list.innerHTML = "";
  if (view.status === "awaiting_selection" && view.candidates) {
    cursor = clampRank(cursor, view.candidates.length);
    const best = view.candidates[0]?.score ?? 0;
    view.candidates.forEach((candidate, i) => {
      const item = document.createElement("li");
      const hint = i < 9 ? `${i + 1}` : "·";
      const gap = candidate.score - best;
      item.textContent = `[${hint}] ${candidate.word}  (+${gap.toFixed(3)})`;
      item.className = i === cursor ? "candidate selected" : "candidate";
      item.onclick = () => {
        void core?.selectWord(candidate.word);
      };
      list.appendChild(item);
    });
  }

  const noticeBox = el<HTMLElement>("notice");
  noticeBox.textContent = view.notice ?? view.error ?? "";
  noticeBox.className = view.error ? "notice fatal" : "notice";

  renderHistory(view);
  if (view.status === "done" && view.stats) {
    renderReport(view);
  } else if (view.status !== "done") {
    el<HTMLElement>("report").hidden = true;
  }
}

function describe(view: SessionView): string {
  switch (view.status) {
    case "idle":
      return "not connected";
    case "decoding":
      return `decoding position ${view.position}…`;
    case "awaiting_selection":
      return `select word ${view.position + 1}`;
    case "done":
      return "session finished";
    case "error":
      return "session failed";
  }
}

function renderHistory(view: SessionView): void {
  const box = el<HTMLElement>("history");
  box.innerHTML = "";
  for (const record of view.history) {
    const chip = document.createElement("span");
    chip.textContent = record.auto ? `${record.word} (auto)` : record.word;
    chip.className = record.auto ? "chip auto" : "chip";
    chip.title = record.auto
      ? "accepted automatically from the score gap"
      : `picked at rank ${record.rank}`;
    box.appendChild(chip);
  }
}

function renderReport(view: SessionView): void {
  const report = el<HTMLElement>("report");
  report.hidden = false;
  const selections = view.stats!.selections;
  const histogram = rankHistogram(selections);
  const total = totalSelections(histogram);
  const bars = el<HTMLElement>("histogram");
  bars.innerHTML = "";
  for (const bucket of histogram) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const label = document.createElement("span");
    label.textContent = `rank ${bucket.rank}`;
    const bar = document.createElement("span");
    bar.className = "bar";
    bar.style.width = `${(bucket.count / Math.max(total, 1)) * 240}px`;
    const count = document.createElement("span");
    count.textContent = String(bucket.count);
    row.append(label, bar, count);
    bars.appendChild(row);
  }
  const gaps = el<HTMLElement>("gaps");
  gaps.innerHTML = "";
  for (const row of gapAnalysis(selections, threshold)) {
    const div = document.createElement("div");
    const gapText = row.gap === null ? "no rival" : row.gap.toFixed(3);
    div.textContent = `#${row.position + 1} ${row.word} gap=${gapText}` +
      (row.auto ? " (auto-accepted)" : row.wouldAutoAccept ? "" : " (would not auto-accept)");
    div.className = row.wouldAutoAccept || row.auto ? "gap-row" : "gap-row ask";
    gaps.appendChild(div);
  }
}

document.addEventListener("keydown", (event) => {
  if (!core) return;
  const view = core.view();
  if (view.status !== "awaiting_selection" || !view.candidates) return;
  const action = actionForKey(event.key);
  if (!action) return;
  event.preventDefault();
  if (action.type === "select-rank") {
    void core.selectRank(action.rank);
  } else if (action.type === "move") {
    cursor = clampRank(cursor + action.delta, view.candidates.length);
    render(core.view());
  } else if (action.type === "confirm") {
    void core.selectRank(view.candidates[cursor]?.rank ?? 0);
  } else if (action.type === "stop") {
    void core.stop();
  }
});

el<HTMLButtonElement>("start").onclick = startSession;
el<HTMLButtonElement>("stop-btn").onclick = () => void core?.stop();
