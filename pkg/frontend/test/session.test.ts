import { describe, expect, it } from "vitest";

import { SessionCore } from "../src/session.js";
import type { CandidateView } from "../src/protocol.js";
import { MockServer, list } from "./mock.js";

const LISTS: CandidateView[][] = [
  list(["the", 1.0], ["a", 1.4], ["that", 2.2]),
  list(["cat", 0.9], ["bat", 1.1], ["mat", 1.15]),
  list(["sat", 1.3], ["zat", 4.0]),
];

describe("session parity", () => {
  it("a recorded human session and a scripted client agree on transcript and stats", async () => {
    const rankScript = [1, 0, 0];

    // scripted client: selectRank straight from the script
    const scriptedServer = new MockServer(LISTS);
    const scripted = new SessionCore(scriptedServer);
    await scripted.start({ frames_path: "x" });
    for (const rank of rankScript) {
      expect(await scripted.selectRank(rank)).toBe(true);
    }

    // recorded human session: clicks resolve the rank to a word first,
    // like the candidate list items in the UI do
    const humanServer = new MockServer(LISTS);
    const human = new SessionCore(humanServer);
    await human.start({ frames_path: "x" });
    for (const rank of rankScript) {
      const view = human.view();
      const target = view.candidates!.find((c) => c.rank === rank)!;
      expect(await human.selectWord(target.word)).toBe(true);
    }

    const a = scripted.view();
    const b = human.view();
    expect(a.status).toBe("done");
    expect(b.status).toBe("done");
    expect(a.transcript).toEqual(["a", "cat", "sat"]);
    expect(b.transcript).toEqual(a.transcript);
    expect(b.stats).toEqual(a.stats);
    expect(b.history.map((h) => [h.position, h.word, h.rank, h.auto])).toEqual(
      a.history.map((h) => [h.position, h.word, h.rank, h.auto]),
    );
  });
});

describe("protocol liveness", () => {
  it("rapid repeated clicks send exactly one select per candidate list", async () => {
    const server = new MockServer(LISTS);
    const core = new SessionCore(server);
    await core.start({ frames_path: "x" });

    // three clicks in the same tick; only the first may dispatch
    const clicks = [
      core.selectWord("the"),
      core.selectWord("the"),
      core.selectWord("a"),
    ];
    const results = await Promise.all(clicks);
    expect(results).toEqual([true, false, false]);
    expect(server.selectCounts[0]).toBe(1);

    // and the session continues normally afterwards
    expect(core.view().position).toBe(1);
    expect(await core.selectRank(0)).toBe(true);
    expect(await core.selectRank(0)).toBe(true);
    expect(server.selectCounts).toEqual([1, 1, 1]);
    expect(core.view().status).toBe("done");
  });

  it("ignores selections while decoding or after completion", async () => {
    const server = new MockServer([LISTS[0]]);
    const core = new SessionCore(server);
    expect(await core.selectRank(0)).toBe(false); // before start
    await core.start({ frames_path: "x" });
    await core.selectRank(0);
    expect(core.view().status).toBe("done");
    expect(await core.selectRank(0)).toBe(false); // after done
    expect(server.selectCounts[0]).toBe(1);
  });
});

describe("candidate handling", () => {
  it("preserves protocol order and never fabricates candidates", async () => {
    const oddOrder = [list(["zz", 3.0], ["aa", 1.0], ["mm", 2.0])];
    const core = new SessionCore(new MockServer(oddOrder));
    await core.start({ frames_path: "x" });
    const view = core.view();
    expect(view.candidates!.map((c) => c.word)).toEqual(["zz", "aa", "mm"]);
    expect(await core.selectWord("not-listed")).toBe(false);
  });

  it("keeps the same list in force after a rejected selection", async () => {
    const server = new MockServer(LISTS);
    // simulate a race where the client state has a word the server refuses
    const core = new SessionCore(server);
    await core.start({ frames_path: "x" });
    (core as unknown as { candidates: CandidateView[] }).candidates = list(
      ["the", 1.0],
      ["ghost", 9.9],
    );
    expect(await core.selectWord("ghost")).toBe(false);
    const view = core.view();
    expect(view.status).toBe("awaiting_selection");
    expect(view.notice).toContain("ghost");
    expect(view.transcript).toEqual([]);
    expect(server.selectCounts[0]).toBe(1);
    expect(await core.selectWord("the")).toBe(true);
  });
});

describe("auto-accept", () => {
  it("appends auto-accepted words without prompting, marked in history", async () => {
    const server = new MockServer(LISTS, 1.0); // gaps: 0.4, 0.2, 2.7
    const core = new SessionCore(server);
    await core.start({ frames_path: "x" });
    await core.selectRank(0); // position 0 asks (gap 0.4)
    await core.selectRank(1); // position 1 asks (gap 0.2)
    const view = core.view();
    expect(view.status).toBe("done"); // position 2 auto-accepted (gap 2.7)
    expect(view.transcript).toEqual(["the", "bat", "sat"]);
    expect(view.history.map((h) => h.auto)).toEqual([false, false, true]);
    expect(view.history.at(-1)!.shown).toEqual([]);
    expect(view.stats!.selections.at(-1)!.auto).toBe(true);
  });

  it("history length always equals accepted word count", async () => {
    const server = new MockServer(LISTS, 0.3);
    const core = new SessionCore(server);
    await core.start({ frames_path: "x" });
    while (core.view().status === "awaiting_selection") {
      await core.selectRank(0);
    }
    const view = core.view();
    expect(view.history.length).toBe(view.transcript.length);
  });
});

describe("stop and errors", () => {
  it("stop ends the session with the partial transcript", async () => {
    const core = new SessionCore(new MockServer(LISTS));
    await core.start({ frames_path: "x" });
    await core.selectRank(0);
    await core.stop();
    const view = core.view();
    expect(view.status).toBe("done");
    expect(view.transcript).toEqual(["the"]);
    expect(view.stats!.selections).toHaveLength(1);
  });

  it("a fatal error moves the session to the error state", async () => {
    const failing = new MockServer(LISTS);
    failing.start = async () => ({
      session_id: "mock",
      events: [
        {
          kind: "error",
          session_id: "mock",
          payload: { code: "bad_frames", message: "no such file", fatal: true },
        },
      ],
    });
    const core = new SessionCore(failing);
    await core.start({ frames_path: "x" });
    const view = core.view();
    expect(view.status).toBe("error");
    expect(view.error).toContain("bad_frames");
    expect(await core.selectRank(0)).toBe(false);
  });

  it("a transport failure is reported as an error", async () => {
    const broken = new MockServer(LISTS);
    broken.start = async () => {
      throw new Error("connection refused");
    };
    const core = new SessionCore(broken);
    await core.start({ frames_path: "x" });
    expect(core.view().status).toBe("error");
    expect(core.view().error).toContain("connection refused");
  });
});
