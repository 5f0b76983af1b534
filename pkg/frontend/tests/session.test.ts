// End-to-end annotation loop against the real Python service: a scripted
// keyboard-shortcut session resolves a 10-note pending queue, a mid-session
// reload reproduces server truth, and the export is pending-free.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { QueueController } from "../src/queue.js";
import { handleKey } from "../src/shortcuts.js";
import type { Hand } from "../src/types.js";

const PORT = 8700 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let proc: ChildProcess;
let workDir: string;
let sessionDir = "";

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/api/session`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("annotation service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "pianolabel-ui-"));
  proc = spawn(
    "python3",
    [
      join(__dirname, "..", "scripts", "serve_fixture.py"),
      "--port",
      String(PORT),
      "--dir",
      workDir,
    ],
    { stdio: ["ignore", "pipe", "inherit"] },
  );
  proc.stdout!.on("data", (chunk: Buffer) => {
    for (const line of chunk.toString().split("\n")) {
      if (line.startsWith("{")) {
        sessionDir = JSON.parse(line).session_dir;
      }
    }
  });
  await waitForServer();
}, 60000);

afterAll(() => {
  proc?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("scripted annotation session", () => {
  it("resolves the 10-note queue via shortcuts and exports clean", async () => {
    const api = new ApiClient(BASE);
    const queue = new QueueController(api, "scripted-ui");
    await queue.load();
    expect(queue.total).toBe(10);
    expect(queue.progress).toBe("0/10");

    // scripted labels: alternate hands, cycle fingers
    const planned = new Map<number, { hand: Hand; finger: number }>();
    const firstHalf = queue.queue.slice(0, 5).map((n) => n.note_id);
    for (const [k, noteId] of queue.queue.map(
      (n, i) => [i, n.note_id] as const,
    )) {
      planned.set(noteId, {
        hand: k % 2 === 0 ? "R" : "L",
        finger: (k % 5) + 1,
      });
    }

    for (const noteId of firstHalf) {
      const plan = planned.get(noteId)!;
      await handleKey(plan.hand === "R" ? "r" : "l", queue);
      await handleKey(String(plan.finger), queue);
      await handleKey("Enter", queue);
    }
    expect(queue.progress).toBe("5/10");

    // reload mid-session: a fresh controller sees exactly the server truth
    const reloaded = new QueueController(api, "scripted-ui");
    await reloaded.load();
    expect(reloaded.total).toBe(5);
    expect(reloaded.queue.map((n) => n.note_id)).toEqual(
      queue.queue.slice(5).map((n) => n.note_id),
    );
    const rows = await api.notes();
    for (const row of rows) {
      const plan = planned.get(row.note_id)!;
      if (firstHalf.includes(row.note_id)) {
        expect(row.status).toBe("manual");
        expect({ hand: row.hand, finger: row.finger }).toEqual(plan);
      } else {
        expect(row.status).toBe("pending-none");
      }
    }

    // finish on the reloaded controller
    for (const note of reloaded.queue) {
      const plan = planned.get(note.note_id)!;
      await handleKey(plan.hand === "R" ? "r" : "l", reloaded);
      await handleKey(String(plan.finger), reloaded);
      await handleKey("Enter", reloaded);
    }
    expect(reloaded.done).toBe(true);
    expect((await api.session()).pending).toBe(0);

    // server state matches the script exactly
    for (const row of await api.notes()) {
      const plan = planned.get(row.note_id)!;
      expect(row.status).toBe("manual");
      expect({ hand: row.hand, finger: row.finger }).toEqual(plan);
    }

    // export succeeds and contains zero pending rows
    const exported = await api.export();
    expect(exported.pending).toBe(0);
    expect(sessionDir).not.toBe("");
    const jsonl = readFileSync(join(sessionDir, "fingering.jsonl"), "utf-8");
    const parsed = jsonl
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line));
    expect(parsed).toHaveLength(10);
    expect(parsed.every((r) => r.status === "manual")).toBe(true);
  }, 60000);
});
