// Browser entry point: wires the queue controller to the DOM. Everything
// shown is taken from API payloads; the only local computation is drawing.

import { ApiClient, ApiError } from "./api.js";
import { pitchName, renderStrip } from "./keyboard.js";
import { QueueController } from "./queue.js";
import { handleKey } from "./shortcuts.js";
import type { NoteContext } from "./types.js";

const api = new ApiClient();
const queue = new QueueController(api);

const el = (id: string) => document.getElementById(id)!;

let frameIndex = 0;

function render(): void {
  const banner = el("banner");
  banner.textContent = queue.error ?? "";
  banner.hidden = queue.error === null;

  el("progress").textContent = `resolved ${queue.progress}, ` +
    `${queue.serverPending} pending on server`;

  const note = queue.current;
  const ctx = queue.context;
  const panel = el("note-panel");
  const doneBox = el("done");
  if (note === null || ctx === null) {
    panel.hidden = true;
    doneBox.hidden = false;
    return;
  }
  panel.hidden = false;
  doneBox.hidden = true;

  el("note-title").textContent =
    `note ${note.note_id}: ${pitchName(note.pitch)} at ${note.onset_s.toFixed(3)} s (${note.status})`;
  renderChips(ctx);
  renderSelection();
  renderFrames(ctx);
  renderScoreTable(ctx);
}

function renderChips(ctx: NoteContext): void {
  const box = el("candidates");
  box.innerHTML = "";
  if (ctx.candidates.length === 0) {
    box.textContent = "no candidates - judge from the score table and frames";
    return;
  }
  for (const c of ctx.candidates) {
    const chip = document.createElement("button");
    chip.className = "chip" + (c.strong ? " chip-strong" : "");
    chip.textContent = `${c.hand}${c.finger} (${c.score.toFixed(1)})`;
    chip.onclick = () => {
      queue.chooseCandidate(c);
      render();
    };
    box.appendChild(chip);
  }
}

function renderSelection(): void {
  const s = queue.selection;
  el("selection").textContent =
    `selection: hand ${s.hand}, finger ${s.finger ?? "-"} ` +
    `(1-5 finger, L/R hand, Enter confirm, S skip)`;
}

function renderFrames(ctx: NoteContext): void {
  const strip = el("keyboard");
  frameIndex = Math.min(frameIndex, Math.max(0, ctx.frames.length - 1));
  const frame = ctx.frames[frameIndex];
  strip.innerHTML = renderStrip({
    targetPitch: ctx.pitch,
    hands: frame ? frame.hands : [],
    width: strip.clientWidth || 1024,
  });

  const scrub = el("scrubber") as HTMLInputElement;
  scrub.hidden = ctx.frames.length < 2;
  scrub.max = String(Math.max(0, ctx.frames.length - 1));
  scrub.value = String(frameIndex);

  const img = el("frame-image") as HTMLImageElement;
  if (ctx.frame_images && ctx.frame_images[frameIndex]) {
    img.src = ctx.frame_images[frameIndex];
    img.hidden = false;
  } else {
    img.hidden = true;
  }
}

function renderScoreTable(ctx: NoteContext): void {
  const box = el("score-table");
  if (!ctx.score_table) {
    box.hidden = true;
    return;
  }
  box.hidden = false;
  const rows = Object.entries(ctx.score_table)
    .sort((a, b) => b[1] - a[1])
    .map(([k, v]) => `<tr><td>${k}</td><td>${v.toFixed(2)}</td></tr>`);
  box.innerHTML =
    `<table><tr><th>finger</th><th>score</th></tr>${rows.join("")}</table>` +
    `<p>max possible: ${ctx.max_score.toFixed(0)}</p>`;
}

async function refresh(): Promise<void> {
  try {
    frameIndex = 0;
    await queue.load();
  } catch (err) {
    queue.error = err instanceof ApiError ? err.detail : "service unreachable";
  }
  render();
}

document.addEventListener("keydown", (ev) => {
  if (ev.target instanceof HTMLInputElement) return;
  void handleKey(ev.key, queue).then((used) => {
    if (used) {
      frameIndex = 0;
      render();
      ev.preventDefault();
    }
  });
});

el("scrubber").addEventListener("input", (ev) => {
  frameIndex = Number((ev.target as HTMLInputElement).value);
  render();
});

el("reload").onclick = () => void refresh();
el("export").onclick = async () => {
  try {
    const reply = await api.export();
    el("done-detail").textContent =
      `exported ${reply.files.join(", ")} (${reply.pending} pending)`;
  } catch (err) {
    queue.error = err instanceof ApiError ? err.detail : String(err);
    render();
  }
};

void refresh();
