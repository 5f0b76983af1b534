// Vector keyboard strip: the same 88-key enumeration the service uses for
// its normalized 1024x125 rectangle, drawn as SVG with a highlighted target
// key and per-finger fingertip markers.

import type { FrameHand } from "./types.js";

export const KEYBOARD_W = 1024;
export const KEYBOARD_H = 125;
export const N_WHITE = 52;
export const WHITE_W = KEYBOARD_W / N_WHITE;
export const BLACK_W = (13.7 / 23.5) * WHITE_W;
export const BLACK_DEPTH = 0.6 * KEYBOARD_H;

const WHITE_PCS = new Set([0, 2, 4, 5, 7, 9, 11]); // C D E F G A B
const NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

export interface KeyShape {
  pitch: number;
  kind: "white" | "black";
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export const WHITE_PITCHES: number[] = [];
export const BLACK_PITCHES: number[] = [];
for (let p = 21; p < 109; p++) {
  (WHITE_PCS.has(p % 12) ? WHITE_PITCHES : BLACK_PITCHES).push(p);
}

export function whiteIndexOf(pitch: number): number {
  const i = WHITE_PITCHES.indexOf(pitch);
  if (i < 0) throw new Error(`pitch ${pitch} is not a white key`);
  return i;
}

export function pitchName(pitch: number): string {
  return `${NAMES[pitch % 12]}${Math.floor(pitch / 12) - 1}`;
}

/** All 88 key shapes on the normalized rectangle (white strips plus black
 *  keys centered on the boundary between whites two semitones apart). */
export function keyShapes(): KeyShape[] {
  const shapes: KeyShape[] = WHITE_PITCHES.map((pitch, i) => ({
    pitch,
    kind: "white",
    x0: i * WHITE_W,
    y0: 0,
    x1: (i + 1) * WHITE_W,
    y1: KEYBOARD_H,
  }));
  for (let i = 0; i < N_WHITE - 1; i++) {
    if (WHITE_PITCHES[i + 1] - WHITE_PITCHES[i] !== 2) continue;
    const bx = (i + 1) * WHITE_W;
    shapes.push({
      pitch: WHITE_PITCHES[i] + 1,
      kind: "black",
      x0: bx - BLACK_W / 2,
      y0: 0,
      x1: bx + BLACK_W / 2,
      y1: BLACK_DEPTH,
    });
  }
  return shapes;
}

const FINGER_COLORS = ["#e05252", "#e0a552", "#52a852", "#5277e0", "#9b52e0"];

export interface StripOptions {
  targetPitch: number;
  hands?: FrameHand[];
  width?: number;
}

/** Render the keyboard strip as an SVG string: white keys first so black
 *  keys draw on top, target key highlighted, fingertip markers color-coded
 *  thumb..little. */
export function renderStrip(opts: StripOptions): string {
  const width = opts.width ?? KEYBOARD_W;
  const scale = width / KEYBOARD_W;
  const height = KEYBOARD_H * scale;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${KEYBOARD_W} ${KEYBOARD_H}" width="${width}" height="${height}" class="kb-strip">`,
  ];
  const shapes = keyShapes().sort((a, b) =>
    a.kind === b.kind ? a.pitch - b.pitch : a.kind === "white" ? -1 : 1,
  );
  for (const s of shapes) {
    const classes = [`kb-${s.kind}`];
    if (s.pitch === opts.targetPitch) classes.push("kb-target");
    parts.push(
      `<rect class="${classes.join(" ")}" data-pitch="${s.pitch}" ` +
        `x="${fmt(s.x0)}" y="${fmt(s.y0)}" width="${fmt(s.x1 - s.x0)}" ` +
        `height="${fmt(s.y1 - s.y0)}"/>`,
    );
  }
  for (const hand of opts.hands ?? []) {
    hand.fingertips.forEach(([x, y], finger) => {
      if (x < 0 || x >= KEYBOARD_W || y < 0 || y >= KEYBOARD_H) return;
      parts.push(
        `<circle class="kb-tip kb-tip-${hand.side}${hand.floating ? " kb-floating" : ""}" ` +
          `cx="${fmt(x)}" cy="${fmt(y)}" r="6" fill="${FINGER_COLORS[finger]}">` +
          `<title>${hand.side}${finger + 1}</title></circle>`,
      );
    });
  }
  parts.push("</svg>");
  return parts.join("");
}

function fmt(v: number): string {
  return Number(v.toFixed(3)).toString();
}
