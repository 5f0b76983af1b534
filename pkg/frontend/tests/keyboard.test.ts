import { describe, expect, it } from "vitest";

import {
  BLACK_DEPTH,
  BLACK_PITCHES,
  KEYBOARD_H,
  KEYBOARD_W,
  WHITE_PITCHES,
  WHITE_W,
  keyShapes,
  pitchName,
  renderStrip,
  whiteIndexOf,
} from "../src/keyboard.js";

describe("key enumeration", () => {
  it("covers all 88 keys: 52 white, 36 black", () => {
    const shapes = keyShapes();
    expect(shapes).toHaveLength(88);
    expect(shapes.filter((s) => s.kind === "white")).toHaveLength(52);
    expect(shapes.filter((s) => s.kind === "black")).toHaveLength(36);
    expect(new Set(shapes.map((s) => s.pitch)).size).toBe(88);
    expect(WHITE_PITCHES).toHaveLength(52);
    expect(BLACK_PITCHES).toHaveLength(36);
  });

  it("places F4 at white index 26", () => {
    expect(whiteIndexOf(65)).toBe(26);
    const f4 = keyShapes().find((s) => s.pitch === 65)!;
    expect(f4.x0).toBeCloseTo(26 * WHITE_W, 9);
    expect(f4.x1).toBeCloseTo(27 * WHITE_W, 9);
  });

  it("spans A0..C8 with white strips tiling the full width", () => {
    expect(WHITE_PITCHES[0]).toBe(21);
    expect(WHITE_PITCHES[51]).toBe(108);
    const whites = keyShapes().filter((s) => s.kind === "white");
    expect(whites[0].x0).toBe(0);
    expect(whites[51].x1).toBeCloseTo(KEYBOARD_W, 9);
    for (let i = 1; i < whites.length; i++) {
      expect(whites[i].x0).toBeCloseTo(whites[i - 1].x1, 9);
    }
  });

  it("centers black keys on white-key boundaries, 60% deep", () => {
    // A#0 sits between whites 0 and 1
    const bb = keyShapes().find((s) => s.pitch === 22)!;
    expect((bb.x0 + bb.x1) / 2).toBeCloseTo(WHITE_W, 9);
    expect(bb.y1).toBeCloseTo(BLACK_DEPTH, 9);
    expect(BLACK_DEPTH).toBeCloseTo(0.6 * KEYBOARD_H, 9);
    // no black key between E-F or B-C
    expect(keyShapes().some((s) => s.pitch === 64.5)).toBe(false);
    for (const s of keyShapes().filter((k) => k.kind === "black")) {
      expect([1, 3, 6, 8, 10]).toContain(s.pitch % 12);
    }
  });

  it("names pitches with octaves", () => {
    expect(pitchName(60)).toBe("C4");
    expect(pitchName(65)).toBe("F4");
    expect(pitchName(21)).toBe("A0");
    expect(pitchName(108)).toBe("C8");
  });
});

describe("strip rendering", () => {
  it("highlights the target key", () => {
    const svg = renderStrip({ targetPitch: 65 });
    expect(svg).toContain('class="kb-white kb-target" data-pitch="65"');
    expect(svg.match(/kb-target/g)).toHaveLength(1);
  });

  it("draws fingertip markers from the payload only", () => {
    const svg = renderStrip({
      targetPitch: 60,
      hands: [
        {
          side: "R",
          floating: false,
          depth: 1.0,
          fingertips: [
            [100, 50],
            [120, 50],
            [140, 50],
            [160, 50],
            [5000, 50], // off the strip: not drawn
          ],
        },
      ],
    });
    expect(svg.match(/<circle/g)).toHaveLength(4);
    expect(svg).toContain("<title>R1</title>");
  });

  it("marks floating hands", () => {
    const svg = renderStrip({
      targetPitch: 60,
      hands: [
        { side: "L", floating: true, depth: 0.8, fingertips: [[100, 50]] },
      ],
    });
    expect(svg).toContain("kb-floating");
  });
});
