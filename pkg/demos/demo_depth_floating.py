"""Hand depth and floating-hand detection.

The hand rests on the keyboard for seven seconds, then lifts to 85% of its
camera distance for three. Per-frame depths are solved from the wrist/MCP
triangle against a calibrated model skeleton; frames with depth below the
strict 0.9 threshold are flagged floating and excluded from fingering
evidence.
"""

import numpy as np

from pianolabel.fingering import prepare_frames
from pianolabel.geometry import WHITE_W

from common import FPS, GEOMETRY, make_frames, make_hand


def main():
    tips = [((20.5 + k) * WHITE_W, 100.0) for k in range(5)]
    lift_start = int(7.0 * FPS)

    def script(i):
        depth = 0.85 if i >= lift_start else 1.0
        return [make_hand("R", tips, depth=depth)]

    frames = make_frames(script, n_frames=int(10.0 * FPS))
    prepared, skeletons = prepare_frames(frames, GEOMETRY)

    sk = skeletons["R"]
    print(f"calibrated model skeleton (R): iw={sk.iw:.4f} wr={sk.wr:.4f} ri={sk.ri:.4f}")

    depths = np.array([fr.hands[0].depth for fr in prepared])
    floating = np.array([fr.hands[0].floating for fr in prepared])
    on_kb, lifted = slice(0, lift_start), slice(lift_start, None)
    print(f"on-keyboard frames: mean depth {depths[on_kb].mean():.3f}, "
          f"floating {100 * floating[on_kb].mean():.1f}%")
    print(f"lifted frames:      mean depth {depths[lifted].mean():.3f}, "
          f"floating {100 * floating[lifted].mean():.1f}%")


if __name__ == "__main__":
    main()
