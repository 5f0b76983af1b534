"""Keyboard geometry: lens undistortion, homography to the normalized
keyboard rectangle (1024 x 125), and the 88-key layout.

Pixel coordinates are undistorted with a Brown-Conrady radial-tangential
model, then mapped by a 4-point homography onto a rectangle whose width
spans the 52 white keys. Key regions support point-in-key queries and
distance-to-key computations used by the fingering scorer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

KEYBOARD_W = 1024.0
KEYBOARD_H = 125.0
N_WHITE = 52
WHITE_W = KEYBOARD_W / N_WHITE
BLACK_W = (13.7 / 23.5) * WHITE_W  # real-piano width ratio
BLACK_DEPTH = 0.6 * KEYBOARD_H     # black keys reach 60% down from the far edge

_WHITE_PCS = {0, 2, 4, 5, 7, 9, 11}  # C D E F G A B

WHITE_PITCHES = tuple(p for p in range(21, 109) if p % 12 in _WHITE_PCS)
BLACK_PITCHES = tuple(p for p in range(21, 109) if p % 12 not in _WHITE_PCS)
assert len(WHITE_PITCHES) == 52 and len(BLACK_PITCHES) == 36


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class DistortionCoeffs:
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    @property
    def is_identity(self):
        return self.k1 == self.k2 == self.p1 == self.p2 == 0.0


@dataclass(frozen=True)
class KeyboardGeometry:
    """Outer corners of the 88-key keybed in pixels, ordered TL, TR, BR, BL
    (top edge = far edge from the player), plus the lens model."""
    corners: tuple  # 4 (x, y) pixel points
    distortion: DistortionCoeffs
    image_w: int
    image_h: int

    def __post_init__(self):
        pts = np.asarray(self.corners, dtype=float)
        if pts.shape != (4, 2):
            raise GeometryError("expected 4 corner points")
        if not _is_strictly_convex(pts):
            raise GeometryError("corners must form a strictly convex quadrilateral")


def _is_strictly_convex(pts):
    crosses = []
    for i in range(4):
        a, b, c = pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]
        u, v = b - a, c - b
        crosses.append(u[0] * v[1] - u[1] * v[0])
    crosses = np.asarray(crosses)
    return bool(np.all(crosses > 1e-9) or np.all(crosses < -1e-9))


def load_geometry(path_or_text) -> KeyboardGeometry:
    """Read the geometry JSON: corners, distortion, image_size."""
    if isinstance(path_or_text, (str, bytes)) and str(path_or_text).lstrip().startswith("{"):
        obj = json.loads(path_or_text)
    else:
        with open(path_or_text) as f:
            obj = json.load(f)
    corners = [tuple(map(float, c)) for c in obj["corners"]]
    if obj.get("corner_order") == "unordered":
        corners = _order_corners(corners)
    d = obj.get("distortion", {})
    dist = DistortionCoeffs(d.get("k1", 0.0), d.get("k2", 0.0), d.get("p1", 0.0), d.get("p2", 0.0))
    w, h = obj["image_size"]
    return KeyboardGeometry(tuple(corners), dist, int(w), int(h))


def _order_corners(corners):
    """Sort unordered corner points into TL, TR, BR, BL by centroid angle."""
    pts = np.asarray(corners, dtype=float)
    centroid = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    order = np.argsort(angles)  # CCW in image coords (y down) = TL,TR,BR,BL visually
    ordered = pts[order]
    # rotate so the first point is the one above-left of the centroid
    for k in range(4):
        p = ordered[k]
        if p[0] < centroid[0] and p[1] < centroid[1]:
            ordered = np.roll(ordered, -k, axis=0)
            break
    return [tuple(p) for p in ordered]


# ---------------------------------------------------------------------------
# distortion


def distort(pt, d: DistortionCoeffs, image_w, image_h):
    """Forward Brown-Conrady model (ideal -> observed), about the image
    center with focal scale image_w."""
    cx, cy = image_w / 2.0, image_h / 2.0
    xn = (pt[0] - cx) / image_w
    yn = (pt[1] - cy) / image_w
    r2 = xn * xn + yn * yn
    radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2
    xd = xn * radial + 2 * d.p1 * xn * yn + d.p2 * (r2 + 2 * xn * xn)
    yd = yn * radial + d.p1 * (r2 + 2 * yn * yn) + 2 * d.p2 * xn * yn
    return (xd * image_w + cx, yd * image_w + cy)


def undistort(pt, d: DistortionCoeffs, image_w, image_h, max_iter=50, tol=1e-12):
    """Invert the distortion model by fixed-point iteration."""
    if d.is_identity:
        return (float(pt[0]), float(pt[1]))
    cx, cy = image_w / 2.0, image_h / 2.0
    xd = (pt[0] - cx) / image_w
    yd = (pt[1] - cy) / image_w
    x, y = xd, yd
    for _ in range(max_iter):
        r2 = x * x + y * y
        radial = 1.0 + d.k1 * r2 + d.k2 * r2 * r2
        dx = 2 * d.p1 * x * y + d.p2 * (r2 + 2 * x * x)
        dy = d.p1 * (r2 + 2 * y * y) + 2 * d.p2 * x * y
        x_new = (xd - dx) / radial
        y_new = (yd - dy) / radial
        if abs(x_new - x) < tol and abs(y_new - y) < tol:
            return (x_new * image_w + cx, y_new * image_w + cy)
        x, y = x_new, y_new
    raise GeometryError(f"undistortion failed to converge for point {pt}")


# ---------------------------------------------------------------------------
# homography


@dataclass(frozen=True)
class Homography:
    matrix: np.ndarray  # 3x3, undistorted pixels -> keyboard rectangle

    def __post_init__(self):
        if abs(np.linalg.det(self.matrix)) < 1e-12:
            raise GeometryError("homography is singular")

    @property
    def inverse(self):
        return Homography(np.linalg.inv(self.matrix))


_TARGET_CORNERS = np.array([(0.0, 0.0), (KEYBOARD_W, 0.0),
                            (KEYBOARD_W, KEYBOARD_H), (0.0, KEYBOARD_H)])


def homography_from_points(src, dst) -> Homography:
    """4-point DLT: solve the 8x8 linear system with h33 = 1."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (X, Y)) in enumerate(zip(src, dst)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -x * X, -y * X]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -x * Y, -y * Y]
        b[2 * i] = X
        b[2 * i + 1] = Y
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise GeometryError(f"degenerate quadrilateral: {e}") from None
    H = np.append(h, 1.0).reshape(3, 3)
    return Homography(H)


def compute_homography(g: KeyboardGeometry) -> Homography:
    """Homography sending the (undistorted) keyboard corners to the
    1024 x 125 rectangle corners."""
    src = [undistort(c, g.distortion, g.image_w, g.image_h) for c in g.corners]
    return homography_from_points(src, _TARGET_CORNERS)


def to_keyboard_space(h: Homography, pt):
    """Apply the homography with w-division. Returns ((x, y), on_keyboard)."""
    v = h.matrix @ np.array([pt[0], pt[1], 1.0])
    if abs(v[2]) < 1e-12:
        raise GeometryError(f"point {pt} maps to infinity")
    x, y = v[0] / v[2], v[1] / v[2]
    on = (0.0 <= x < KEYBOARD_W) and (0.0 <= y < KEYBOARD_H)
    return (x, y), on


# ---------------------------------------------------------------------------
# 88-key layout


class KeyLayout:
    """88-key layout over the normalized rectangle: 52 equal white strips
    and 36 black rectangles centered on white-key boundaries."""

    def __init__(self):
        self.white_pitches = WHITE_PITCHES
        self.black_pitches = BLACK_PITCHES
        self._white_index = {p: i for i, p in enumerate(WHITE_PITCHES)}
        # black key between white i and i+1 when the whites are 2 semitones apart
        self._black_between = {}  # white_index -> black pitch
        for i in range(N_WHITE - 1):
            if WHITE_PITCHES[i + 1] - WHITE_PITCHES[i] == 2:
                self._black_between[i] = WHITE_PITCHES[i] + 1
        # axis-aligned rectangles (x0, y0, x1, y1) per pitch
        self._rects = {}
        for pitch in BLACK_PITCHES:
            i = self._white_index_left_of_black(pitch)
            bx = (i + 1) * WHITE_W
            self._rects[pitch] = [(bx - BLACK_W / 2, 0.0, bx + BLACK_W / 2, BLACK_DEPTH)]
        for i, pitch in enumerate(WHITE_PITCHES):
            x0, x1 = i * WHITE_W, (i + 1) * WHITE_W
            rects = [(x0, BLACK_DEPTH, x1, KEYBOARD_H)]
            top_x0, top_x1 = x0, x1
            left_black = self._black_between.get(i - 1)
            right_black = self._black_between.get(i)
            if left_black is not None:
                top_x0 = self._rects[left_black][0][2]
            if right_black is not None:
                top_x1 = self._rects[right_black][0][0]
            rects.append((top_x0, 0.0, top_x1, BLACK_DEPTH))
            self._rects[pitch] = rects

    def _white_index_left_of_black(self, black_pitch):
        for i, bp in self._black_between.items():
            if bp == black_pitch:
                return i
        raise KeyError(black_pitch)

    def white_index_of(self, x):
        return int(np.clip(math.floor(x / WHITE_W), 0, N_WHITE - 1))

    def white_pitch(self, white_index):
        return WHITE_PITCHES[white_index]

    def locate_key(self, pt):
        """Return (white_index, containing_pitch or None, signed distance from
        x to the nearest white-strip boundary in white-key widths)."""
        x, y = float(pt[0]), float(pt[1])
        wi = self.white_index_of(x)
        boundary_offset = x / WHITE_W - round(x / WHITE_W)
        pitch = None
        if 0.0 <= x < KEYBOARD_W and 0.0 <= y < KEYBOARD_H:
            pitch = WHITE_PITCHES[wi]
            if y < BLACK_DEPTH:
                for bp in (self._black_between.get(wi - 1), self._black_between.get(wi)):
                    if bp is not None:
                        x0, y0, x1, y1 = self._rects[bp][0]
                        if x0 <= x < x1 and y0 <= y < y1:
                            pitch = bp
                            break
        return wi, pitch, boundary_offset

    def candidate_pitches(self, white_index, candidate_range=2):
        """White keys within +-range of white_index plus the black keys
        between consecutive included whites."""
        if not 0 <= white_index < N_WHITE:
            raise ValueError(f"white_index {white_index} out of range")
        lo = max(0, white_index - candidate_range)
        hi = min(N_WHITE - 1, white_index + candidate_range)
        pitches = {WHITE_PITCHES[i] for i in range(lo, hi + 1)}
        for i in range(lo, hi):
            bp = self._black_between.get(i)
            if bp is not None:
                pitches.add(bp)
        return pitches

    def distance_to_key(self, pt, pitch):
        """Euclidean distance from a keyboard-space point to the key region,
        in white-key widths (0 when inside)."""
        x, y = float(pt[0]), float(pt[1])
        best = math.inf
        for x0, y0, x1, y1 in self._rects[pitch]:
            dx = max(x0 - x, 0.0, x - x1)
            dy = max(y0 - y, 0.0, y - y1)
            best = min(best, math.hypot(dx, dy))
        return best / WHITE_W

    def contains(self, pt, pitch):
        return self.distance_to_key(pt, pitch) == 0.0
