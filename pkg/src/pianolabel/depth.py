"""Relative hand depth from 2-D landmarks.

A per-recording model skeleton (the wrist / index-MCP / ring-MCP triangle
of a flat, untilted hand on the keyboard) anchors absolute scale. Each
frame's observed triangle then determines the depths (t, u, v) of the
three points along their camera rays; their mean d is the hand's relative
z-depth, with d < 0.9 classified as a floating hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WRIST = 0
INDEX_MCP = 5
RING_MCP = 13
FINGERTIPS = (4, 8, 12, 16, 20)  # thumb..little

FLOATING_THRESHOLD = 0.9
NEUTRAL_ANGLE_DEG = 28.0


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Hand:
    side: str               # 'L' or 'R'
    score: float
    landmarks: np.ndarray   # 21 x 2, normalized image coords in [0, 1]


@dataclass(frozen=True)
class LandmarkFrame:
    frame_idx: int
    t_s: float
    hands: tuple


@dataclass(frozen=True)
class ModelSkeleton:
    side: str
    iw: float  # |I0 W0|
    wr: float  # |W0 R0|
    ri: float  # |R0 I0|

    def __post_init__(self):
        sides = (self.iw, self.wr, self.ri)
        if min(sides) <= 0:
            raise ValueError("model skeleton sides must be positive")
        a, b, c = sorted(sides)
        if a + b <= c:
            raise ValueError("model skeleton violates the triangle inequality")


@dataclass(frozen=True)
class HandDepthResult:
    t: float
    u: float
    v: float

    @property
    def d(self):
        return (self.t + self.u + self.v) / 3.0

    def floating(self, threshold=FLOATING_THRESHOLD):
        return classify_floating(self, threshold)


def classify_floating(result: HandDepthResult, threshold=FLOATING_THRESHOLD) -> bool:
    """Floating iff the mean depth is strictly below the threshold."""
    return result.d < threshold


# ---------------------------------------------------------------------------
# camera-plane mapping


def to_camera_plane(landmarks, aspect_ratio):
    """Map normalized (u, v) in [0,1]^2 to the z=1 camera plane:
    x = 2u - 1 in (-1, 1), y = AR * (2v - 1) in (-AR, AR)."""
    lm = np.asarray(landmarks, dtype=float)
    out = np.empty_like(lm)
    out[..., 0] = 2.0 * lm[..., 0] - 1.0
    out[..., 1] = aspect_ratio * (2.0 * lm[..., 1] - 1.0)
    return out


# ---------------------------------------------------------------------------
# calibration metrics


@dataclass(frozen=True)
class TriangleMetrics:
    angle_deg: float
    ratio: float        # |triangle IWR| / |hexagon W F1..F5|
    area: float         # |triangle IWR|
    sides: tuple        # (|IW|, |WR|, |RI|)
    valid: bool
    reason: str = ""


def _shoelace(points):
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _is_simple_polygon(points):
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(i - j) in (1, n - 1):  # adjacent edges share a vertex
                continue
            if _segments_intersect(points[i], points[(i + 1) % n],
                                   points[j], points[(j + 1) % n]):
                return False
    return True


def triangle_metrics(hand: Hand, aspect_ratio) -> TriangleMetrics:
    """Angle at the wrist, bend ratio, and triangle area in camera-plane
    coordinates. Degenerate or self-intersecting configurations are flagged
    invalid and excluded from calibration."""
    cam = to_camera_plane(hand.landmarks, aspect_ratio)
    w, i, r = cam[WRIST], cam[INDEX_MCP], cam[RING_MCP]
    wi, wr = i - w, r - w
    n_wi, n_wr = np.linalg.norm(wi), np.linalg.norm(wr)
    invalid = lambda reason: TriangleMetrics(0.0, 0.0, 0.0, (0, 0, 0), False, reason)
    if n_wi < 1e-12 or n_wr < 1e-12:
        return invalid("zero-length ray at wrist")
    cos_a = np.clip(np.dot(wi, wr) / (n_wi * n_wr), -1.0, 1.0)
    angle = math.degrees(math.acos(cos_a))
    tri_area = _shoelace([i, w, r])
    hexagon = [cam[WRIST]] + [cam[t] for t in FINGERTIPS]
    hex_area = _shoelace(hexagon)
    if tri_area < 1e-15:
        return invalid("collinear I, W, R")
    if hex_area < 1e-15:
        return invalid("zero hexagon area")
    if not _is_simple_polygon(hexagon):
        return invalid("self-intersecting hexagon")
    sides = (float(np.linalg.norm(i - w)), float(np.linalg.norm(w - r)),
             float(np.linalg.norm(r - i)))
    return TriangleMetrics(angle, tri_area / hex_area, tri_area, sides, True)


def select_model_skeleton(hands, aspect_ratio, side=None, min_frames=20,
                          neutral_angle=NEUTRAL_ANGLE_DEG) -> ModelSkeleton:
    """Pick the model skeleton from all frames of one hand: among the frames
    in the lowest 10% of |angle - 28 deg| and the highest 50% of the bend
    ratio, take the one with the median triangle area (lower median)."""
    metrics = [triangle_metrics(h, aspect_ratio) for h in hands]
    valid = [(idx, m) for idx, m in enumerate(metrics) if m.valid]
    if len(valid) < min_frames:
        raise CalibrationError(
            f"insufficient calibration frames: {len(valid)} valid, need {min_frames}")
    if side is None:
        side = hands[valid[0][0]].side

    n = len(valid)
    dev_order = sorted(valid, key=lambda im: abs(im[1].angle_deg - neutral_angle))
    k = max(1, math.ceil(0.10 * n))
    angle_set = {im[0] for im in dev_order[:k]}
    ratio_order = sorted(valid, key=lambda im: -im[1].ratio)
    m_keep = max(1, n // 2)
    ratio_set = {im[0] for im in ratio_order[:m_keep]}

    survivors = [im for im in valid if im[0] in angle_set and im[0] in ratio_set]
    if not survivors:
        survivors = [im for im in valid if im[0] in angle_set]
    if not survivors:
        raise CalibrationError("insufficient calibration frames after filtering")

    by_area = sorted(survivors, key=lambda im: im[1].area)
    chosen = by_area[(len(by_area) - 1) // 2][1]
    return ModelSkeleton(side, *chosen.sides)


# ---------------------------------------------------------------------------
# depth solve (Powell's dog-leg trust region)


def _residual_and_jacobian(x, p_i, p_w, p_r, model):
    t, u, v = x
    a = p_i * t - p_w * u
    b = p_w * u - p_r * v
    c = p_r * v - p_i * t
    na, nb, nc = np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c)
    f = np.array([na - model.iw, nb - model.wr, nc - model.ri])
    eps = 1e-300
    J = np.array([
        [np.dot(p_i, a) / (na + eps), -np.dot(p_w, a) / (na + eps), 0.0],
        [0.0, np.dot(p_w, b) / (nb + eps), -np.dot(p_r, b) / (nb + eps)],
        [-np.dot(p_i, c) / (nc + eps), 0.0, np.dot(p_r, c) / (nc + eps)],
    ])
    return f, J


def _dogleg_step(f, J, radius):
    g = J.T @ f  # gradient of 0.5 ||f||^2
    try:
        p_gn = np.linalg.solve(J, -f)  # Gauss-Newton step (square system)
    except np.linalg.LinAlgError:
        p_gn = None
    if p_gn is not None and np.linalg.norm(p_gn) <= radius:
        return p_gn
    Jg = J @ g
    alpha = np.dot(g, g) / max(np.dot(Jg, Jg), 1e-300)
    p_sd = -alpha * g  # Cauchy point
    n_sd = np.linalg.norm(p_sd)
    if p_gn is None or n_sd >= radius:
        return -radius * g / max(np.linalg.norm(g), 1e-300)
    # walk from the Cauchy point toward Gauss-Newton until the boundary
    diff = p_gn - p_sd
    a = np.dot(diff, diff)
    b = 2.0 * np.dot(p_sd, diff)
    c = np.dot(p_sd, p_sd) - radius * radius
    s = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return p_sd + s * diff


def solve_depths(p_i, p_w, p_r, model: ModelSkeleton, max_iter=100,
                 residual_tol=1e-10, step_tol=1e-12):
    """Solve for (t, u, v) with the observed camera-plane points I, W, R on
    rays (x*s, y*s, s), matching the model-skeleton side lengths.

    Returns a HandDepthResult, or None when the solve does not converge or
    yields a nonpositive depth (frame is depth-unknown).
    """
    p_i = np.array([p_i[0], p_i[1], 1.0])
    p_w = np.array([p_w[0], p_w[1], 1.0])
    p_r = np.array([p_r[0], p_r[1], 1.0])
    # the size ratio of the model triangle to the observed one is a good
    # overall depth estimate; used as a fallback start when the unit guess
    # stalls in a residual local minimum
    obs_perim = (np.linalg.norm(p_i - p_w) + np.linalg.norm(p_w - p_r)
                 + np.linalg.norm(p_r - p_i))
    scale0 = (model.iw + model.wr + model.ri) / max(obs_perim, 1e-12)
    starts = [np.full(3, 1.0), np.full(3, scale0), np.full(3, 0.5 * scale0),
              np.full(3, 2.0 * scale0)]
    starts += [scale0 * np.array(m) for m in
               ((1.2, 0.9, 1.0), (0.9, 1.2, 1.0), (1.0, 0.9, 1.2),
                (1.0, 1.2, 0.9), (1.3, 1.0, 0.8), (0.8, 1.0, 1.3))]
    for start in starts:
        result = _dogleg_solve(start, p_i, p_w, p_r, model,
                               max_iter, residual_tol, step_tol)
        if result is not None:
            return result
    # all trust-region starts stalled in residual local minima; fall back to
    # the algebraic reduction and take the root nearest the size-ratio prior
    roots = _algebraic_roots(p_i, p_w, p_r, model)
    if roots:
        best = min(roots, key=lambda r: np.linalg.norm(np.asarray(r) - scale0))
        return HandDepthResult(*map(float, best))
    return None


def _dogleg_solve(x, p_i, p_w, p_r, model, max_iter, residual_tol, step_tol):
    radius = 1.0
    f, J = _residual_and_jacobian(x, p_i, p_w, p_r, model)
    cost = 0.5 * np.dot(f, f)
    for _ in range(max_iter):
        if np.linalg.norm(f) < residual_tol:
            break
        p = _dogleg_step(f, J, radius)
        step_norm = np.linalg.norm(p)
        if step_norm < step_tol:
            break
        x_new = x + p
        f_new, J_new = _residual_and_jacobian(x_new, p_i, p_w, p_r, model)
        cost_new = 0.5 * np.dot(f_new, f_new)
        predicted = -np.dot(J.T @ f, p) - 0.5 * np.dot(J @ p, J @ p)
        rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if rho > 0:
            x, f, J, cost = x_new, f_new, J_new, cost_new
        if rho < 0.25:
            radius *= 0.25
        elif rho > 0.75:
            radius = max(radius, 2.0 * step_norm)
    else:
        if np.linalg.norm(f) >= residual_tol:
            return None
    if np.linalg.norm(f) >= 1e-6:
        return None
    # the trust region can stall in a shallow residual valley near (but not
    # at) a root; polish with Newton and accept only a true root
    scale = max(model.iw, model.wr, model.ri)
    polished = _newton_polish(x, (p_i, p_w, p_r), (model.iw, model.wr, model.ri))
    if polished is None:
        return None
    f, _ = _residual_and_jacobian(polished, p_i, p_w, p_r, model)
    if np.linalg.norm(f) >= 1e-9 * scale:
        return None
    t, u, v = polished
    if t <= 0 or u <= 0 or v <= 0:
        return None
    return HandDepthResult(float(t), float(u), float(v))


def _algebraic_roots(p_i, p_w, p_r, model):
    """Every positive (t, u, v) exactly satisfying the three distance
    equations, by reducing to the classic three-point pose system: with
    unit rays and s2 = x s1, s3 = y s1 the system becomes two quadratics
    in x whose Sylvester resultant is a polynomial in y."""
    sides = (model.iw, model.wr, model.ri)
    p = [np.asarray(q, dtype=float) for q in (p_i, p_w, p_r)]
    norms = [np.linalg.norm(q) for q in p]
    j = [q / n for q, n in zip(p, norms)]
    c, a, b = sides  # |IW|, |WR|, |RI|
    cos_g, cos_a, cos_b = j[0] @ j[1], j[1] @ j[2], j[0] @ j[2]
    b2, c2, a2 = b * b, c * c, a * a

    def sylvester_det(y):
        d2 = 1.0 + y * y - 2.0 * y * cos_b
        A = (b2, -2.0 * b2 * cos_g, b2 - c2 * d2)
        B = (-b2, 2.0 * b2 * cos_a * y, a2 * d2 - b2 * y * y)
        M = np.array([[A[0], A[1], A[2], 0.0],
                      [0.0, A[0], A[1], A[2]],
                      [B[0], B[1], B[2], 0.0],
                      [0.0, B[0], B[1], B[2]]])
        return np.linalg.det(M)

    ys = np.linspace(0.05, 8.0, 33)
    V = np.vander(ys, 9, increasing=True)
    coef, *_ = np.linalg.lstsq(V, np.array([sylvester_det(y) for y in ys]),
                               rcond=None)
    coef = np.where(np.abs(coef) > 1e-10 * np.abs(coef).max(), coef, 0.0)
    out = []
    for y in np.polynomial.polynomial.polyroots(coef):
        if abs(y.imag) > 1e-8 or y.real <= 0:
            continue
        y = float(y.real)
        d2 = 1.0 + y * y - 2.0 * y * cos_b
        if d2 <= 0:
            continue
        s1 = b / math.sqrt(d2)
        A = (b2, -2.0 * b2 * cos_g, b2 - c2 * d2)
        disc = A[1] * A[1] - 4.0 * A[0] * A[2]
        if disc < 0:
            continue
        for sgn in (1.0, -1.0):
            x_ratio = (-A[1] + sgn * math.sqrt(disc)) / (2.0 * A[0])
            if x_ratio <= 0:
                continue
            cand = np.array([s1 / norms[0], x_ratio * s1 / norms[1],
                             y * s1 / norms[2]])
            cand = _newton_polish(cand, p, sides)
            if cand is None:
                continue
            if not any(np.max(np.abs(cand - np.asarray(o))) < 1e-6 for o in out):
                out.append(tuple(cand))
    return out


def _newton_polish(x, p, sides, iters=20):
    for _ in range(iters):
        f, J = _residual_and_jacobian(x, p[0], p[1],
                                      p[2], ModelSkeleton("R", *sides))
        if np.linalg.norm(f) < 1e-12:
            break
        try:
            x = x - np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return None
    f, _ = _residual_and_jacobian(x, p[0], p[1], p[2], ModelSkeleton("R", *sides))
    if np.linalg.norm(f) > 1e-8 * max(sides) or np.min(x) <= 0:
        return None
    return x


def solve_hand_depth(hand: Hand, aspect_ratio, model: ModelSkeleton):
    """Depth solve from a hand's landmarks (convenience wrapper)."""
    cam = to_camera_plane(hand.landmarks, aspect_ratio)
    return solve_depths(cam[INDEX_MCP], cam[WRIST], cam[RING_MCP], model)


# ---------------------------------------------------------------------------
# landmark JSONL


def load_landmarks(path_or_lines) -> list[LandmarkFrame]:
    """Read landmark JSONL: one object per frame,
    {"frame": i, "t": sec, "hands": [{"side": "L", "score": s, "lm": [[u, v] x 21]}]}."""
    import json
    if hasattr(path_or_lines, "read"):
        text = path_or_lines.read()
    elif isinstance(path_or_lines, str) and "\n" not in path_or_lines and not path_or_lines.lstrip().startswith("{"):
        with open(path_or_lines) as f:
            text = f.read()
    else:
        text = path_or_lines
    frames = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        hands = []
        for h in obj.get("hands", []):
            lm = np.asarray(h["lm"], dtype=float)
            if lm.shape != (21, 2):
                raise ValueError(f"frame {obj['frame']}: expected 21 landmarks, got {lm.shape}")
            hands.append(Hand(h["side"], float(h.get("score", 1.0)), lm))
        frames.append(LandmarkFrame(int(obj["frame"]), float(obj["t"]), tuple(hands)))
    return frames


def save_landmarks(frames, path):
    import json
    with open(path, "w") as f:
        for fr in frames:
            obj = {"frame": fr.frame_idx, "t": fr.t_s,
                   "hands": [{"side": h.side, "score": h.score,
                              "lm": np.asarray(h.landmarks).tolist()} for h in fr.hands]}
            f.write(json.dumps(obj) + "\n")
