"""Synthetic data: parametric expression schematics standing in for a
portrait dataset, plus a planted-pattern corpus for detector training.

Expression faces are 120x120 bright canvases with dark parts (brows, eyes,
nose, mouth) whose geometry varies per class: mouth curvature and opening,
eye aperture, brow tilt and raise. Each sample also carries an expression
intensity drawn per image, interpolating the part geometry between a shared
neutral pose and the class template, so every class traces a curve from
neutral to its apex the way posed expression datasets do. The noise level
scales the intensity spread, part jitter, global rotation/translation/scale,
and per-pixel noise, so noise=0 yields one exact template per class.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .dataset import DatasetManifest, manifest_from_rows
from .errors import InvalidInputError
from .evalharness import CLASS_NAMES
from .facedetect import DetectionBox
from .imaging import GrayImage, Point2D, resize_bilinear, rotate_about

BG = 0.85

# geometry anchored to the canonical 120 grid: eye centers (42, 33)/(42, 87)
# with rx=9 put the outer eye tips on the reference endpoints (24..96, y=42)
EXPRESSIONS = {
    "happy":    dict(eye_ry=4.5, brow_inner=0.0,  brow_raise=0.0,  curve=-5.5, m_ry=3.0, m_rx=16.0, lip=0.0, wrinkle=False),
    "sad":      dict(eye_ry=4.0, brow_inner=3.5,  brow_raise=1.0,  curve=5.5,  m_ry=3.0, m_rx=14.0, lip=0.0, wrinkle=False),
    "fear":     dict(eye_ry=5.5, brow_inner=2.0,  brow_raise=4.0,  curve=0.0,  m_ry=5.5, m_rx=9.0,  lip=2.5, wrinkle=False),
    "anger":    dict(eye_ry=3.0, brow_inner=-4.0, brow_raise=-2.0, curve=2.5,  m_ry=4.5, m_rx=15.0, lip=0.0, wrinkle=False),
    "surprise": dict(eye_ry=6.0, brow_inner=0.0,  brow_raise=6.0,  curve=0.0,  m_ry=8.0, m_rx=8.0,  lip=3.5, wrinkle=False),
    "disgust":  dict(eye_ry=3.5, brow_inner=-2.0, brow_raise=-1.0, curve=-2.5, m_ry=5.0, m_rx=13.0, lip=0.0, wrinkle=True),
    "calm":     dict(eye_ry=5.0, brow_inner=0.0,  brow_raise=0.0,  curve=0.0,  m_ry=2.5, m_rx=14.0, lip=0.0, wrinkle=False),
}

# shared relaxed pose that every expression curve starts from; apex poses are
# the EXPRESSIONS entries, intensity interpolates between the two
NEUTRAL_POSE = EXPRESSIONS["calm"]
_POSE_KEYS = ("eye_ry", "brow_inner", "brow_raise", "curve", "m_ry", "m_rx", "lip")


def _ellipse(yy, xx, cy, cx, ry, rx):
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _curved_band(yy, xx, cy, cx, ry, rx, curve):
    """Ellipse whose vertical center follows a parabola: negative curve
    lifts the ends (smile), positive curve drops them (frown)."""
    u = (xx - cx) / rx
    mid = cy + curve * (u**2 - 0.5)
    return ((yy - mid) / ry) ** 2 + u**2 <= 1.0


def _segment(yy, xx, y0, x0, y1, x1, thickness):
    vy, vx = y1 - y0, x1 - x0
    norm2 = vy * vy + vx * vx
    t = np.clip(((yy - y0) * vy + (xx - x0) * vx) / max(norm2, 1e-9), 0.0, 1.0)
    dy = yy - (y0 + t * vy)
    dx = xx - (x0 + t * vx)
    return dy * dy + dx * dx <= (thickness / 2.0) ** 2


def class_parameters(class_index: int) -> tuple:
    """(label, parameter dict). Beyond the seven canonical expressions,
    extra classes reuse a template with deterministic geometry offsets."""
    if class_index < len(CLASS_NAMES):
        name = CLASS_NAMES[class_index]
        return name, dict(EXPRESSIONS[name])
    base_name = CLASS_NAMES[class_index % len(CLASS_NAMES)]
    gen = class_index // len(CLASS_NAMES)
    params = dict(EXPRESSIONS[base_name])
    params["m_rx"] = max(6.0, params["m_rx"] - 3.0 * gen)
    params["eye_ry"] = min(7.0, params["eye_ry"] + 0.8 * gen)
    params["curve"] = params["curve"] + 2.0 * gen
    return f"class{class_index}", params


def expression_image(class_index: int, rng=None, noise: float = 0.0,
                     size: int = 120) -> GrayImage:
    """Render one schematic face. `noise` widens the expression-intensity
    spread and scales part-parameter jitter, global similarity jitter, and
    additive pixel noise."""
    if noise < 0:
        raise InvalidInputError("noise must be >= 0")
    _, p = class_parameters(class_index)
    q = size / 120.0
    dy = dx = 0.0
    s = 1.0
    rot = 0.0
    dark = 0.0
    inten = 1.0
    if noise > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        p = dict(p)
        # low-intensity samples of any class approach the neutral pose, so
        # classes overlap near neutral and spread out toward their apexes
        span = min(0.7, 0.45 * noise)
        inten = 1.0 - float(rng.uniform(0.0, span))
        for key in _POSE_KEYS:
            p[key] = NEUTRAL_POSE[key] + inten * (p[key] - NEUTRAL_POSE[key])
        p["eye_ry"] = max(2.0, p["eye_ry"] + rng.normal(0, 0.5 * noise))
        p["brow_inner"] = p["brow_inner"] + rng.normal(0, 1.0 * noise)
        p["brow_raise"] = p["brow_raise"] + rng.normal(0, 1.0 * noise)
        p["curve"] = p["curve"] + rng.normal(0, 1.2 * noise)
        p["m_ry"] = max(2.0, p["m_ry"] + rng.normal(0, 0.6 * noise))
        p["m_rx"] = max(5.0, p["m_rx"] + rng.normal(0, 1.0 * noise))
        dy, dx = rng.normal(0, 2.2 * noise, 2)
        s = 1.0 + float(np.clip(rng.normal(0, 0.035 * noise), -0.12, 0.12))
        rot = float(np.clip(rng.normal(0, 2.8 * noise), -8.0, 8.0))
        dark = float(np.clip(rng.normal(0, 0.03 * noise), -0.08, 0.08))

    def ty(y):  # canonical -> jittered canvas coordinates
        return (60.0 + s * (y - 60.0 + dy)) * q

    def tx(x):
        return (60.0 + s * (x - 60.0 + dx)) * q

    def r(v):  # radii and offsets scale with the similarity factor
        return v * s * q

    canvas = np.full((size, size), BG)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    # nose
    canvas[_segment(yy, xx, ty(52), tx(60), ty(68), tx(60), r(2.0))] = 0.62 + dark
    # brows: inner ends move up for positive brow_inner, whole brow up for raise
    by = 32.0 - p["brow_raise"]
    half = p["brow_inner"] / 2.0
    for outer_x, inner_x in ((25.0, 41.0), (95.0, 79.0)):
        mask = _segment(yy, xx, ty(by + half), tx(outer_x),
                        ty(by - half), tx(inner_x), r(2.4))
        canvas[mask] = 0.35 + dark
    # eyes: outer tips on the reference endpoints (24, 42) and (96, 42)
    for cx in (33.0, 87.0):
        canvas[_ellipse(yy, xx, ty(42.0), tx(cx), r(p["eye_ry"]), r(9.0))] = 0.10 + dark
    # mouth, optionally with a lighter opening inside the lip band
    mouth_cy = 82.0 if p["wrinkle"] else 84.0
    outer = _curved_band(yy, xx, ty(mouth_cy), tx(60.0), r(p["m_ry"]), r(p["m_rx"]), r(p["curve"]))
    canvas[outer] = 0.25 + dark
    if p["lip"] > 0:
        inner = _curved_band(yy, xx, ty(mouth_cy), tx(60.0),
                             r(max(1.0, p["m_ry"] - p["lip"])),
                             r(max(3.0, p["m_rx"] - 3.0)), r(p["curve"]))
        canvas[inner] = 0.50 + dark
    if p["wrinkle"]:
        # wrinkles fade toward skin tone at low intensity like the rest of
        # the pose, otherwise they stay a binary class giveaway
        shade = BG + inten * (0.45 - BG)
        for wy in (64.0, 68.0):
            canvas[_segment(yy, xx, ty(wy), tx(52.0), ty(wy - 2.0), tx(68.0), r(1.8))] = shade + dark

    if noise > 0:
        canvas = canvas + rng.normal(0, 0.035 * noise, canvas.shape)
    img = GrayImage(np.clip(canvas, 0.0, 1.0))
    if rot != 0.0:
        img = rotate_about(img, rot, Point2D(size / 2.0, size / 2.0))
    return img


def synth_dataset(seed: int, per_class: int = 14, classes: int = 7,
                  noise: float = 0.8):
    """(manifest, images) for a deterministic schematic dataset; image i of
    class c is rendered from a single seeded stream, so fixed arguments
    reproduce bit-identical output."""
    if per_class < 1 or classes < 1:
        raise InvalidInputError("per_class and classes must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    images = []
    for c in range(classes):
        label, _ = class_parameters(c)
        for i in range(per_class):
            rows.append((f"{label}_{i:02d}.pgm", label, f"s{i:02d}"))
            images.append(expression_image(c, rng, noise))
    return manifest_from_rows(rows), images


# ---------------------------------------------------------------------------
# detector corpus: face-like planted patterns vs structured clutter
# ---------------------------------------------------------------------------

def face_pattern(side: int, rng, jitter: float = 1.0) -> np.ndarray:
    """Bright oval with a dark eye band and mouth bar on a mid background,
    geometry expressed relative to a 24-pixel design so patterns scale."""
    q = side / 24.0
    j = jitter
    bg = 0.38 + 0.08 * rng.uniform(-1, 1) * j
    canvas = np.full((side, side), bg)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    cy = (12.3 + rng.normal(0, 0.9) * j) * q
    cx = (12.0 + rng.normal(0, 0.9) * j) * q
    face_val = 0.78 + rng.normal(0, 0.05) * j
    canvas[_ellipse(yy, xx, cy, cx, (10.3 + rng.normal(0, 0.6) * j) * q,
                    (8.8 + rng.normal(0, 0.6) * j) * q)] = face_val
    ey = cy / q - 12.3 + (8.0 + rng.normal(0, 0.7) * j)
    eh = max(1.5, 3.0 + rng.normal(0, 0.5) * j)
    ex0 = (cx / q - 12.0 + 5.0 + rng.normal(0, 0.8) * j) * q
    ex1 = (cx / q - 12.0 + 19.0 + rng.normal(0, 0.8) * j) * q
    band = (yy >= ey * q) & (yy < (ey + eh) * q) & (xx >= ex0) & (xx < ex1)
    canvas[band] = 0.16 + rng.normal(0, 0.04) * j
    my = cy / q - 12.3 + (16.0 + rng.normal(0, 0.7) * j)
    mh = max(1.2, 2.5 + rng.normal(0, 0.5) * j)
    mx0 = (cx / q - 12.0 + 8.5 + rng.normal(0, 0.8) * j) * q
    mx1 = (cx / q - 12.0 + 15.5 + rng.normal(0, 0.8) * j) * q
    bar = (yy >= my * q) & (yy < (my + mh) * q) & (xx >= mx0) & (xx < mx1)
    canvas[bar] = 0.22 + rng.normal(0, 0.04) * j
    canvas = canvas + rng.normal(0, 0.035 * j, canvas.shape)
    return np.clip(canvas, 0.0, 1.0)


def face_patch(rng, side: int = 24, jitter: float = 1.0) -> GrayImage:
    return GrayImage(face_pattern(side, rng, jitter))


def _clutter_noise(rng, side, yy, xx):
    return rng.uniform(0.1, 0.9) + rng.normal(0, 0.18, (side, side))


def _clutter_gradient(rng, side, yy, xx):
    theta = rng.uniform(0, 2 * np.pi)
    ramp = (np.cos(theta) * xx + np.sin(theta) * yy) / side
    lo, hi = sorted(rng.uniform(0.05, 0.95, 2))
    canvas = lo + (hi - lo) * (ramp - ramp.min()) / max(float(np.ptp(ramp)), 1e-9)
    return canvas + rng.normal(0, 0.03, canvas.shape)


def _clutter_bars(rng, side, yy, xx):
    canvas = np.full((side, side), rng.uniform(0.2, 0.8))
    for _ in range(int(rng.integers(2, 5))):
        y0, x0 = rng.integers(0, side - 4, 2)
        h, w = rng.integers(3, side // 2, 2)
        canvas[y0:y0 + h, x0:x0 + w] = rng.uniform(0.05, 0.95)
    return canvas + rng.normal(0, 0.03, canvas.shape)


def _clutter_checker(rng, side, yy, xx):
    cell = int(rng.integers(2, 7))
    phase = int(rng.integers(0, 2))
    checker = (yy // cell + xx // cell + phase) % 2
    lo, hi = sorted(rng.uniform(0.05, 0.95, 2))
    return lo + (hi - lo) * checker + rng.normal(0, 0.03, checker.shape)


def _clutter_blobs(rng, side, yy, xx):
    canvas = np.full((side, side), rng.uniform(0.25, 0.75))
    for _ in range(int(rng.integers(2, 4))):
        cy, cx = rng.uniform(4, side - 4, 2)
        ry, rx = rng.uniform(2, side / 2.5, 2)
        canvas[_ellipse(yy, xx, cy, cx, ry, rx)] = rng.uniform(0.05, 0.95)
    return canvas + rng.normal(0, 0.03, canvas.shape)


def _clutter_smooth(rng, side, yy, xx):
    base = gaussian_filter(rng.normal(0.0, 1.0, (side, side)), sigma=rng.uniform(2, 6))
    sd = base.std()
    canvas = rng.uniform(0.35, 0.65) + 0.15 * (base / sd if sd > 0 else base)
    return canvas + rng.normal(0, 0.02, canvas.shape)


def _clutter_oval(rng, side, yy, xx):
    """Bright oval with the interior bands missing or misplaced: band rows
    are sampled well outside the positive jitter distribution (positive
    band rows concentrate near 8 +- 1.1 on the 24-pixel design)."""
    q = side / 24.0
    canvas = np.full((side, side), 0.38 + 0.06 * rng.uniform(-1, 1))
    canvas[_ellipse(yy, xx, (12.3 + rng.normal(0, 0.6)) * q,
                    (12.0 + rng.normal(0, 0.6)) * q,
                    (10.3 + rng.normal(0, 0.5)) * q,
                    (8.8 + rng.normal(0, 0.5)) * q)] = 0.78 + rng.normal(0, 0.05)
    if rng.integers(0, 2):
        by = rng.uniform(1.5, 4.3) * q if rng.integers(0, 2) else rng.uniform(12.5, 15.0) * q
        bh = max(1.0, rng.uniform(2, 3.5) * q)
        band = (yy >= by) & (yy < by + bh) & (xx >= 5 * q) & (xx < 19 * q)
        canvas[band] = 0.16 + rng.normal(0, 0.04)
        my = rng.uniform(19.5, 21.5) * q
        bar = (yy >= my) & (yy < my + 2.5 * q) & (xx >= 8.5 * q) & (xx < 15.5 * q)
        canvas[bar] = 0.22 + rng.normal(0, 0.03)
    return canvas + rng.normal(0, 0.025, canvas.shape)


def _clutter_scene_crop(rng, side, yy, xx):
    big = _scene_background(rng, side * 2)
    y0, x0 = rng.integers(0, side, 2)
    return big[y0:y0 + side, x0:x0 + side].copy()


def _scene_window_patch(rng, side: int = 24) -> GrayImage:
    """A sliding-window view of a clutter scene: random window side from
    the detection scale range, resized down to the base window."""
    scene = _scene_background(rng, 120)
    win = int(rng.integers(side, 121))
    y0 = int(rng.integers(0, 120 - win + 1))
    x0 = int(rng.integers(0, 120 - win + 1))
    crop = GrayImage(scene[y0:y0 + win, x0:x0 + win].copy())
    return crop if win == side else resize_bilinear(crop, side, side)


def _noise_window_patch(rng, side: int = 24) -> GrayImage:
    """A sliding-window view of pure pixel noise: window side drawn from the
    detection scale range, resized to the base window (large windows land
    near flat gray, the view a detector gets over featureless regions)."""
    win = int(rng.integers(side, 201))
    field = np.clip(rng.normal(0.5, 0.18, (win, win)), 0.0, 1.0)
    crop = GrayImage(field)
    return crop if win == side else resize_bilinear(crop, side, side)


def _clutter_offscale_face(rng, side, yy, xx):
    """A window over a face at the wrong scale or offset: crop of a pattern
    rendered 1.6x to 3x larger than the window."""
    big_side = int(rng.integers(int(side * 1.6), side * 3 + 1))
    big = face_pattern(big_side, rng)
    y0 = int(rng.integers(0, big_side - side + 1))
    x0 = int(rng.integers(0, big_side - side + 1))
    return big[y0:y0 + side, x0:x0 + side].copy()


def _clutter_small_face(rng, side, yy, xx):
    """A face occupying only part of the window, scene fill around it."""
    fs = int(rng.integers(max(6, side // 3), max(7, (2 * side) // 3)))
    canvas = _scene_background(rng, side)
    y0 = int(rng.integers(0, side - fs + 1))
    x0 = int(rng.integers(0, side - fs + 1))
    canvas[y0:y0 + fs, x0:x0 + fs] = face_pattern(fs, rng)
    return canvas


_CLUTTER_KINDS = (
    _clutter_noise, _clutter_gradient, _clutter_bars, _clutter_checker,
    _clutter_blobs, _clutter_smooth, _clutter_oval, _clutter_scene_crop,
    _clutter_offscale_face, _clutter_small_face,
)


def clutter_patch(rng, side: int = 24) -> GrayImage:
    """Structured non-face content: textures, gradients, smooth scene-like
    fields, and face-confusable distractors (misplaced bands, off-scale or
    partial face crops) that force multi-feature cascade stages."""
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    kind = int(rng.integers(0, len(_CLUTTER_KINDS)))
    canvas = _CLUTTER_KINDS[kind](rng, side, yy, xx)
    return GrayImage(np.clip(canvas, 0.0, 1.0))


def _drawn_negatives(rng, n: int):
    """Scene and noise windows at detection scales, off-scale and partial
    face crops, textured clutter."""
    negatives = []
    yy, xx = np.mgrid[0:24, 0:24].astype(np.float64)
    for _ in range(n):
        r = rng.uniform()
        if r < 0.32:
            negatives.append(_scene_window_patch(rng))
        elif r < 0.50:
            negatives.append(_noise_window_patch(rng))
        elif r < 0.63:
            negatives.append(GrayImage(np.clip(_clutter_offscale_face(rng, 24, yy, xx), 0, 1)))
        elif r < 0.72:
            negatives.append(GrayImage(np.clip(_clutter_small_face(rng, 24, yy, xx), 0, 1)))
        else:
            negatives.append(clutter_patch(rng))
    return negatives


_MINING_TARGETS = (
    ((0.999, 0.40), (0.999, 0.10), (0.998, 0.02)),
    ((0.999, 0.40), (0.999, 0.10), (0.999, 0.02), (0.998, 0.004)),
    ((0.999, 0.40), (0.999, 0.12), (0.999, 0.03), (0.998, 0.008), (0.998, 0.002)),
)


def _mined_negatives(rng, positives, base_negatives, quota: int,
                     rounds: int = 3):
    """Hard negatives: windows of fresh scenes that fool a provisional
    cascade, cropped and resized to 24x24. Each round retrains the
    provisional detector with the negatives mined so far, so later rounds
    surface progressively harder scene content. Planted-face scenes
    contribute only windows off the true face."""
    from . import facedetect as fd

    pool = list(base_negatives)
    hard = []
    per_round = max(1, quota // max(rounds, 1))
    for rnd in range(rounds):
        if len(hard) >= quota:
            break
        targets = _MINING_TARGETS[min(rnd, len(_MINING_TARGETS) - 1)]
        provisional = fd.cascade_build(positives, pool, stage_targets=targets)
        goal = quota if rnd == rounds - 1 else (rnd + 1) * per_round
        fresh = []
        for _ in range(80):
            if len(hard) + len(fresh) >= goal:
                break
            seed = int(rng.integers(0, 2**31))
            u = rng.uniform()
            if u < 0.30:
                scene = GrayImage(_scene_background(np.random.default_rng(seed), 200))
                truth = None
            elif u < 0.50:
                scene = noise_scene(seed)
                truth = None
            elif u < 0.65:
                scene, truth = planted_noise_scene(seed)
            else:
                scene, truth = scene_with_face(seed)
            taken = 0
            for box in fd.sweep_windows(scene, provisional):
                if truth is not None and box.iou(truth) > 0.35:
                    continue
                crop = GrayImage(scene.pixels[box.y:box.y + box.side,
                                              box.x:box.x + box.side].copy())
                if box.side != 24:
                    crop = resize_bilinear(crop, 24, 24)
                fresh.append(crop)
                taken += 1
                if taken >= 30:
                    break
        hard.extend(fresh)
        pool.extend(fresh)
    return hard[:quota]


def detector_corpus(seed: int, n_pos: int = 150, n_neg: int = 2000,
                    mined_fraction: float = 0.5):
    """(positives, negatives) lists of 24x24 crops from one seeded stream.

    Negatives combine drawn content (scene windows at detection scales,
    off-scale and partial face crops, textured clutter) with hard negatives
    mined by sweeping a provisional cascade over fresh scenes; the mix
    keeps later cascade stages non-trivial and suppresses scene-level
    false alarms.
    """
    if n_pos < 1 or n_neg < 1:
        raise InvalidInputError("corpus sizes must be >= 1")
    if not 0.0 <= mined_fraction < 1.0:
        raise InvalidInputError("mined_fraction must be in [0, 1)")
    rng = np.random.default_rng(seed)
    positives = [face_patch(rng) for _ in range(n_pos)]
    quota = int(round(n_neg * mined_fraction))
    negatives = _drawn_negatives(rng, n_neg - quota)
    if quota:
        mined = _mined_negatives(rng, positives, negatives, quota)
        negatives = negatives + mined
        if len(mined) < quota:
            negatives += _drawn_negatives(rng, quota - len(mined))
    return positives, negatives


def _scene_background(rng, size: int) -> np.ndarray:
    base = gaussian_filter(rng.normal(0.0, 1.0, (size, size)), sigma=7.0)
    sd = base.std()
    canvas = 0.5 + 0.13 * (base / sd if sd > 0 else base)
    lo = max(2, size // 8)
    hi = max(size // 3, lo + 1)
    for _ in range(int(rng.integers(3, 7))):
        y0, x0 = rng.integers(0, max(size - lo, 1), 2)
        h, w = rng.integers(lo, hi, 2)
        canvas[y0:y0 + h, x0:x0 + w] = rng.uniform(0.15, 0.85)
    canvas = canvas + rng.normal(0, 0.02, canvas.shape)
    return np.clip(canvas, 0.0, 1.0)


def clutter_scene(seed: int, size: int = 200) -> GrayImage:
    return GrayImage(_scene_background(np.random.default_rng(seed), size))


def scene_with_face(seed: int, size: int = 200, side_range=(40, 80)):
    """(scene, truth box): one face pattern planted into structured clutter."""
    rng = np.random.default_rng(seed)
    canvas = _scene_background(rng, size)
    lo, hi = side_range
    side = int(rng.integers(lo, hi + 1))
    y = int(rng.integers(0, size - side + 1))
    x = int(rng.integers(0, size - side + 1))
    canvas[y:y + side, x:x + side] = face_pattern(side, rng)
    return GrayImage(canvas), DetectionBox(x, y, side)


def noise_scene(seed: int, size: int = 200) -> GrayImage:
    """Pure pixel-noise image (no structure at window scale)."""
    rng = np.random.default_rng(seed)
    return GrayImage(np.clip(rng.normal(0.5, 0.18, (size, size)), 0.0, 1.0))


def planted_noise_scene(seed: int, size: int = 200, side_range=(40, 80)):
    """(scene, truth box): one face pattern planted into pixel noise."""
    rng = np.random.default_rng(seed)
    canvas = np.clip(rng.normal(0.5, 0.18, (size, size)), 0.0, 1.0)
    lo, hi = side_range
    side = int(rng.integers(lo, hi + 1))
    y = int(rng.integers(0, size - side + 1))
    x = int(rng.integers(0, size - side + 1))
    canvas[y:y + side, x:x + side] = face_pattern(side, rng)
    return GrayImage(canvas), DetectionBox(x, y, side)
