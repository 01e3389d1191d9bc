"""Fixture builders shared by the unit and acceptance suites."""
from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from sanip.barcode import compute_check_digit, encode_ean13
from sanip.dataset import DEFAULT_CLASSES, AnnotationRecord, dump_class_list, ClassList, emit_yolo_annotation
from sanip.raster import Image, write_image


def random_ean13(rnd: random.Random) -> str:
    body = "".join(str(rnd.randrange(10)) for _ in range(12))
    return body + str(compute_check_digit(body))


def mod10_oracle(digits12: str) -> int:
    """Check digit computed the long way: odd positions x1, even positions x3."""
    total = 0
    for pos, ch in enumerate(digits12, start=1):
        total += int(ch) * (3 if pos % 2 == 0 else 1)
    return (10 - total % 10) % 10


def random_record(rnd: random.Random, n_classes: int) -> AnnotationRecord:
    w = rnd.uniform(0.01, 1.0)
    h = rnd.uniform(0.01, 1.0)
    cx = rnd.uniform(w / 2, 1 - w / 2)
    cy = rnd.uniform(h / 2, 1 - h / 2)
    # quantize so emission is exact
    q = lambda v: round(v, 6)
    return AnnotationRecord(rnd.randrange(n_classes), q(cx), q(cy), q(w), q(h))


def write_labelimg_dataset(root: Path, per_class: int = 30, seed: int = 7) -> dict:
    """``per_class`` images per class, each with one or two boxes of its class."""
    rnd = random.Random(seed)
    root.mkdir(parents=True, exist_ok=True)
    classes = ClassList(DEFAULT_CLASSES)
    (root / "classes.txt").write_text(dump_class_list(classes), encoding="utf-8")
    tiny = Image.from_array(np.full((4, 4), 200, np.uint8))
    for cid, name in enumerate(classes):
        for k in range(per_class):
            stem = f"{name.lower().replace('-', '')}_{k:03d}"
            write_image(root / f"{stem}.pgm", tiny)
            recs = [random_record(rnd, 1) for _ in range(rnd.randint(1, 2))]
            recs = [AnnotationRecord(cid, r.cx, r.cy, r.w, r.h) for r in recs]
            (root / f"{stem}.txt").write_text(emit_yolo_annotation(recs) + "\n", encoding="utf-8")
    return {name: per_class for name in classes}


def blank(width=400, height=60, value=255) -> Image:
    return Image.from_array(np.full((height, width), value, np.uint8))


def write_barcode_sequence(root: Path, digits="9789352607990", frames=10, present=range(2, 8)):
    """Frames 0..frames-1; the symbol is visible on the ``present`` indices."""
    root.mkdir(parents=True, exist_ok=True)
    sym = encode_ean13(digits, module_px=3)
    for i in range(frames):
        img = sym if i in present else blank(sym.width, sym.height)
        write_image(root / f"frame_{i:03d}.pgm", img)
    return root


def pairwise_iou(boxes: np.ndarray) -> np.ndarray:
    """IoU matrix for (N, 4) corner boxes, written independently of sanip.dataset.iou."""
    x0, y0, x1, y1 = (boxes[:, k] for k in range(4))
    area = (x1 - x0) * (y1 - y0)
    iw = np.clip(np.minimum(x1[:, None], x1[None]) - np.maximum(x0[:, None], x0[None]), 0, None)
    ih = np.clip(np.minimum(y1[:, None], y1[None]) - np.maximum(y0[:, None], y0[None]), 0, None)
    inter = iw * ih
    union = area[:, None] + area[None] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / union, 0.0)
    return out


def reference_nms(boxes, scores, class_ids, thr):
    """Quadratic definition: walk the priority order over the full IoU matrix.

    Returns kept indices in output order.
    """
    n = len(scores)
    order = sorted(range(n), key=lambda i: (-scores[i], class_ids[i], i))
    m = pairwise_iou(np.asarray(boxes, dtype=np.float64).reshape(-1, 4))
    alive = [True] * n
    kept = []
    for a in order:
        if not alive[a]:
            continue
        kept.append(a)
        for b in range(n):
            if b != a and alive[b] and class_ids[b] == class_ids[a] and m[a, b] > thr:
                # only lower-priority boxes can still be alive and unvisited
                if order.index(b) > order.index(a):
                    alive[b] = False
    return kept


def random_nms_instance(rs: np.random.Generator, n: int, n_classes: int = 3):
    xy = rs.uniform(0, 80, (n, 2))
    wh = rs.uniform(1, 40, (n, 2))
    boxes = np.concatenate([xy, xy + wh], axis=1)
    # coarse scores so ties occur
    scores = rs.integers(1, 20, n) / 20.0
    cls = rs.integers(0, n_classes, n)
    return boxes, scores, cls


def jittered_barcode(digits: str, module_px: int, rnd: random.Random, rows: int = 4) -> Image:
    """Every run width moved independently by -1, 0 or +1 px."""
    from sanip.barcode import _widths, ean13_modules, render_runs

    runs = [w * module_px + rnd.choice((-1, 0, 1)) for w in _widths(ean13_modules(digits))]
    quiet = 10 * module_px
    return render_runs([quiet] + runs + [quiet], False, rows)


def bfs_components(bitmap):
    """Plain 8-connected flood fill; returns sorted (area, xmin, ymin, xmax, ymax)."""
    bm = np.asarray(bitmap) != 0
    h, w = bm.shape
    seen = np.zeros_like(bm)
    out = []
    for r in range(h):
        for c in range(w):
            if not bm[r, c] or seen[r, c]:
                continue
            stack = [(r, c)]
            seen[r, c] = True
            pts = []
            while stack:
                y, x = stack.pop()
                pts.append((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and bm[yy, xx] and not seen[yy, xx]:
                            seen[yy, xx] = True
                            stack.append((yy, xx))
            ys = [p[0] for p in pts]
            xs = [p[1] for p in pts]
            out.append((len(pts), min(xs), min(ys), max(xs) + 1, max(ys) + 1))
    return sorted(out)


def receipt_image(rows=5, seed=0, width=360, glyph_h=20):
    """Rows of glyph-sized dark blocks on white; returns (image, per-row glyph counts)."""
    rnd = random.Random(seed)
    px = np.full((rows * 40 + 20, width), 255, np.uint8)
    counts = []
    for k in range(rows):
        top = 15 + k * 40
        x = 10
        n = 0
        while x < width - 30:
            gw = rnd.randint(6, 12)
            px[top : top + glyph_h, x : x + gw] = 0
            n += 1
            x += gw + rnd.randint(2, 5)
            if rnd.random() < 0.15:
                x += 8  # word space, still within the grouping gap
        counts.append(n)
    return Image.from_array(px), counts
