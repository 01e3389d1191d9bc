"""QR decoding from a raster: finders, affine sampling, and the decode chain."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DecodeError, NotFoundError, StageError
from ..raster import Image, histogram, otsu_threshold, binarize
from .gf import rs_decode
from .matrix import (
    QrMatrix,
    alignment_centers,
    decode_format_info,
    function_modules,
    extract_codewords,
    unmask,
)
from .segments import SegmentData, parse_segments
from .tables import MAX_VERSION, MIN_VERSION, block_spec, symbol_size

FINDER_RATIO = np.array([1, 1, 3, 1, 1], dtype=np.float64)
RATIO_TOL = 0.5
MIN_CORE_MODULES = 1.5
MAX_CANDIDATES = 12
MAX_CORNER_MISMATCHES = 8


class UnsupportedVersionError(DecodeError):
    pass


@dataclass(frozen=True)
class FinderPattern:
    x: float
    y: float
    module: float
    hits: int = 1


@dataclass(frozen=True)
class FinderTriple:
    top_left: FinderPattern
    top_right: FinderPattern
    bottom_left: FinderPattern

    @property
    def module(self) -> float:
        return (self.top_left.module + self.top_right.module + self.bottom_left.module) / 3

    def centers(self):
        return [(p.x, p.y) for p in (self.top_left, self.top_right, self.bottom_left)]


def _runs(line: np.ndarray):
    """(starts, lengths, values) of equal-value runs."""
    edges = np.flatnonzero(line[1:] != line[:-1]) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [line.size])))
    return starts, lengths, line[starts]


def _ratio_ok(counts) -> bool:
    counts = np.asarray(counts, dtype=np.float64)
    unit = counts.sum() / 7.0
    return unit > 0 and bool(np.all(np.abs(counts - FINDER_RATIO * unit) < RATIO_TOL * FINDER_RATIO * unit))


def _row_candidates(line: np.ndarray):
    """Centers (x, total width) of 1:1:3:1:1 dark-light-dark-light-dark runs."""
    starts, lengths, vals = _runs(line)
    if lengths.size < 5:
        return []
    win = np.lib.stride_tricks.sliding_window_view(lengths, 5).astype(np.float64)
    first_dark = vals[: win.shape[0]] == 1
    unit = win.sum(axis=1, keepdims=True) / 7.0
    ok = np.all(np.abs(win - FINDER_RATIO * unit) < RATIO_TOL * FINDER_RATIO * unit, axis=1)
    ok &= first_dark
    out = []
    for k in np.flatnonzero(ok):
        cx = starts[k + 2] + lengths[k + 2] / 2.0
        out.append((float(cx), float(win[k].sum())))
    return out


def _cross_check(line: np.ndarray, pos: int, expected_total: float):
    """Center of the 1:1:3:1:1 pattern through ``line[pos]`` (which must be dark)."""
    n = line.size
    if not 0 <= pos < n or line[pos] != 1:
        return None
    counts = [0] * 5
    i = pos
    while i >= 0 and line[i] == 1:
        counts[2] += 1
        i -= 1
    for slot, colour in ((1, 0), (0, 1)):
        while i >= 0 and line[i] == colour:
            counts[slot] += 1
            i -= 1
        if counts[slot] == 0:
            return None
    j = pos + 1
    while j < n and line[j] == 1:
        counts[2] += 1
        j += 1
    for slot, colour in ((3, 0), (4, 1)):
        while j < n and line[j] == colour:
            counts[slot] += 1
            j += 1
        if counts[slot] == 0:
            return None
    total = sum(counts)
    if abs(total - expected_total) >= expected_total:
        return None
    if not _ratio_ok(counts):
        return None
    center_start = i + 1 + counts[0] + counts[1]
    return center_start + counts[2] / 2.0, total


def finder_candidates(bitmap: np.ndarray) -> list[FinderPattern]:
    """Every cross-checked 1:1:3:1:1 center, clustered, with its hit count."""
    bm = (np.asarray(bitmap) != 0).astype(np.uint8)
    h, w = bm.shape
    found: list[list[float]] = []  # [sum x, sum y, sum module, hits]
    for y in range(h):
        for cx, total in _row_candidates(bm[y]):
            col = int(cx)
            vert = _cross_check(bm[:, col], y, total)
            if vert is None:
                continue
            cy, vtotal = vert
            horiz = _cross_check(bm[int(cy)], col, total)
            if horiz is None:
                continue
            cx2, htotal = horiz
            module = (htotal + vtotal) / 14.0
            for f in found:
                n = f[3]
                if math.hypot(f[0] / n - cx2, f[1] / n - cy) < 2 * module and abs(
                    f[2] / n - module
                ) < 0.5 * module:
                    f[0] += cx2
                    f[1] += cy
                    f[2] += module
                    f[3] += 1
                    break
            else:
                found.append([cx2, cy, module, 1])
    return [FinderPattern(f[0] / f[3], f[1] / f[3], f[2] / f[3], int(f[3])) for f in found]


def find_finder_patterns(bitmap: np.ndarray) -> FinderTriple:
    """Locate exactly three finder patterns, ordered TL / TR / BL."""
    pats = finder_candidates(bitmap)
    # a true finder is hit on every row through its 3-module core; look-alikes
    # in the data region usually have a 1-module core
    pats = [p for p in pats if p.hits >= max(2, MIN_CORE_MODULES * p.module)]
    if len(pats) == 3:
        return order_finders(pats)
    if len(pats) > 3 and len(pats) <= MAX_CANDIDATES:
        # data regions can mimic a finder; keep the one triple whose sampled
        # finder corners look like real finders
        good = [t for t in map(order_finders, itertools.combinations(pats, 3)) if _plausible(t)]
        good = [t for t in good if _corner_mismatches(t, bitmap) <= MAX_CORNER_MISMATCHES]
        if len(good) == 1:
            return good[0]
    raise NotFoundError(f"expected 3 finder patterns, found {len(pats)}")


def _plausible(t: FinderTriple) -> bool:
    tl, tr, bl = t.top_left, t.top_right, t.bottom_left
    ax, ay = tr.x - tl.x, tr.y - tl.y
    bx, by = bl.x - tl.x, bl.y - tl.y
    a, b = math.hypot(ax, ay), math.hypot(bx, by)
    if min(a, b) == 0 or max(a, b) > 1.2 * min(a, b):
        return False
    if abs(ax * bx + ay * by) > 0.26 * a * b:
        return False
    mods = [p.module for p in (tl, tr, bl)]
    return max(mods) <= 1.3 * min(mods) and MIN_VERSION <= estimate_version(t) <= MAX_VERSION


def _corner_mismatches(t: FinderTriple, bitmap: np.ndarray) -> int:
    """Disagreements between sampled and expected finder + separator modules."""
    v = estimate_version(t)
    n = symbol_size(v)
    got = sample_modules(np.asarray(bitmap), t, v).modules
    want = function_modules(v)
    errs = 0
    for r0, c0 in ((0, 0), (0, n - 8), (n - 8, 0)):
        errs += int(np.sum(got[r0 : r0 + 8, c0 : c0 + 8] != want[r0 : r0 + 8, c0 : c0 + 8]))
    return errs


def order_finders(pats) -> FinderTriple:
    """Top-left is the vertex opposite the longest side; then orient by cross product."""
    a, b, c = pats

    def d2(p, q):
        return (p.x - q.x) ** 2 + (p.y - q.y) ** 2

    sides = [(d2(b, c), a, b, c), (d2(a, c), b, a, c), (d2(a, b), c, a, b)]
    _, tl, p, q = max(sides, key=lambda s: s[0])
    cross = (p.x - tl.x) * (q.y - tl.y) - (p.y - tl.y) * (q.x - tl.x)
    if cross < 0:
        p, q = q, p
    return FinderTriple(tl, p, q)


def estimate_version(finders: FinderTriple) -> int:
    tl, tr, bl = finders.top_left, finders.top_right, finders.bottom_left
    dist = (math.hypot(tr.x - tl.x, tr.y - tl.y) + math.hypot(bl.x - tl.x, bl.y - tl.y)) / 2
    return int(round((dist / finders.module - 10) / 4))


def _affine(finders: FinderTriple, size: int) -> np.ndarray:
    """2x3 map from module coords (col, row) to pixel coords (x, y)."""
    src = np.array([[3.5, 3.5, 1], [size - 3.5, 3.5, 1], [3.5, size - 3.5, 1]])
    dst = np.array(finders.centers())
    return np.linalg.solve(src, dst).T


def sample_modules(bitmap: np.ndarray, finders: FinderTriple, version: int) -> QrMatrix:
    n = symbol_size(version)
    A = _affine(finders, n)
    rows, cols = np.indices((n, n), dtype=np.float64)
    pts = np.stack([cols.ravel() + 0.5, rows.ravel() + 0.5, np.ones(n * n)])
    x, y = A @ pts
    h, w = bitmap.shape
    xi = np.clip(np.floor(x).astype(int), 0, w - 1)
    yi = np.clip(np.floor(y).astype(int), 0, h - 1)
    return QrMatrix(version, (bitmap[yi, xi] != 0).reshape(n, n))


_ALIGN_TEMPLATE = np.array(
    [[max(abs(r), abs(c)) != 1 for c in range(-2, 3)] for r in range(-2, 3)], dtype=bool
)


def alignment_mismatches(m: QrMatrix) -> int:
    errs = 0
    for r, c in alignment_centers(m.version):
        errs += int(np.sum(m.modules[r - 2 : r + 3, c - 2 : c + 3] != _ALIGN_TEMPLATE))
    return errs


def sample_grid(bitmap: np.ndarray, finders: FinderTriple, module_px: float | None = None) -> QrMatrix:
    """Sample the module grid; alignment patterns arbitrate a +-1 version estimate."""
    v = estimate_version(finders)
    if not MIN_VERSION <= v <= MAX_VERSION:
        raise UnsupportedVersionError(f"estimated version {v} outside {MIN_VERSION}..{MAX_VERSION}")
    best = None
    for cand in (v, v - 1, v + 1):
        if not MIN_VERSION <= cand <= MAX_VERSION:
            continue
        m = sample_modules(bitmap, finders, cand)
        if cand == 1 or alignment_mismatches(m) <= 6:
            return m
        if best is None:
            best = m
    return best


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except (DecodeError, NotFoundError, ValueError) as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class QrResult:
    data: SegmentData
    version: int
    ec_level: str
    mask_id: int
    corrections: int


def decode_matrix(m: QrMatrix) -> QrResult:
    fmt = _stage("format", decode_format_info, m)
    clean = unmask(m, fmt.mask_id)
    blocks = _stage("codewords", extract_codewords, clean, fmt.ec_level)
    spec = block_spec(m.version, fmt.ec_level)
    data = bytearray()
    fixed = 0
    for block in blocks:
        payload, n = _stage("reed-solomon", rs_decode, block, spec.ec_per_block)
        data += payload
        fixed += n
    seg = _stage("segments", parse_segments, bytes(data), m.version)
    return QrResult(seg, m.version, fmt.ec_level, fmt.mask_id, fixed)


def decode_qr(img: Image) -> QrResult:
    bitmap = _stage("binarize", lambda: binarize(img, otsu_threshold(histogram(img)), True))
    finders = _stage("finder", find_finder_patterns, bitmap)
    m = _stage("sample", sample_grid, bitmap, finders)
    return decode_matrix(m)


def decode_qr_image(img: Image) -> SegmentData:
    return decode_qr(img).data
