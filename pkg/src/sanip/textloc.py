"""Text-region localization and EXIT-sign template matching.

Connected components over an Otsu bitmap stand in for MSER; recognition of
the located lines is delegated to an external OCR command.
"""
from __future__ import annotations

import hashlib
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from ._exit_template import EXIT_ROWS, EXIT_SHA256
from .dataset import PixelBox
from .errors import ConfigError, SanipError, UnavailableError
from .raster import Image, binarize, dump_pnm, histogram, otsu_threshold

EXIT_SCALES = (0.5, 0.625, 0.78, 1.0, 1.25, 1.56, 2.0)
EXIT_THRESHOLD = 0.70

MIN_AREA = 15
MAX_AREA_FRAC = 0.05
MIN_HEIGHT = 8
MAX_HEIGHT_FRAC = 0.6
MIN_ASPECT, MAX_ASPECT = 0.2, 8.0
LINE_OVERLAP = 0.5
LINE_GAP_WIDTHS = 2.0

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class ConnectedComponent:
    bbox: PixelBox
    area: int
    centroid: tuple

    @property
    def width(self) -> float:
        return self.bbox.width

    @property
    def height(self) -> float:
        return self.bbox.height


@dataclass(frozen=True)
class TextLine:
    bbox: PixelBox
    members: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class MatchResult:
    location: PixelBox
    score: float
    scale: float


def connected_components(bitmap) -> list[ConnectedComponent]:
    """8-connected ink components, ordered by their first pixel in raster order.

    Boxes are in pixel-edge coordinates (a single pixel at (r, c) spans
    c..c+1, r..r+1); centroids are means of pixel centers.
    """
    bm = np.asarray(bitmap) != 0
    labels, n = ndimage.label(bm, structure=_EIGHT)
    if n == 0:
        return []
    idx = np.arange(1, n + 1)
    areas = ndimage.sum_labels(np.ones_like(labels), labels, idx)
    rows, cols = np.indices(bm.shape)
    cy = ndimage.sum_labels(rows, labels, idx) / areas + 0.5
    cx = ndimage.sum_labels(cols, labels, idx) / areas + 0.5
    # ndimage numbers labels in raster order already; sort defensively
    first = ndimage.minimum(rows * bm.shape[1] + cols, labels, idx)
    slices = ndimage.find_objects(labels)
    out = []
    for k in np.argsort(first, kind="stable"):
        sl = slices[k]
        out.append(
            ConnectedComponent(
                PixelBox(float(sl[1].start), float(sl[0].start), float(sl[1].stop), float(sl[0].stop)),
                int(areas[k]),
                (float(cx[k]), float(cy[k])),
            )
        )
    return out


def filter_char_candidates(comps, img_w: int, img_h: int) -> list[ConnectedComponent]:
    max_area = MAX_AREA_FRAC * img_w * img_h
    max_h = MAX_HEIGHT_FRAC * img_h
    out = []
    for c in comps:
        if not MIN_AREA <= c.area <= max_area:
            continue
        if not MIN_HEIGHT <= c.height <= max_h:
            continue
        if not MIN_ASPECT <= c.height / c.width <= MAX_ASPECT:
            continue
        out.append(c)
    return out


def _same_line(a: ConnectedComponent, b: ConnectedComponent, max_gap: float) -> bool:
    overlap = min(a.bbox.ymax, b.bbox.ymax) - max(a.bbox.ymin, b.bbox.ymin)
    if overlap < LINE_OVERLAP * min(a.height, b.height):
        return False
    gap = max(a.bbox.xmin, b.bbox.xmin) - min(a.bbox.xmax, b.bbox.xmax)
    return gap <= max_gap


def _member_key(c: ConnectedComponent):
    return (c.centroid[0], c.centroid[1], c.bbox.as_tuple(), c.area)


def group_into_lines(comps) -> list[TextLine]:
    """Transitive grouping by vertical overlap and bounded horizontal gap."""
    comps = sorted(comps, key=_member_key)
    n = len(comps)
    if n == 0:
        return []
    max_gap = LINE_GAP_WIDTHS * float(np.median([c.width for c in comps]))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _same_line(comps[i], comps[j], max_gap):
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(comps[i])
    lines = []
    for members in groups.values():
        members.sort(key=_member_key)
        box = members[0].bbox
        for m in members[1:]:
            box = box.union(m.bbox)
        lines.append(TextLine(box, tuple(members)))
    lines.sort(key=lambda ln: (ln.bbox.ymin, ln.bbox.xmin, ln.bbox.ymax, ln.bbox.xmax))
    return lines


def locate_text_lines(img: Image) -> list[TextLine]:
    """Dark-on-light text lines of ``img``."""
    bm = binarize(img, otsu_threshold(histogram(img)), dark_is_ink=True)
    comps = filter_char_candidates(connected_components(bm), img.width, img.height)
    return group_into_lines(comps)


def resize_nearest(arr: np.ndarray, scale: float) -> np.ndarray:
    h, w = arr.shape
    nh, nw = max(1, int(round(h * scale))), max(1, int(round(w * scale)))
    rows = np.minimum((np.arange(nh) / scale).astype(int), h - 1)
    cols = np.minimum((np.arange(nw) / scale).astype(int), w - 1)
    return arr[np.ix_(rows, cols)]


def ncc_map(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Zero-mean NCC at every valid offset; zero-variance windows score 0."""
    img = np.asarray(image, dtype=np.float64)
    tpl = np.asarray(template, dtype=np.float64)
    th, tw = tpl.shape
    n = th * tw
    tz = tpl - tpl.mean()
    tnorm = float(np.sqrt(np.sum(tz * tz)))
    oh, ow = img.shape[0] - th + 1, img.shape[1] - tw + 1
    if tnorm == 0:
        return np.zeros((oh, ow))
    num = fftconvolve(img, tz[::-1, ::-1], mode="valid")
    if np.issubdtype(np.asarray(image).dtype, np.integer):
        # exact integer window statistics keep the zero-variance rule exact
        a = np.asarray(image, dtype=np.int64)
    else:
        a = img - img.mean()
    s1 = _window_sums(a, th, tw)
    s2 = _window_sums(a * a, th, tw)
    var_n = n * s2 - s1 * s1  # = n * sum of squared deviations
    if a.dtype.kind == "f":
        var_n[var_n <= 1e-9 * n * n * max(1.0, float(np.max(a * a)))] = 0
    out = np.zeros((oh, ow))
    ok = var_n > 0
    out[ok] = num[ok] / (np.sqrt(var_n[ok] / n) * tnorm)
    return np.clip(out, -1.0, 1.0)


def _window_sums(a: np.ndarray, h: int, w: int) -> np.ndarray:
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=a.dtype)
    c[1:, 1:] = a.cumsum(0).cumsum(1)
    return c[h:, w:] - c[:-h, w:] - c[h:, :-w] + c[:-h, :-w]


def ncc_match(img, template, scales=(1.0,)) -> MatchResult:
    """Best NCC score over offsets and nearest-neighbour template scales.

    Ties go to the smaller scale, then the top-most, left-most offset.
    """
    px = img.pixels if isinstance(img, Image) else np.asarray(img)
    tpl = template.pixels if isinstance(template, Image) else np.asarray(template)
    best = None
    for s in sorted(scales):
        t = resize_nearest(tpl, s)
        if t.shape[0] > px.shape[0] or t.shape[1] > px.shape[1]:
            continue
        scores = ncc_map(px, t)
        k = int(np.argmax(scores))
        r, c = divmod(k, scores.shape[1])
        score = float(scores[r, c])
        if best is None or score > best.score:
            best = MatchResult(
                PixelBox(float(c), float(r), float(c + t.shape[1]), float(r + t.shape[0])), score, s
            )
    if best is None:
        raise ConfigError("template larger than the image at every scale")
    return best


def exit_template() -> np.ndarray:
    """The built-in EXIT word as a {0,1} array (1 = ink)."""
    digest = hashlib.sha256("\n".join(EXIT_ROWS).encode("ascii")).hexdigest()
    if digest != EXIT_SHA256:
        raise SanipError("EXIT template fixture failed its checksum")
    return np.array([[ch == "#" for ch in row] for row in EXIT_ROWS], dtype=np.uint8)


def render_exit(scale: float = 1.0, ink: int = 0, paper: int = 255) -> np.ndarray:
    t = resize_nearest(exit_template(), scale)
    return np.where(t == 1, ink, paper).astype(np.uint8)


def detect_exit_sign(
    img: Image, scales=EXIT_SCALES, threshold: float = EXIT_THRESHOLD
) -> MatchResult | None:
    """Match the EXIT template against both binarization polarities."""
    t = otsu_threshold(histogram(img))
    tpl = exit_template()
    best = None
    for dark_is_ink in (True, False):
        bm = binarize(img, t, dark_is_ink)
        try:
            m = ncc_match(bm, tpl, scales)
        except ConfigError:
            return None
        if best is None or m.score > best.score:
            best = m
    return best if best.score >= threshold else None


def crop(img: Image, box: PixelBox, pad: int = 0) -> Image:
    x0 = max(0, int(box.xmin) - pad)
    y0 = max(0, int(box.ymin) - pad)
    x1 = min(img.width, int(np.ceil(box.xmax)) + pad)
    y1 = min(img.height, int(np.ceil(box.ymax)) + pad)
    return Image.from_array(img.pixels[y0:y1, x0:x1])


class OcrError(SanipError):
    def __init__(self, message, stderr=""):
        self.stderr = stderr
        super().__init__(f"{message}: {stderr}" if stderr else message)


def run_external_ocr(region: Image, command: str | None, timeout: float = 60.0) -> list[str]:
    """Run ``command`` (with ``{input}`` -> temp PNM path) and return its stdout lines."""
    if not command:
        raise UnavailableError("no OCR command configured")
    if "{input}" not in command:
        raise ConfigError("OCR command template must contain {input}")
    fd, path = tempfile.mkstemp(prefix="sanip-ocr-", suffix=".pgm")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(dump_pnm(region))
        argv = [a.replace("{input}", path) for a in shlex.split(command)]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise OcrError("OCR command failed to run", str(exc)) from exc
        stderr = proc.stderr.decode("utf-8", "replace").strip()
        if proc.returncode != 0:
            raise OcrError(f"OCR command exited {proc.returncode}", stderr)
        return [ln for ln in proc.stdout.decode("utf-8", "replace").splitlines() if ln.strip()]
    finally:
        os.unlink(path)
