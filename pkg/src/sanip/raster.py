"""Grayscale rasters: PNM I/O, histograms, Otsu thresholding, scanlines."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

MAX_PIXELS = 1 << 28
_WHITESPACE = b" \t\r\n\v\f"


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable 8-bit luminance raster, indexed ``pixels[row, col]``."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.asarray(self.pixels)
        if px.shape != (self.height, self.width):
            px = px.reshape(self.height, self.width)
        px = np.array(px, dtype=np.uint8, copy=True)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "Image":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
        return cls(arr.shape[1], arr.shape[0], arr)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"Image({self.width}x{self.height})"


class _Tokens:
    """Header tokenizer honouring '#' comments."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def _skip(self):
        d = self.data
        while self.pos < len(d):
            c = d[self.pos : self.pos + 1]
            if c in _WHITESPACE and c:
                self.pos += 1
            elif c == b"#":
                while self.pos < len(d) and d[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            else:
                break

    def next_int(self, what: str) -> int:
        self._skip()
        start = self.pos
        d = self.data
        while self.pos < len(d) and d[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if start == self.pos:
            if self.pos >= len(d):
                raise ParseError(f"truncated header: missing {what}", offset=start)
            raise ParseError(f"expected integer {what}", offset=start)
        return int(d[start : self.pos])


def load_pnm(data: bytes) -> Image:
    """Parse a P2/P3/P5/P6 file. RGB is reduced to BT.601 luma."""
    if len(data) < 2:
        raise ParseError("truncated magic", offset=0)
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ParseError(f"unsupported magic {magic!r}", offset=0)
    tok = _Tokens(data, 2)
    width = tok.next_int("width")
    height = tok.next_int("height")
    maxval = tok.next_int("maxval")
    if width < 1 or height < 1:
        raise ParseError(f"invalid dimensions {width}x{height}", offset=2)
    if width * height > MAX_PIXELS:
        raise ParseError(f"dimension overflow {width}x{height}", offset=2)
    if not 1 <= maxval <= 255:
        raise ParseError(f"maxval {maxval} outside 1..255", offset=tok.pos)
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        if tok.pos >= len(data) or data[tok.pos : tok.pos + 1] not in _WHITESPACE:
            raise ParseError("expected single whitespace after maxval", offset=tok.pos)
        start = tok.pos + 1
        if len(data) - start < count:
            raise ParseError(
                f"truncated pixel data: need {count} bytes, have {len(data) - start}",
                offset=len(data),
            )
        samples = np.frombuffer(data, dtype=np.uint8, count=count, offset=start).astype(np.int64)
    else:
        values = []
        for _ in range(count):
            try:
                values.append(tok.next_int("sample"))
            except ParseError as exc:
                raise ParseError("truncated pixel data", offset=exc.offset) from None
        samples = np.array(values, dtype=np.int64)
    if samples.size and samples.max() > maxval:
        raise ParseError(f"sample exceeds maxval {maxval}", offset=tok.pos)
    if maxval != 255:
        samples = (samples * 255 * 2 + maxval) // (2 * maxval)

    if channels == 3:
        rgb = samples.reshape(-1, 3)
        samples = luma(rgb[:, 0], rgb[:, 1], rgb[:, 2])
    return Image(width, height, samples.astype(np.uint8).reshape(height, width))


def luma(r, g, b):
    """round-half-up(0.299 R + 0.587 G + 0.114 B), in exact integer arithmetic."""
    r, g, b = (np.asarray(v, dtype=np.int64) for v in (r, g, b))
    return (299 * r + 587 * g + 114 * b + 500) // 1000


def dump_pnm(img: Image) -> bytes:
    """Binary P5 encoding of ``img``."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def read_image(path) -> Image:
    return load_pnm(Path(path).read_bytes())


def write_image(path, img: Image) -> None:
    Path(path).write_bytes(dump_pnm(img))


def histogram(img) -> np.ndarray:
    """256-bin luminance counts. Accepts an Image or any uint8 array."""
    px = img.pixels if isinstance(img, Image) else np.asarray(img, dtype=np.uint8)
    return np.bincount(px.ravel(), minlength=256).astype(np.int64)


def otsu_threshold(hist) -> int:
    """Threshold maximizing between-class variance; ties go to the smallest t.

    Pixels ``<= t`` form the first class. Comparison is exact: the variance is
    ``(N*S0 - S*n0)**2 / (N**2 * n0 * n1)`` in integers. It is constant between
    consecutive occupied bins, so the smallest maximizer is always an occupied
    value and only those need evaluating.
    """
    bins = [int(c) for c in hist]
    if len(bins) != 256:
        raise ValueError("histogram must have 256 bins")
    occupied = [v for v in range(256) if bins[v] > 0]
    if not occupied:
        raise ValueError("empty histogram")
    if len(occupied) == 1:
        return occupied[0]
    n = sum(bins)
    s = sum(v * bins[v] for v in occupied)
    best_t, best_num, best_den = occupied[0], -1, 1
    n0 = s0 = 0
    for v in occupied[:-1]:
        n0 += bins[v]
        s0 += v * bins[v]
        num = (n * s0 - s * n0) ** 2
        den = n0 * (n - n0)
        if num * best_den > best_num * den:
            best_t, best_num, best_den = v, num, den
    return best_t


def binarize(img, t: int, dark_is_ink: bool = True) -> np.ndarray:
    """Bitmap of 1 = ink. Dark-is-ink marks pixels <= t."""
    if not 0 <= t <= 255:
        raise ValueError(f"threshold {t} outside 0..255")
    px = img.pixels if isinstance(img, Image) else np.asarray(img)
    ink = px <= t
    if not dark_is_ink:
        ink = ~ink
    return ink.astype(np.uint8)


def otsu_binarize(img: Image, dark_is_ink: bool = True) -> np.ndarray:
    return binarize(img, otsu_threshold(histogram(img)), dark_is_ink)


def extract_scanline(img: Image, row: int) -> np.ndarray:
    if not 0 <= row < img.height:
        raise IndexError(f"row {row} outside 0..{img.height - 1}")
    return img.pixels[row].copy()
