"""EAN-13 / UPC-A: scanline decoding with multi-row voting, and an encoder."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, NotFoundError
from .raster import Image, histogram, otsu_threshold

# L-code module patterns, 1 = bar. R is the complement, G the reversed R.
L_CODES = (
    "0001101", "0011001", "0010011", "0111101", "0100011",
    "0110001", "0101111", "0111011", "0110111", "0001011",
)
# first digit -> parity of digits 2..7 (L or G)
PARITY = (
    "LLLLLL", "LLGLGG", "LLGGLG", "LLGGGL", "LGLLGG",
    "LGGLLG", "LGGGLG", "LGLGLG", "LGLGGL", "LGGLGL",
)
FIRST_DIGIT = {p: d for d, p in enumerate(PARITY)}

START_GUARD = "101"
MIDDLE_GUARD = "01010"
END_GUARD = "101"
SYMBOL_MODULES = 95
SYMBOL_RUNS = 59

GUARD_TOL = 0.4
MIDDLE_TOL_MODULES = 5
MAX_DIGIT_ERROR = 1.0
DEFAULT_ROWS = 15


def _widths(bits: str) -> tuple:
    out, n = [], 1
    for a, b in zip(bits, bits[1:]):
        if a == b:
            n += 1
        else:
            out.append(n)
            n = 1
    out.append(n)
    return tuple(out)


def _complement(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


R_CODES = tuple(_complement(c) for c in L_CODES)
G_CODES = tuple(c[::-1] for c in R_CODES)

_L_WIDTHS = np.array([_widths(c) for c in L_CODES], dtype=np.float64)
_G_WIDTHS = _L_WIDTHS[:, ::-1].copy()
# left half: rows 0-9 are L digits, 10-19 G digits; right half uses L widths
_LEFT_TABLE = np.vstack([_L_WIDTHS, _G_WIDTHS])
_RIGHT_TABLE = _L_WIDTHS
_GUARD_GROUPS = (slice(0, 3), slice(27, 32), slice(56, 59))
_GUARD_IDX = np.r_[0:3, 27:32, 56:59]


@dataclass(frozen=True)
class RunLengths:
    runs: tuple
    first_is_bar: bool

    @property
    def total(self) -> int:
        return sum(self.runs)

    def is_bar(self, i: int) -> bool:
        return (i % 2 == 0) == self.first_is_bar

    def reversed(self) -> "RunLengths":
        last_is_bar = self.is_bar(len(self.runs) - 1)
        return RunLengths(self.runs[::-1], last_is_bar)


@dataclass(frozen=True)
class Window:
    start: int
    middle: int
    end: int
    module: float
    pixel_start: int
    pixel_end: int

    @property
    def span(self) -> int:
        return self.pixel_end - self.pixel_start


@dataclass(frozen=True)
class BarcodePayload:
    digits: str
    symbology: str
    check_ok: bool


def runs_from_scanline(line, t: int) -> RunLengths:
    """Merge a thresholded scanline (``<= t`` is bar) into alternating runs."""
    line = np.asarray(line)
    if line.size < 3:
        raise NotFoundError("scanline shorter than 3 pixels")
    bars = line <= t
    edges = np.flatnonzero(bars[1:] != bars[:-1]) + 1
    runs = np.diff(np.concatenate(([0], edges, [line.size])))
    if runs.size < 3:
        raise NotFoundError(f"only {runs.size} runs on scanline")
    return RunLengths(tuple(int(r) for r in runs), bool(bars[0]))


def _candidate_windows(rl: RunLengths):
    runs = np.asarray(rl.runs, dtype=np.float64)
    n = runs.size
    if n < SYMBOL_RUNS:
        return
    offsets = np.concatenate(([0.0], np.cumsum(runs)))
    first = 0 if rl.first_is_bar else 1
    for i in range(first, n - SYMBOL_RUNS + 1, 2):
        span = offsets[i + SYMBOL_RUNS] - offsets[i]
        module = span / SYMBOL_MODULES
        win = runs[i : i + SYMBOL_RUNS]
        if np.any(np.abs(win[_GUARD_IDX] - module) >= 0.5 * module):
            continue
        if any(abs(win[g].mean() - module) > GUARD_TOL * module for g in _GUARD_GROUPS):
            continue
        mid_center = (offsets[i + 27] + offsets[i + 32]) / 2 - offsets[i]
        if abs(mid_center - span / 2) > MIDDLE_TOL_MODULES * module:
            continue
        # quiet zones, where the scanline has room for them
        if i > 0 and runs[i - 1] < 2 * module:
            continue
        if i + SYMBOL_RUNS < n and runs[i + SYMBOL_RUNS] < 2 * module:
            continue
        yield Window(
            i, i + 27, i + 56, float(span / SYMBOL_MODULES),
            int(offsets[i]), int(offsets[i + SYMBOL_RUNS]),
        )


def locate_guards(rl: RunLengths) -> Window:
    """First run window with start, middle, and end guards in EAN-13 geometry.

    A window is 59 runs starting on a bar. Its module estimate is span / 95.
    Each guard group (start, middle, end) must average within 40% of that
    estimate and each guard run must round to one module. This also rejects
    evenly striped patterns, whose span is far from 95 modules.
    """
    for w in _candidate_windows(rl):
        return w
    raise NotFoundError("no EAN-13 guard pattern")


def _match_digits(groups: np.ndarray, table: np.ndarray):
    """Nearest pattern by continuous L1 distance after scaling each digit to 7
    modules; the returned error counts whole modules (widths rounded first),
    so sub-module quantization and +-1 px jitter do not count against it."""
    norm = groups * (7.0 / groups.sum(axis=1, keepdims=True))
    err = np.abs(norm[:, None, :] - table[None, :, :]).sum(axis=2)
    best = err.argmin(axis=1)
    module_err = np.abs(np.rint(norm) - table[best]).sum(axis=1)
    return best, module_err


def decode_digits(rl: RunLengths, window: Window) -> BarcodePayload:
    runs = np.asarray(rl.runs[window.start : window.start + SYMBOL_RUNS], dtype=np.float64)
    left = runs[3:27].reshape(6, 4)
    right = runs[32:56].reshape(6, 4)
    lbest, lerr = _match_digits(left, _LEFT_TABLE)
    rbest, rerr = _match_digits(right, _RIGHT_TABLE)
    for k in range(6):
        if lerr[k] > MAX_DIGIT_ERROR:
            raise DecodeError(f"digit {k + 2}: no pattern within 1 module", position=k + 2)
    for k in range(6):
        if rerr[k] > MAX_DIGIT_ERROR:
            raise DecodeError(f"digit {k + 8}: no pattern within 1 module", position=k + 8)
    parity = "".join("G" if b >= 10 else "L" for b in lbest)
    if parity not in FIRST_DIGIT:
        raise DecodeError(f"invalid parity pattern {parity}", position=1)
    digits = str(FIRST_DIGIT[parity]) + "".join(str(b % 10) for b in lbest)
    digits += "".join(str(b) for b in rbest)
    return BarcodePayload(
        digits,
        "UPC-A" if digits[0] == "0" else "EAN-13",
        compute_check_digit(digits[:12]) == int(digits[12]),
    )


def compute_check_digit(digits12: str) -> int:
    if len(digits12) != 12 or not digits12.isascii() or not digits12.isdigit():
        raise ValueError(f"expected 12 decimal digits, got {digits12!r}")
    total = sum(int(c) * (3 if i % 2 else 1) for i, c in enumerate(digits12))
    return (10 - total % 10) % 10


def is_valid_ean13(digits: str) -> bool:
    return (
        len(digits) == 13
        and digits.isascii()
        and digits.isdigit()
        and compute_check_digit(digits[:12]) == int(digits[12])
    )


def _decode_runs(rl: RunLengths):
    for w in _candidate_windows(rl):
        try:
            p = decode_digits(rl, w)
        except DecodeError:
            continue
        if p.check_ok:
            return p
    return None


def decode_scanline(line) -> BarcodePayload | None:
    """Decode one scanline (either direction); None if nothing checks out."""
    line = np.asarray(line, dtype=np.uint8)
    if line.size < 3:
        return None
    t = otsu_threshold(np.bincount(line, minlength=256))
    try:
        rl = runs_from_scanline(line, t)
    except NotFoundError:
        return None
    return _decode_runs(rl) or _decode_runs(rl.reversed())


def sample_rows(height: int, n: int = DEFAULT_ROWS) -> list[int]:
    """``n`` evenly spaced rows plus the middle row, distinct, top to bottom."""
    rows = {min(height - 1, int((k + 0.5) * height / n)) for k in range(n)}
    rows.add(height // 2)
    return sorted(rows)


def vote(results) -> BarcodePayload | None:
    """Majority over per-row payloads that passed the checksum.

    One successful row is accepted alone; with two or more, the winner needs
    at least two votes and a strict plurality.
    """
    good = [r for r in results if r is not None and r.check_ok]
    if not good:
        return None
    if len(good) == 1:
        return good[0]
    counts = Counter(r.digits for r in good).most_common()
    top, n = counts[0]
    if n < 2 or (len(counts) > 1 and counts[1][1] == n):
        return None
    return next(r for r in good if r.digits == top)


def decode_image(img: Image, rows: int = DEFAULT_ROWS) -> BarcodePayload:
    cache: dict[bytes, BarcodePayload | None] = {}
    results = []
    for r in sample_rows(img.height, rows):
        line = img.pixels[r]
        key = line.tobytes()
        if key not in cache:
            cache[key] = decode_scanline(line)
        results.append(cache[key])
    winner = vote(results)
    if winner is None:
        raise NotFoundError("no EAN-13 symbol with a valid checksum")
    return winner


def ean13_modules(digits: str) -> str:
    """The 95-module bit string for a valid 13-digit code."""
    if not is_valid_ean13(digits):
        raise ValueError(f"refusing to encode {digits!r}: invalid EAN-13 checksum")
    parity = PARITY[int(digits[0])]
    left = "".join(
        (L_CODES if p == "L" else G_CODES)[int(d)] for p, d in zip(parity, digits[1:7])
    )
    right = "".join(R_CODES[int(d)] for d in digits[7:])
    return START_GUARD + left + MIDDLE_GUARD + right + END_GUARD


def render_row(modules: str, module_px: int, quiet_px: int) -> np.ndarray:
    bits = np.frombuffer(modules.encode("ascii"), dtype=np.uint8) - ord("0")
    row = np.where(np.repeat(bits, module_px) == 1, 0, 255).astype(np.uint8)
    pad = np.full(quiet_px, 255, dtype=np.uint8)
    return np.concatenate([pad, row, pad])


def encode_ean13(digits: str, module_px: int = 3, quiet_px: int = 30, height_px: int = 60) -> Image:
    if module_px < 1 or height_px < 1 or quiet_px < 0:
        raise ValueError("module_px and height_px must be >= 1, quiet_px >= 0")
    row = render_row(ean13_modules(digits), module_px, quiet_px)
    return Image.from_array(np.tile(row, (height_px, 1)))


def render_runs(runs, first_is_bar: bool, height_px: int = 1) -> Image:
    """Rasterize explicit run widths (used by jitter experiments)."""
    colors = []
    bar = first_is_bar
    for w in runs:
        colors.append(np.full(int(w), 0 if bar else 255, dtype=np.uint8))
        bar = not bar
    return Image.from_array(np.tile(np.concatenate(colors), (height_px, 1)))
