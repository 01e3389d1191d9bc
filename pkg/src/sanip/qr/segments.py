"""Data segment bitstreams: numeric, alphanumeric, and byte modes."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import DecodeError
from .tables import (
    ALNUM_CHARSET,
    COUNT_BITS,
    MODE_ALNUM,
    MODE_BYTE,
    MODE_NAMES,
    MODE_NUMERIC,
    MODE_TERMINATOR,
    PAD_BYTES,
)

_NUMERIC_RE = re.compile(r"[0-9]*")
_ALNUM_RE = re.compile(r"[0-9A-Z $%*+\-./:]*")
_ALNUM_VALUE = {ch: i for i, ch in enumerate(ALNUM_CHARSET)}


class UnsupportedModeError(DecodeError):
    pass


@dataclass(frozen=True)
class SegmentData:
    text: str
    modes: tuple = field(default_factory=tuple)


class BitWriter:
    def __init__(self):
        self.bits: list[int] = []

    def write(self, value: int, n: int) -> None:
        if value >> n:
            raise ValueError(f"value {value} does not fit in {n} bits")
        self.bits.extend((value >> i) & 1 for i in reversed(range(n)))

    def __len__(self):
        return len(self.bits)


class BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.data) * 8 - self.pos

    def read(self, n: int) -> int:
        if n > self.remaining:
            raise DecodeError(f"bitstream exhausted reading {n} bits at bit {self.pos}")
        v = 0
        for _ in range(n):
            byte = self.data[self.pos >> 3]
            v = (v << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return v


def pick_mode(text: str) -> int:
    if _NUMERIC_RE.fullmatch(text):
        return MODE_NUMERIC
    if _ALNUM_RE.fullmatch(text):
        return MODE_ALNUM
    return MODE_BYTE


def append_segment(bw: BitWriter, text: str, mode: int) -> None:
    count = len(text.encode("utf-8")) if mode == MODE_BYTE else len(text)
    if mode in COUNT_BITS and count >> COUNT_BITS[mode]:
        raise ValueError(f"{count} characters overflow the character-count field")
    if mode == MODE_NUMERIC:
        if not _NUMERIC_RE.fullmatch(text):
            raise ValueError("numeric mode accepts only digits")
        bw.write(mode, 4)
        bw.write(len(text), COUNT_BITS[mode])
        for i in range(0, len(text), 3):
            chunk = text[i : i + 3]
            bw.write(int(chunk), 3 * len(chunk) + 1)
    elif mode == MODE_ALNUM:
        if not _ALNUM_RE.fullmatch(text):
            raise ValueError("text outside the alphanumeric character set")
        bw.write(mode, 4)
        bw.write(len(text), COUNT_BITS[mode])
        for i in range(0, len(text) - 1, 2):
            bw.write(_ALNUM_VALUE[text[i]] * 45 + _ALNUM_VALUE[text[i + 1]], 11)
        if len(text) % 2:
            bw.write(_ALNUM_VALUE[text[-1]], 6)
    elif mode == MODE_BYTE:
        data = text.encode("utf-8")
        bw.write(mode, 4)
        bw.write(len(data), COUNT_BITS[mode])
        for b in data:
            bw.write(b, 8)
    else:
        raise ValueError(f"unsupported mode {mode:04b}")


def segment_bits(text: str, mode: int | None = None) -> int:
    bw = BitWriter()
    append_segment(bw, text, pick_mode(text) if mode is None else mode)
    return len(bw)


def build_data_codewords(text: str, capacity: int, mode: int | None = None) -> bytes:
    """Single-segment bitstream, terminated and padded to ``capacity`` bytes."""
    bw = BitWriter()
    append_segment(bw, text, pick_mode(text) if mode is None else mode)
    cap_bits = capacity * 8
    if len(bw) > cap_bits:
        raise ValueError(f"payload needs {len(bw)} bits, capacity is {cap_bits}")
    bw.write(MODE_TERMINATOR, min(4, cap_bits - len(bw)))
    bw.write(0, (-len(bw)) % 8)
    out = bytearray(
        int("".join(map(str, bw.bits[i : i + 8])), 2) for i in range(0, len(bw), 8)
    )
    k = 0
    while len(out) < capacity:
        out.append(PAD_BYTES[k % 2])
        k += 1
    return bytes(out)


def parse_segments(data: bytes, version: int) -> SegmentData:
    """Decode segments until the terminator or the end of the data bytes."""
    if version > 9:
        raise DecodeError("character-count widths implemented for versions 1-9 only")
    br = BitReader(data)
    parts: list[str] = []
    modes: list[str] = []
    while br.remaining >= 4:
        mode = br.read(4)
        if mode == MODE_TERMINATOR:
            break
        if mode not in MODE_NAMES:
            raise UnsupportedModeError(f"unsupported mode indicator {mode:04b}")
        count = br.read(COUNT_BITS[mode])
        if mode == MODE_NUMERIC:
            digits = []
            left = count
            while left > 0:
                take = min(3, left)
                v = br.read(3 * take + 1)
                if v >= 10**take:
                    raise DecodeError(f"numeric group value {v} too large")
                digits.append(str(v).zfill(take))
                left -= take
            parts.append("".join(digits))
        elif mode == MODE_ALNUM:
            chars = []
            for _ in range(count // 2):
                v = br.read(11)
                if v >= 45 * 45:
                    raise DecodeError(f"alphanumeric pair value {v} too large")
                chars += [ALNUM_CHARSET[v // 45], ALNUM_CHARSET[v % 45]]
            if count % 2:
                v = br.read(6)
                if v >= 45:
                    raise DecodeError(f"alphanumeric value {v} too large")
                chars.append(ALNUM_CHARSET[v])
            parts.append("".join(chars))
        else:
            raw = bytes(br.read(8) for _ in range(count))
            parts.append(raw.decode("utf-8", errors="replace"))
        modes.append(MODE_NAMES[mode])
    return SegmentData("".join(parts), tuple(modes))


def _payload_bits(mode: int, n: int) -> int:
    if mode == MODE_NUMERIC:
        return 10 * (n // 3) + (0, 4, 7)[n % 3]
    if mode == MODE_ALNUM:
        return 11 * (n // 2) + 6 * (n % 2)
    return 8 * n


def capacity_chars(data_codewords: int, mode: int) -> int:
    """Largest single-segment character count fitting ``data_codewords``."""
    avail = data_codewords * 8 - 4 - COUNT_BITS[mode]
    n = 0
    while _payload_bits(mode, n + 1) <= avail and n + 1 < 1 << COUNT_BITS[mode]:
        n += 1
    return n
