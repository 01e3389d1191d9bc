"""QR module grid: function patterns, format information, masking, zigzag."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DecodeError
from .tables import (
    ALIGNMENT_POSITIONS,
    EC_BITS,
    EC_FROM_BITS,
    MAX_VERSION,
    MIN_VERSION,
    block_spec,
    symbol_size,
)

FORMAT_GENERATOR = 0x537
FORMAT_MASK = 0x5412
MAX_FORMAT_DISTANCE = 3


@dataclass(frozen=True, eq=False)
class QrMatrix:
    """Square module grid, ``modules[row, col]``, True = dark."""

    version: int
    modules: np.ndarray

    def __post_init__(self):
        m = np.array(self.modules, dtype=bool, copy=True)
        n = symbol_size(self.version)
        if m.shape != (n, n):
            raise ValueError(f"version {self.version} needs {n}x{n} modules, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "modules", m)

    @property
    def size(self) -> int:
        return self.modules.shape[0]

    def __eq__(self, other):
        if not isinstance(other, QrMatrix):
            return NotImplemented
        return self.version == other.version and np.array_equal(self.modules, other.modules)


@dataclass(frozen=True)
class FormatInfo:
    ec_level: str
    mask_id: int
    distance: int = 0


def _finder_cells(size):
    for r0, c0 in ((0, 0), (0, size - 7), (size - 7, 0)):
        for dr in range(-1, 8):
            for dc in range(-1, 8):
                r, c = r0 + dr, c0 + dc
                if 0 <= r < size and 0 <= c < size:
                    ring = max(abs(dr - 3), abs(dc - 3))
                    yield r, c, ring in (0, 1, 3)


def alignment_centers(version: int):
    pos = ALIGNMENT_POSITIONS[version]
    last = len(pos) - 1
    for i, r in enumerate(pos):
        for j, c in enumerate(pos):
            # skip the three corners occupied by finders
            if (i, j) in ((0, 0), (0, last), (last, 0)):
                continue
            yield r, c


@lru_cache(maxsize=None)
def _function_layout(version: int):
    if not MIN_VERSION <= version <= MAX_VERSION:
        raise ValueError(f"unsupported version {version}")
    n = symbol_size(version)
    dark = np.zeros((n, n), dtype=bool)
    func = np.zeros((n, n), dtype=bool)
    for i in range(n):
        func[6, i] = func[i, 6] = True
        dark[6, i] = dark[i, 6] = i % 2 == 0
    for r, c, d in _finder_cells(n):
        func[r, c] = True
        dark[r, c] = d
    for r, c in alignment_centers(version):
        for dr in range(-2, 3):
            for dc in range(-2, 3):
                func[r + dr, c + dc] = True
                dark[r + dr, c + dc] = max(abs(dr), abs(dc)) != 1
    for r, c in format_positions(n)[0] + format_positions(n)[1]:
        func[r, c] = True
    func[n - 8, 8] = True
    dark[n - 8, 8] = True
    dark.flags.writeable = False
    func.flags.writeable = False
    return dark, func


def function_mask(version: int) -> np.ndarray:
    return _function_layout(version)[1]


def function_modules(version: int) -> np.ndarray:
    """Dark/light values of finders, timing, alignment, and the dark module."""
    return _function_layout(version)[0]


@lru_cache(maxsize=None)
def format_positions(size: int):
    """(row, col) of format bits 0..14 for the two copies."""
    first = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)]
    first += [(8, 14 - i) for i in range(9, 15)]
    second = [(8, size - 1 - i) for i in range(8)]
    second += [(size - 15 + i, 8) for i in range(8, 15)]
    return first, second


def format_word(ec_level: str, mask_id: int) -> int:
    """BCH(15,5)-protected, XOR-masked format word."""
    data = EC_BITS[ec_level] << 3 | mask_id
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * FORMAT_GENERATOR)
    return (data << 10 | rem) ^ FORMAT_MASK


VALID_FORMAT_WORDS = {
    format_word(level, mask): (level, mask) for level in EC_BITS for mask in range(8)
}


def decode_format_word(word: int) -> FormatInfo:
    """Nearest valid word by Hamming distance (ties to the smaller word)."""
    best = min(VALID_FORMAT_WORDS, key=lambda w: (bin(w ^ word).count("1"), w))
    dist = bin(best ^ word).count("1")
    if dist > MAX_FORMAT_DISTANCE:
        raise DecodeError(f"format word {word:015b} is {dist} bits from any codeword")
    level, mask = VALID_FORMAT_WORDS[best]
    return FormatInfo(level, mask, dist)


def read_format_words(m: QrMatrix) -> tuple[int, int]:
    words = []
    for copy in format_positions(m.size):
        words.append(sum(int(m.modules[r, c]) << i for i, (r, c) in enumerate(copy)))
    return words[0], words[1]


def decode_format_info(m: QrMatrix) -> FormatInfo:
    """Decode both copies; keep the one closer to a valid codeword."""
    found = []
    for word in read_format_words(m):
        try:
            found.append(decode_format_word(word))
        except DecodeError:
            pass
    if not found:
        raise DecodeError("both format information copies are uncorrectable")
    return min(found, key=lambda f: f.distance)


def write_format(modules: np.ndarray, ec_level: str, mask_id: int) -> None:
    word = format_word(ec_level, mask_id)
    for copy in format_positions(modules.shape[0]):
        for i, (r, c) in enumerate(copy):
            modules[r, c] = bool((word >> i) & 1)


_MASKS = (
    lambda r, c: (r + c) % 2 == 0,
    lambda r, c: r % 2 == 0,
    lambda r, c: c % 3 == 0,
    lambda r, c: (r + c) % 3 == 0,
    lambda r, c: (r // 2 + c // 3) % 2 == 0,
    lambda r, c: (r * c) % 2 + (r * c) % 3 == 0,
    lambda r, c: ((r * c) % 2 + (r * c) % 3) % 2 == 0,
    lambda r, c: ((r + c) % 2 + (r * c) % 3) % 2 == 0,
)


@lru_cache(maxsize=None)
def mask_pattern(mask_id: int, version: int) -> np.ndarray:
    """Mask predicate restricted to data modules."""
    if not 0 <= mask_id < 8:
        raise ValueError(f"mask id {mask_id} outside 0..7")
    n = symbol_size(version)
    r, c = np.indices((n, n))
    pat = _MASKS[mask_id](r, c) & ~function_mask(version)
    pat.flags.writeable = False
    return pat


def unmask(m: QrMatrix, mask_id: int) -> QrMatrix:
    return QrMatrix(m.version, m.modules ^ mask_pattern(mask_id, m.version))


@lru_cache(maxsize=None)
def zigzag_order(version: int) -> tuple:
    """Data module coordinates in placement order."""
    n = symbol_size(version)
    func = function_mask(version)
    out = []
    right = n - 1
    while right >= 1:
        if right == 6:
            right = 5
        upward = ((right + 1) & 2) == 0
        for vert in range(n):
            row = n - 1 - vert if upward else vert
            for col in (right, right - 1):
                if not func[row, col]:
                    out.append((row, col))
        right -= 2
    return tuple(out)


def place_codewords(modules: np.ndarray, version: int, stream: bytes) -> None:
    order = zigzag_order(version)
    nbits = len(stream) * 8
    if nbits > len(order):
        raise ValueError("codeword stream larger than data area")
    for i, (r, c) in enumerate(order):
        modules[r, c] = i < nbits and bool((stream[i >> 3] >> (7 - (i & 7))) & 1)


def read_codeword_stream(m: QrMatrix, count: int | None = None) -> bytes:
    """Raw interleaved codewords in transmission order (remainder bits dropped)."""
    order = zigzag_order(m.version)
    if count is None:
        count = len(order) // 8
    bits = np.fromiter((m.modules[r, c] for r, c in order[: count * 8]), dtype=np.uint8)
    return np.packbits(bits).tobytes()


def interleave(data_blocks, ec_blocks) -> bytes:
    out = bytearray()
    for i in range(max(len(b) for b in data_blocks)):
        out += bytes(b[i] for b in data_blocks if i < len(b))
    for i in range(max(len(b) for b in ec_blocks)):
        out += bytes(b[i] for b in ec_blocks if i < len(b))
    return bytes(out)


def deinterleave(stream: bytes, version: int, ec_level: str) -> list[bytes]:
    """Split the interleaved stream into per-block ``data || ec`` codewords."""
    spec = block_spec(version, ec_level)
    data = [bytearray() for _ in spec.data_lengths]
    ec = [bytearray() for _ in spec.data_lengths]
    pos = 0
    for i in range(max(spec.data_lengths)):
        for b, n in enumerate(spec.data_lengths):
            if i < n:
                data[b].append(stream[pos])
                pos += 1
    for _ in range(spec.ec_per_block):
        for b in range(spec.num_blocks):
            ec[b].append(stream[pos])
            pos += 1
    return [bytes(d + e) for d, e in zip(data, ec)]


def extract_codewords(m: QrMatrix, ec_level: str) -> list[bytes]:
    """Per-block codewords from an unmasked matrix."""
    spec = block_spec(m.version, ec_level)
    return deinterleave(read_codeword_stream(m, spec.total_codewords), m.version, ec_level)
