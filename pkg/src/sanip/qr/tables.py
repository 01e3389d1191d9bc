"""Normative QR constants for versions 1-6.

The block table is checked against a stored SHA-256 at import so an
accidental edit fails loudly instead of producing unreadable symbols.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

MIN_VERSION = 1
MAX_VERSION = 6
EC_LEVELS = ("L", "M", "Q", "H")
# two-bit EC indicator used in the format word
EC_BITS = {"L": 0b01, "M": 0b00, "Q": 0b11, "H": 0b10}
EC_FROM_BITS = {v: k for k, v in EC_BITS.items()}

# (version, level) -> (ec codewords per block, ((block count, data codewords), ...))
BLOCKS = {
    (1, "L"): (7, ((1, 19),)),
    (1, "M"): (10, ((1, 16),)),
    (1, "Q"): (13, ((1, 13),)),
    (1, "H"): (17, ((1, 9),)),
    (2, "L"): (10, ((1, 34),)),
    (2, "M"): (16, ((1, 28),)),
    (2, "Q"): (22, ((1, 22),)),
    (2, "H"): (28, ((1, 16),)),
    (3, "L"): (15, ((1, 55),)),
    (3, "M"): (26, ((1, 44),)),
    (3, "Q"): (18, ((2, 17),)),
    (3, "H"): (22, ((2, 13),)),
    (4, "L"): (20, ((1, 80),)),
    (4, "M"): (18, ((2, 32),)),
    (4, "Q"): (26, ((2, 24),)),
    (4, "H"): (16, ((4, 9),)),
    (5, "L"): (26, ((1, 108),)),
    (5, "M"): (24, ((2, 43),)),
    (5, "Q"): (18, ((2, 15), (2, 16))),
    (5, "H"): (22, ((2, 11), (2, 12))),
    (6, "L"): (18, ((2, 68),)),
    (6, "M"): (16, ((4, 27),)),
    (6, "Q"): (24, ((4, 19),)),
    (6, "H"): (28, ((4, 15),)),
}
BLOCKS_SHA256 = "a87b04caaa8fa3f2ff23309b8319dd37743b49230cbd1f7f8bc2e45a07a6d744"

ALIGNMENT_POSITIONS = {1: (), 2: (6, 18), 3: (6, 22), 4: (6, 26), 5: (6, 30), 6: (6, 34)}
REMAINDER_BITS = {1: 0, 2: 7, 3: 7, 4: 7, 5: 7, 6: 7}

MODE_NUMERIC = 0b0001
MODE_ALNUM = 0b0010
MODE_BYTE = 0b0100
MODE_TERMINATOR = 0b0000
MODE_NAMES = {MODE_NUMERIC: "numeric", MODE_ALNUM: "alphanumeric", MODE_BYTE: "byte"}
# character-count field width for versions 1-9
COUNT_BITS = {MODE_NUMERIC: 10, MODE_ALNUM: 9, MODE_BYTE: 8}
ALNUM_CHARSET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ $%*+-./:"
PAD_BYTES = (0xEC, 0x11)


def _table_digest() -> str:
    canon = json.dumps(sorted((f"{v}{l}", e, [list(b) for b in g]) for (v, l), (e, g) in BLOCKS.items()))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class BlockSpec:
    version: int
    level: str
    ec_per_block: int
    data_lengths: tuple  # data codewords per block, in block order

    @property
    def num_blocks(self) -> int:
        return len(self.data_lengths)

    @property
    def data_codewords(self) -> int:
        return sum(self.data_lengths)

    @property
    def total_codewords(self) -> int:
        return self.data_codewords + self.ec_per_block * self.num_blocks


if _table_digest() != BLOCKS_SHA256:
    raise RuntimeError("QR block table does not match its checksum")


def block_spec(version: int, level: str) -> BlockSpec:
    if not MIN_VERSION <= version <= MAX_VERSION:
        raise ValueError(f"unsupported version {version}")
    if level not in EC_BITS:
        raise ValueError(f"unknown EC level {level!r}")
    ec, groups = BLOCKS[(version, level)]
    lengths = tuple(d for count, d in groups for _ in range(count))
    return BlockSpec(version, level, ec, lengths)


def symbol_size(version: int) -> int:
    return 17 + 4 * version
