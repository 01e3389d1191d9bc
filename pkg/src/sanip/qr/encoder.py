"""QR symbol construction for versions 1-6 (the decoder's test oracle)."""
from __future__ import annotations

import numpy as np

from ..raster import Image
from .gf import rs_encode
from .matrix import (
    QrMatrix,
    function_modules,
    interleave,
    mask_pattern,
    place_codewords,
    write_format,
)
from .segments import build_data_codewords
from .tables import block_spec

QUIET_ZONE = 4


def codeword_stream(text: str, version: int, ec_level: str, mode: int | None = None) -> bytes:
    """Interleaved data and EC codewords for ``text``."""
    spec = block_spec(version, ec_level)
    data = build_data_codewords(text, spec.data_codewords, mode)
    blocks, ec_blocks, pos = [], [], 0
    for n in spec.data_lengths:
        block = data[pos : pos + n]
        pos += n
        blocks.append(block)
        ec_blocks.append(rs_encode(block, spec.ec_per_block)[n:])
    return interleave(blocks, ec_blocks)


def encode_matrix(
    text: str, version: int, ec_level: str = "M", mask_id: int = 0, mode: int | None = None
) -> QrMatrix:
    stream = codeword_stream(text, version, ec_level, mode)
    modules = function_modules(version).copy()
    place_codewords(modules, version, stream)
    modules ^= mask_pattern(mask_id, version)
    write_format(modules, ec_level, mask_id)
    return QrMatrix(version, modules)


def render_matrix(m: QrMatrix, module_px: int = 4, quiet: int = QUIET_ZONE) -> Image:
    padded = np.pad(m.modules, quiet, constant_values=False)
    px = np.where(padded, 0, 255).astype(np.uint8)
    return Image.from_array(np.kron(px, np.ones((module_px, module_px), dtype=np.uint8)))


def encode_qr(
    text: str,
    version: int,
    ec_level: str = "M",
    mask_id: int = 0,
    module_px: int = 4,
    mode: int | None = None,
) -> Image:
    """Render ``text`` with a 4-module quiet zone; dark modules are 0."""
    return render_matrix(encode_matrix(text, version, ec_level, mask_id, mode), module_px)
