"""QR code encoding and decoding, versions 1-6."""
from .decoder import QrResult, decode_qr, decode_qr_image, find_finder_patterns, sample_grid
from .encoder import encode_matrix, encode_qr, render_matrix
from .gf import GF, GF256, rs_decode, rs_encode
from .matrix import FormatInfo, QrMatrix, decode_format_info, extract_codewords, unmask
from .segments import SegmentData, parse_segments
