import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sanip.errors import DecodeError
from sanip.qr import QrMatrix, decode_format_info, encode_matrix, extract_codewords, unmask
from sanip.qr.encoder import codeword_stream
from sanip.qr.matrix import (
    VALID_FORMAT_WORDS,
    decode_format_word,
    format_word,
    function_mask,
    mask_pattern,
    read_codeword_stream,
    write_format,
    zigzag_order,
)
from sanip.qr.segments import (
    SegmentData,
    UnsupportedModeError,
    build_data_codewords,
    capacity_chars,
    parse_segments,
    segment_bits,
)
from sanip.qr.tables import (
    ALNUM_CHARSET,
    BLOCKS,
    EC_LEVELS,
    MODE_ALNUM,
    MODE_BYTE,
    MODE_NUMERIC,
    REMAINDER_BITS,
    block_spec,
    symbol_size,
)

VERSIONS = range(1, 7)


def raw_data_modules(v):
    """Module count left for data and EC, from the symbol geometry alone."""
    result = (16 * v + 128) * v + 64
    if v >= 2:
        n_align = v // 7 + 2
        result -= (25 * n_align - 10) * n_align - 55
    return result


@pytest.mark.parametrize("v", VERSIONS)
def test_data_area_matches_tables(v):
    order = zigzag_order(v)
    assert len(order) == raw_data_modules(v)
    assert len(set(order)) == len(order)
    assert len(order) // 8 == block_spec(v, "M").total_codewords
    assert len(order) % 8 == REMAINDER_BITS[v]
    assert (~function_mask(v)).sum() == len(order)
    for level in EC_LEVELS:
        assert block_spec(v, level).total_codewords == block_spec(v, "L").total_codewords


def test_table_spot_values():
    assert block_spec(1, "M").total_codewords == 26
    s = block_spec(6, "M")
    assert s.data_lengths == (27, 27, 27, 27) and s.ec_per_block == 16
    assert block_spec(5, "Q").data_lengths == (15, 15, 16, 16)
    assert len(BLOCKS) == 24


def test_matrix_invariants():
    for v in VERSIONS:
        assert QrMatrix(v, np.zeros((symbol_size(v),) * 2, bool)).size == 17 + 4 * v
    with pytest.raises(ValueError):
        QrMatrix(2, np.zeros((21, 21), bool))


def test_format_zero_word():
    assert format_word("M", 0) == 0x5412


def test_format_words_distinct_and_far():
    words = list(VALID_FORMAT_WORDS)
    assert len(words) == 32
    assert min(bin(a ^ b).count("1") for a, b in itertools.combinations(words, 2)) == 7


def test_format_corrections_exhaustive():
    for word, (level, mask) in VALID_FORMAT_WORDS.items():
        for k in range(4):
            for bits in itertools.combinations(range(15), k):
                bad = word
                for b in bits:
                    bad ^= 1 << b
                f = decode_format_word(bad)
                assert (f.ec_level, f.mask_id, f.distance) == (level, mask, k)


def test_four_flips_in_both_copies():
    m = encode_matrix("HELLO", 1, "Q", 5).modules.copy()
    # a word at distance >= 4 from every codeword
    target = next(
        w for w in range(1 << 15)
        if min(bin(w ^ c).count("1") for c in VALID_FORMAT_WORDS) >= 4
    )
    from sanip.qr.matrix import format_positions

    for copy in format_positions(m.shape[0]):
        for i, (r, c) in enumerate(copy):
            m[r, c] = bool(target >> i & 1)
    with pytest.raises(DecodeError):
        decode_format_info(QrMatrix(1, m))


def test_format_second_copy_rescues():
    m = encode_matrix("HELLO", 1, "Q", 5).modules.copy()
    m[0:6, 8] ^= True  # wreck the first copy
    f = decode_format_info(QrMatrix(1, m))
    assert (f.ec_level, f.mask_id) == ("Q", 5)


def test_mask0_checkerboard():
    zero = QrMatrix(1, np.zeros((21, 21), bool))
    out = unmask(zero, 0).modules
    data = ~function_mask(1)
    r, c = np.indices((21, 21))
    assert np.array_equal(out[data], ((r + c) % 2 == 0)[data])
    assert not out[function_mask(1)].any()


@given(st.integers(1, 6), st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_unmask_involution(v, mask, seed):
    n = symbol_size(v)
    m = QrMatrix(v, np.random.default_rng(seed).random((n, n)) < 0.5)
    assert unmask(unmask(m, mask), mask) == m


def test_masks_pairwise_differ():
    for a, b in itertools.combinations(range(8), 2):
        assert (mask_pattern(a, 1) != mask_pattern(b, 1)).any()


@pytest.mark.parametrize("v,level", [(1, "M"), (3, "H"), (5, "Q"), (6, "M")])
def test_extract_matches_encoder_stream(v, level):
    m = encode_matrix("TEST 123", v, level, 2)
    clean = unmask(m, 2)
    stream = codeword_stream("TEST 123", v, level)
    assert read_codeword_stream(clean, len(stream)) == stream
    blocks = extract_codewords(clean, level)
    spec = block_spec(v, level)
    assert [len(b) for b in blocks] == [d + spec.ec_per_block for d in spec.data_lengths]


def test_segments_examples():
    cap = block_spec(3, "L").data_codewords
    assert parse_segments(build_data_codewords("HELLO", cap, MODE_BYTE), 3) == SegmentData("HELLO", ("byte",))
    out = parse_segments(build_data_codewords("9789352607990", cap, MODE_NUMERIC), 3)
    assert out == SegmentData("9789352607990", ("numeric",))
    with pytest.raises(UnsupportedModeError):
        parse_segments(bytes([0b10000000, 0, 0]), 1)


def test_byte_mode_lossy_utf8():
    # byte mode, count 2, payload 0xFF 0xF0 (not UTF-8)
    out = parse_segments(bytes([0x40, 0x2F, 0xFF, 0x00]), 1)
    assert out.text == "\ufffd\ufffd" or "\ufffd" in out.text
    assert out.modes == ("byte",)


def test_capacity_overflow():
    cap = block_spec(1, "H").data_codewords
    n = capacity_chars(cap, MODE_NUMERIC)
    build_data_codewords("1" * n, cap, MODE_NUMERIC)
    with pytest.raises(ValueError):
        build_data_codewords("1" * (n + 1), cap, MODE_NUMERIC)


@given(st.text(ALNUM_CHARSET, max_size=40))
def test_alnum_round_trip(text):
    cap = block_spec(4, "L").data_codewords
    assert parse_segments(build_data_codewords(text, cap, MODE_ALNUM), 4).text == text


@given(st.text(max_size=30))
def test_byte_round_trip(text):
    cap = block_spec(6, "L").data_codewords
    if len(text.encode("utf-8")) > capacity_chars(cap, MODE_BYTE):
        return
    assert parse_segments(build_data_codewords(text, cap, MODE_BYTE), 6).text == text


def test_matrices_match_segno():
    segno = pytest.importorskip("segno")
    rnd = random.Random(4)
    compared = 0
    modes = ((MODE_NUMERIC, "numeric", "0123456789"), (MODE_ALNUM, "alphanumeric", ALNUM_CHARSET),
             (MODE_BYTE, "byte", "abcxyz/:.?="))
    for v, level, mask in itertools.product(VERSIONS, EC_LEVELS, range(8)):
        mode, name, chars = modes[(v + mask) % 3]
        cap = block_spec(v, level).data_codewords
        text = "".join(rnd.choice(chars) for _ in range(rnd.randint(1, capacity_chars(cap, mode))))
        if segment_bits(text, mode) % 8 == 4:
            # segno pads this case with an extra zero byte; both are decodable
            continue
        ref = segno.make(text, version=v, error=level, mask=mask, mode=name, boost_error=False, micro=False)
        want = np.array([list(row) for row in ref.matrix], dtype=bool)
        assert np.array_equal(encode_matrix(text, v, level, mask, mode).modules, want), (v, level, mask)
        compared += 1
    assert compared > 100


def test_write_format_round_trip():
    for level, mask in itertools.product(EC_LEVELS, range(8)):
        mods = np.zeros((25, 25), bool)
        write_format(mods, level, mask)
        f = decode_format_info(QrMatrix(2, mods))
        assert (f.ec_level, f.mask_id, f.distance) == (level, mask, 0)
