import bisect
import io
import json
import sys
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import blank, write_barcode_sequence
from sanip.assistant import (
    Announcement,
    FrameResult,
    PipelineConfig,
    Speaker,
    debounce,
    findings,
    format_announcement,
    process_frame,
    run_pipeline,
    speak,
)
from sanip.barcode import BarcodePayload, encode_ean13
from sanip.dataset import DEFAULT_CLASSES, ClassList, PixelBox
from sanip.detect import Detection, TensorFile, write_tensor
from sanip.errors import ConfigError
from sanip.qr.segments import SegmentData
from sanip.raster import write_image
from sanip.textloc import MatchResult

FIVE = ClassList(DEFAULT_CLASSES)
FIG8 = "9789352607990"


def emitted_frames(frames, window):
    """Reference: jump to the first occurrence past each emission's window."""
    frames = sorted(set(frames))
    out = []
    i = 0
    while i < len(frames):
        out.append(frames[i])
        i = bisect.bisect_right(frames, frames[i] + window)
    return out


def run_debounce(seq, window):
    history = {}
    out = []
    for f, keys in seq:
        out += debounce(history, keys, f, window)
    return out


def test_debounce_examples():
    obj = [("object", "Tide detected")]
    assert len(run_debounce([(f, obj) for f in range(1, 11)], 30)) == 1
    assert len(run_debounce([(1, obj), (40, obj)], 30)) == 2
    two = run_debounce([(5, [("barcode", "Barcode: 1"), ("qr", "Code says: x")])], 30)
    assert [a.kind for a in two] == ["barcode", "qr"]


def test_window_boundary():
    obj = [("exit", "EXIT sign ahead")]
    assert len(run_debounce([(0, obj), (30, obj)], 30)) == 1
    assert len(run_debounce([(0, obj), (31, obj)], 30)) == 2


@given(
    st.dictionaries(st.sampled_from(["a", "b", "c"]), st.sets(st.integers(0, 300), max_size=40)),
    st.integers(1, 40),
)
def test_debounce_matches_reference(occ, window):
    frames = sorted({f for fs in occ.values() for f in fs})
    seq = [(f, [("text", k) for k in sorted(occ) if f in occ[k]]) for f in frames]
    got = run_debounce(seq, window)
    for k, fs in occ.items():
        assert [a.frame_index for a in got if a.payload == k] == emitted_frames(fs, window)


@st.composite
def clustered(draw):
    """Occurrences whose clusters (runs with gaps <= N) each span at most N frames."""
    window = draw(st.integers(1, 30))
    frames, f = [], draw(st.integers(0, 10))
    for _ in range(draw(st.integers(1, 8))):
        width = draw(st.integers(0, window))
        inner = draw(st.sets(st.integers(0, width), max_size=6)) | {0, width}
        frames += sorted(f + d for d in inner)
        f += width + window + 1 + draw(st.integers(0, 20))
    return window, frames


@given(clustered())
def test_count_is_large_gaps_plus_one(data):
    window, frames = data
    got = run_debounce([(f, [("object", "Cart detected")]) for f in frames], window)
    gaps = sum(1 for a, b in zip(frames, frames[1:]) if b - a > window)
    assert len(got) == gaps + 1


def test_format_examples():
    d = Detection(PixelBox(0, 0, 1, 1), 0, 0.9, "Parle-G")
    assert format_announcement(d) == "Parle-G detected"
    assert format_announcement(BarcodePayload(FIG8, "EAN-13", True)) == "Barcode: 9789352607990"
    assert format_announcement(MatchResult(PixelBox(0, 0, 1, 1), 0.9, 1.0)) == "EXIT sign ahead"
    assert format_announcement(SegmentData("http://x  ", ("byte",))) == "Code says: http://x"
    assert format_announcement("1 Bottle Water 1,25") == "Text: 1 Bottle Water 1,25"
    with pytest.raises(TypeError):
        format_announcement(3.5)


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(debounce=0)
    with pytest.raises(ConfigError):
        PipelineConfig(stages=())
    with pytest.raises(ConfigError):
        PipelineConfig(stages=("detect",))
    with pytest.raises(ConfigError):
        PipelineConfig(stages=("ocr",))
    with pytest.raises(ConfigError):
        PipelineConfig(stages=("teleport",))
    with pytest.raises(ConfigError):
        PipelineConfig(tensor_source="command")


def test_barcode_only_frame():
    res = process_frame(encode_ean13(FIG8), None, PipelineConfig(stages=("barcode",)))
    assert res.barcode.digits == FIG8
    assert res.detections == [] and res.qr is None and res.exit_sign is None and res.text_lines == []


def _quiet_tensors():
    t32 = np.full((13, 13, 3, 10), -8.0, np.float32)
    t16 = np.full((26, 26, 3, 10), -8.0, np.float32)
    return [TensorFile(t32, 32), TensorFile(t16, 16)]


def test_blank_all_stages(tmp_path):
    cfg = PipelineConfig(stages=("detect", "barcode", "qr", "exit", "ocr"), classes=FIVE,
                         ocr_cmd=f"{sys.executable} -c print(1) {{input}}")
    res = process_frame(blank(200, 120), _quiet_tensors(), cfg)
    assert res == FrameResult(0)


def test_detect_needs_tensors():
    with pytest.raises(ConfigError):
        process_frame(blank(), None, PipelineConfig(stages=("detect",), classes=FIVE))


def test_findings_order_and_dedup():
    d = Detection(PixelBox(0, 0, 1, 1), 2, 0.9, "Tide")
    res = FrameResult(3, detections=[d, d], barcode=BarcodePayload(FIG8, "EAN-13", True), text_lines=["a", " ", "a"])
    assert findings(res) == [("object", "Tide detected"), ("barcode", "Barcode: " + FIG8), ("text", "Text: a")]


def test_speak_stdout(capsys):
    rec = speak(Announcement("exit", "EXIT sign ahead", 0))
    assert capsys.readouterr().out == "EXIT sign ahead\n"
    assert rec.ok and rec.sink == "stream"


def test_speak_stub_and_failure(tmp_path):
    target = tmp_path / "said.txt"
    cmd = f"{sys.executable} -c \"import sys; open({str(target)!r}, 'w').write(sys.argv[1])\" {{text}}"
    rec = speak(Announcement("barcode", "Barcode: " + FIG8, 1), cmd)
    assert rec.ok and target.read_text() == "Barcode: " + FIG8
    bad = speak(Announcement("exit", "EXIT sign ahead", 1), f"{sys.executable} -c 'import sys; sys.exit(4)'")
    assert not bad.ok and "exit 4" in bad.error
    missing = speak(Announcement("exit", "EXIT sign ahead", 1), "/nonexistent/tts {text}")
    assert not missing.ok


def test_speaker_is_bounded():
    slow = f"{sys.executable} -c 'import time; time.sleep(0.3)' {{text}}"
    sp = Speaker(slow)
    t0 = time.monotonic()
    accepted = [sp.say(Announcement("text", f"Text: {i}", i)) for i in range(10)]
    assert time.monotonic() - t0 < 0.3
    sp.close()
    assert sum(accepted) == 4
    assert sum(d.sink == "dropped" for d in sp.deliveries) == 6


def test_pipeline_barcode_sequence(tmp_path):
    frames = write_barcode_sequence(tmp_path / "f")
    out = io.StringIO()
    assert run_pipeline(frames, PipelineConfig(), out) == 0
    events = [json.loads(l) for l in out.getvalue().splitlines()]
    ann = [e for e in events if e["event"] == "announcement"]
    assert ann == [{"event": "announcement", "frame_index": 2, "kind": "barcode", "payload": "Barcode: " + FIG8}]
    assert [e["frame_index"] for e in events if e["event"] == "frame"] == list(range(10))
    assert events[-1]["counts"]["barcode"] == 1
    # announcements carry exactly the stage result
    frame2 = next(e for e in events if e["event"] == "frame" and e["frame_index"] == 2)
    assert ann[0]["payload"] == "Barcode: " + frame2["barcode"]


def test_pipeline_empty_dir(tmp_path):
    out = io.StringIO()
    (tmp_path / "empty").mkdir()
    assert run_pipeline(tmp_path / "empty", PipelineConfig(), out) == 0
    (summary,) = [json.loads(l) for l in out.getvalue().splitlines()]
    assert summary["event"] == "summary" and set(summary["counts"].values()) == {0}


def _object_tensor(cls_id, cell=(5, 5)):
    v = np.full((13, 13, 3, 10), -8.0, np.float32)
    v[cell[0], cell[1], 0, 4] = 6.0
    v[cell[0], cell[1], 0, 5 + cls_id] = 6.0
    return TensorFile(v, 32)


def test_pipeline_two_objects(tmp_path):
    root = tmp_path / "objs"
    root.mkdir()
    for i in range(12):
        write_image(root / f"f{i:02d}.pgm", blank(80, 80))
        write_tensor(root / f"f{i:02d}.snt", _object_tensor(1 if i < 6 else 2))
    out = io.StringIO()
    cfg = PipelineConfig(stages=("detect",), classes=FIVE)
    assert run_pipeline(root, cfg, out) == 0
    events = [json.loads(l) for l in out.getvalue().splitlines()]
    ann = [(e["frame_index"], e["payload"]) for e in events if e["event"] == "announcement"]
    assert ann == [(0, "Lays detected"), (6, "Tide detected")]


def test_pipeline_bad_frame(tmp_path):
    root = write_barcode_sequence(tmp_path / "f", frames=3)
    (root / "frame_001.pgm").write_bytes(b"P5 10 10 255\n\0")
    out = io.StringIO()
    assert run_pipeline(root, PipelineConfig(), out) == 1
    events = [json.loads(l) for l in out.getvalue().splitlines()]
    err = next(e for e in events if e["event"] == "error")
    assert err["frame_index"] == 1 and "frame_001.pgm" in err["message"]
    assert events[-1]["errors"] == 1 and events[-1]["frames"] == 3


def test_missing_sidecar_is_tagged(tmp_path):
    root = tmp_path / "f"
    root.mkdir()
    write_image(root / "a.pgm", blank(40, 40))
    out = io.StringIO()
    assert run_pipeline(root, PipelineConfig(stages=("detect",), classes=FIVE), out) == 1
    err = json.loads(out.getvalue().splitlines()[0])
    assert err["stage"] == "detect"


def test_speech_failure_does_not_change_stream(tmp_path):
    frames = write_barcode_sequence(tmp_path / "f")
    a, b = io.StringIO(), io.StringIO()
    run_pipeline(frames, PipelineConfig(), a)
    sp = Speaker(f"{sys.executable} -c 'import sys; sys.exit(1)'")
    run_pipeline(frames, PipelineConfig(), b, sp)
    sp.close()
    assert a.getvalue() == b.getvalue()
    assert sp.deliveries and not any(d.ok for d in sp.deliveries)


def test_ocr_stage_lines(tmp_path):
    from helpers import receipt_image

    img, _ = receipt_image(2)
    cmd = f"{sys.executable} -c \"print('1 Bottle Water 1,25')\" {{input}}"
    res = process_frame(img, None, PipelineConfig(stages=("ocr",), ocr_cmd=cmd))
    assert res.text_lines == ["1 Bottle Water 1,25"] * 2
    assert findings(res) == [("text", "Text: 1 Bottle Water 1,25")]
