"""Per-frame detector pipeline, announcement debouncing, and the TTS sink."""
from __future__ import annotations

import json
import logging
import shlex
import subprocess
import sys
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import barcode as bc
from . import textloc
from .dataset import ClassList
from .detect import DetectConfig, Detection, detect, read_tensor, run_inference_command
from .errors import ConfigError, DecodeError, NotFoundError, SanipError, StageError
from .qr import decode_qr
from .raster import Image, read_image

log = logging.getLogger(__name__)

STAGES = ("detect", "barcode", "qr", "exit", "ocr")
KINDS = ("object", "barcode", "qr", "exit", "text")
FRAME_SUFFIXES = (".pgm", ".ppm", ".pnm")
DEFAULT_DEBOUNCE = 30
MAX_PENDING_SPEECH = 4


@dataclass
class PipelineConfig:
    conf_threshold: float = 0.25
    nms_iou: float = 0.45
    debounce: int = DEFAULT_DEBOUNCE
    stages: tuple = ("barcode", "qr", "exit")
    classes: ClassList | None = None
    ocr_cmd: str | None = None
    tts_cmd: str | None = None
    infer_cmd: str | None = None
    tensor_source: str = "file"  # "file": <stem>.snt sidecars; "command": infer_cmd
    barcode_rows: int = bc.DEFAULT_ROWS

    def __post_init__(self):
        self.stages = tuple(self.stages)
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stages: {', '.join(sorted(unknown))}")
        if not self.stages:
            raise ConfigError("at least one stage must be enabled")
        if self.debounce < 1:
            raise ConfigError("debounce window must be >= 1 frame")
        if "detect" in self.stages and self.classes is None:
            raise ConfigError("detect stage needs a class list")
        if self.tensor_source not in ("file", "command"):
            raise ConfigError(f"unknown tensor source {self.tensor_source!r}")
        if self.tensor_source == "command" and not self.infer_cmd:
            raise ConfigError("tensor source 'command' needs an inference command")
        if "ocr" in self.stages and not self.ocr_cmd:
            raise ConfigError("ocr stage needs an OCR command")

    def detect_config(self) -> DetectConfig:
        return DetectConfig(self.conf_threshold, self.nms_iou)


@dataclass
class FrameResult:
    frame_index: int
    detections: list = field(default_factory=list)
    barcode: bc.BarcodePayload | None = None
    qr: object = None  # SegmentData
    exit_sign: textloc.MatchResult | None = None
    text_lines: list = field(default_factory=list)
    source: str = ""

    def to_event(self) -> dict:
        ex = None
        if self.exit_sign is not None:
            ex = {
                "score": round(self.exit_sign.score, 6),
                "scale": self.exit_sign.scale,
                "box": [round(v, 3) for v in self.exit_sign.location.as_tuple()],
            }
        return {
            "event": "frame",
            "frame_index": self.frame_index,
            "source": self.source,
            "detections": [d.to_dict() for d in self.detections],
            "barcode": self.barcode.digits if self.barcode else None,
            "qr": self.qr.text if self.qr is not None else None,
            "exit_sign": ex,
            "text_lines": list(self.text_lines),
        }


@dataclass(frozen=True)
class Announcement:
    kind: str
    payload: str
    frame_index: int

    @property
    def key(self):
        return (self.kind, self.payload)

    def to_event(self) -> dict:
        return {
            "event": "announcement",
            "frame_index": self.frame_index,
            "kind": self.kind,
            "payload": self.payload,
        }


def format_announcement(finding) -> str:
    """Speech text for a stage result."""
    if isinstance(finding, Detection):
        text = f"{finding.class_name} detected"
    elif isinstance(finding, bc.BarcodePayload):
        text = f"Barcode: {finding.digits}"
    elif isinstance(finding, textloc.MatchResult):
        text = "EXIT sign ahead"
    elif hasattr(finding, "text") and hasattr(finding, "modes"):
        text = f"Code says: {finding.text}"
    elif isinstance(finding, str):
        text = f"Text: {finding}"
    else:
        raise TypeError(f"cannot announce {type(finding).__name__}")
    return text.rstrip()


def findings(result: FrameResult) -> list[tuple[str, str]]:
    """(kind, payload) candidates of a frame in stage order, deduplicated."""
    out = []
    for d in result.detections:
        out.append(("object", format_announcement(d)))
    if result.barcode is not None:
        out.append(("barcode", format_announcement(result.barcode)))
    if result.qr is not None and result.qr.text:
        out.append(("qr", format_announcement(result.qr)))
    if result.exit_sign is not None:
        out.append(("exit", format_announcement(result.exit_sign)))
    for line in result.text_lines:
        if line.strip():
            out.append(("text", format_announcement(line.strip())))
    seen = set()
    uniq = []
    for k in out:
        if k not in seen:
            seen.add(k)
            uniq.append(k)
    return uniq


def debounce(history: dict, candidates, frame_index: int, window: int) -> list[Announcement]:
    """Emit a key unless it was *emitted* within the last ``window`` frames.

    ``history`` maps key -> frame of its last emission and is updated in place
    for emitted keys only.
    """
    out = []
    for kind, payload in candidates:
        key = (kind, payload)
        last = history.get(key)
        if last is not None and frame_index - last <= window:
            continue
        history[key] = frame_index
        out.append(Announcement(kind, payload, frame_index))
    return out


@dataclass(frozen=True)
class Delivery:
    text: str
    sink: str
    ok: bool
    error: str = ""


def speak(a: Announcement | str, tts_cmd: str | None = None, stream=None) -> Delivery:
    """Hand one announcement to the offline TTS command, or print it."""
    text = a.payload if isinstance(a, Announcement) else a
    if not tts_cmd:
        out = stream if stream is not None else sys.stdout
        print(text, file=out, flush=True)
        return Delivery(text, "stream", True)
    try:
        argv = [part.replace("{text}", text) for part in shlex.split(tts_cmd)]
        if "{text}" not in tts_cmd:
            argv.append(text)
        proc = subprocess.run(argv, capture_output=True, timeout=30)
    except (OSError, ValueError, subprocess.TimeoutExpired) as exc:
        log.warning("tts failed: %s", exc)
        return Delivery(text, "command", False, str(exc))
    if proc.returncode != 0:
        err = proc.stderr.decode("utf-8", "replace").strip()
        log.warning("tts exited %d: %s", proc.returncode, err)
        return Delivery(text, "command", False, f"exit {proc.returncode}: {err}")
    return Delivery(text, "command", True)


class Speaker:
    """Fire-and-forget speech with at most ``MAX_PENDING_SPEECH`` queued.

    Announcements beyond the bound are dropped (and logged) so frame
    processing never waits on audio.
    """

    def __init__(self, tts_cmd=None, stream=None, max_pending=MAX_PENDING_SPEECH):
        self.tts_cmd = tts_cmd
        self.stream = stream
        self.max_pending = max_pending
        self.deliveries: list[Delivery] = []
        self._pending = 0
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="sanip-tts")

    def say(self, a: Announcement) -> bool:
        with self._lock:
            if self._pending >= self.max_pending:
                self.deliveries.append(Delivery(a.payload, "dropped", False, "queue full"))
                log.warning("speech queue full; dropped %r", a.payload)
                return False
            self._pending += 1
        self._pool.submit(self._run, a)
        return True

    def _run(self, a):
        try:
            d = speak(a, self.tts_cmd, self.stream)
        except Exception as exc:  # speech is best effort
            d = Delivery(a.payload, "command", False, str(exc))
        with self._lock:
            self._pending -= 1
            self.deliveries.append(d)

    def close(self):
        self._pool.shutdown(wait=True)


def _soft(stage, fn, *args):
    """Run a stage; 'nothing there' outcomes become None, others are hard errors."""
    try:
        return fn(*args)
    except StageError as exc:
        if isinstance(exc.cause, (NotFoundError, DecodeError)):
            return None
        raise StageError(stage, exc.cause) from exc
    except (NotFoundError, DecodeError):
        return None
    except (SanipError, OSError, ValueError) as exc:
        raise StageError(stage, exc) from exc


def process_frame(
    img: Image,
    tensors,
    cfg: PipelineConfig,
    frame_index: int = 0,
    source: str = "",
) -> FrameResult:
    res = FrameResult(frame_index, source=source)
    if "detect" in cfg.stages:
        if tensors is None:
            raise ConfigError("detect stage enabled but the frame has no tensors")
        res.detections = _soft("detect", detect, list(tensors), cfg.classes, cfg.detect_config()) or []
    if "barcode" in cfg.stages:
        res.barcode = _soft("barcode", bc.decode_image, img, cfg.barcode_rows)
    if "qr" in cfg.stages:
        qr = _soft("qr", decode_qr, img)
        res.qr = qr.data if qr is not None else None
    if "exit" in cfg.stages:
        res.exit_sign = _soft("exit", textloc.detect_exit_sign, img)
    if "ocr" in cfg.stages:
        lines = []
        for line in textloc.locate_text_lines(img):
            region = textloc.crop(img, line.bbox, pad=2)
            try:
                lines += textloc.run_external_ocr(region, cfg.ocr_cmd)
            except SanipError as exc:
                raise StageError("ocr", exc) from exc
        res.text_lines = lines
    return res


def list_frames(frames_dir) -> list[Path]:
    root = Path(frames_dir)
    if not root.is_dir():
        raise ConfigError(f"frame directory {root} does not exist")
    return sorted(p for p in root.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)


def frame_tensors(frame: Path) -> list[Path]:
    """``<stem>.snt`` and ``<stem>.<k>.snt`` sidecars next to a frame."""
    return sorted(frame.parent.glob(f"{frame.stem}.snt")) + sorted(
        frame.parent.glob(f"{frame.stem}.*.snt")
    )


def _frame_tensors(path: Path, cfg: PipelineConfig):
    try:
        if cfg.tensor_source == "command":
            return run_inference_command(path, cfg.infer_cmd)
        sidecars = frame_tensors(path)
        return [read_tensor(p) for p in sidecars] if sidecars else None
    except (SanipError, OSError) as exc:
        raise StageError("detect", exc) from exc


def _dumps(event: dict) -> str:
    return json.dumps(event, ensure_ascii=False, separators=(", ", ": "))


def run_pipeline(frames, cfg: PipelineConfig, out=None, speaker: Speaker | None = None) -> int:
    """Process frames in order, writing JSON-lines events to ``out``.

    ``frames`` is a directory or an ordered list of frame paths. Returns the
    process exit code: 0 iff no frame hit a hard error.
    """
    out = out if out is not None else sys.stdout
    paths = list_frames(frames) if isinstance(frames, (str, Path)) else [Path(p) for p in frames]
    history: dict = {}
    counts = Counter({k: 0 for k in KINDS})
    errors = 0
    for index, path in enumerate(paths):
        try:
            try:
                img = read_image(path)
            except (OSError, SanipError) as exc:
                raise StageError("read", SanipError(f"{path.name}: {exc}")) from exc
            tensors = None
            if "detect" in cfg.stages:
                tensors = _frame_tensors(path, cfg)
            try:
                result = process_frame(img, tensors, cfg, index, path.name)
            except ConfigError as exc:
                raise StageError("detect", exc) from exc
        except (StageError, SanipError, OSError) as exc:
            errors += 1
            stage = exc.stage if isinstance(exc, StageError) else "read"
            msg = str(exc.cause) if isinstance(exc, StageError) else str(exc)
            print(_dumps({"event": "error", "frame_index": index, "source": path.name,
                          "stage": stage, "message": msg}), file=out, flush=True)
            continue
        print(_dumps(result.to_event()), file=out, flush=True)
        for a in debounce(history, findings(result), index, cfg.debounce):
            counts[a.kind] += 1
            print(_dumps(a.to_event()), file=out, flush=True)
            if speaker is not None:
                speaker.say(a)
    print(_dumps({"event": "summary", "frames": len(paths), "errors": errors,
                  "counts": {k: counts[k] for k in KINDS}}), file=out, flush=True)
    return 0 if errors == 0 else 1
