"""YOLOv4-tiny head post-processing: SANT tensors, grid decode, filtering, NMS."""
from __future__ import annotations

import shlex
import struct
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import ClassList, PixelBox, iou
from .errors import ConfigError, ParseError

MAGIC = b"SANT"
_HEADER = struct.Struct("<4s4II")
MAX_VALUES = 1 << 28

INPUT_SIZE = 416
# stride -> anchors (pw, ph), upstream yolov4-tiny conventions
DEFAULT_ANCHORS = {
    32: ((81.0, 82.0), (135.0, 169.0), (344.0, 319.0)),
    16: ((23.0, 27.0), (37.0, 58.0), (81.0, 82.0)),
}
DEFAULT_CONF = 0.25
DEFAULT_NMS_IOU = 0.45


@dataclass(frozen=True, eq=False)
class TensorFile:
    """Raw head output shaped ``[grid_h, grid_w, anchors, 5 + classes]``."""

    values: np.ndarray
    stride: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype="<f4")
        if v.ndim != 4:
            raise ParseError(f"tensor must be 4-D, got shape {v.shape}")
        if v.shape[3] < 6:
            raise ParseError(f"last dim must be >= 6, got {v.shape[3]}")
        if self.stride < 1:
            raise ParseError(f"stride must be >= 1, got {self.stride}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dims(self) -> tuple:
        return tuple(self.values.shape)

    @property
    def num_classes(self) -> int:
        return self.values.shape[3] - 5

    def __eq__(self, other):
        if not isinstance(other, TensorFile):
            return NotImplemented
        return self.stride == other.stride and np.array_equal(self.values, other.values)


def load_tensor(data: bytes) -> TensorFile:
    if len(data) < _HEADER.size:
        raise ParseError("truncated header", offset=len(data))
    magic, gh, gw, na, depth, stride = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}", offset=0)
    count = gh * gw * na * depth
    if count == 0 or count > MAX_VALUES:
        raise ParseError(f"dimension overflow {gh}x{gw}x{na}x{depth}", offset=4)
    need = _HEADER.size + 4 * count
    if len(data) < need:
        raise ParseError(f"truncated payload: need {need} bytes, have {len(data)}", offset=len(data))
    vals = np.frombuffer(data, dtype="<f4", count=count, offset=_HEADER.size)
    return TensorFile(vals.reshape(gh, gw, na, depth), stride)


def dump_tensor(t: TensorFile) -> bytes:
    gh, gw, na, depth = t.dims
    return _HEADER.pack(MAGIC, gh, gw, na, depth, t.stride) + t.values.astype("<f4").tobytes()


def read_tensor(path) -> TensorFile:
    return load_tensor(Path(path).read_bytes())


def write_tensor(path, t: TensorFile) -> None:
    Path(path).write_bytes(dump_tensor(t))


@dataclass(frozen=True)
class Anchor:
    pw: float
    ph: float

    def __post_init__(self):
        if not (self.pw > 0 and self.ph > 0):
            raise ConfigError(f"anchor sizes must be positive, got {self.pw}x{self.ph}")


@dataclass(frozen=True)
class Candidate:
    box: PixelBox
    scores: tuple


@dataclass(frozen=True)
class Detection:
    box: PixelBox
    class_id: int
    score: float
    class_name: str = ""

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "class_name": self.class_name,
            "score": round(float(self.score), 6),
            "box": [round(float(v), 3) for v in self.box.as_tuple()],
        }


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def decode_grid_arrays(t: TensorFile, anchors):
    """Vectorized decode: returns (boxes[N,4] xmin,ymin,xmax,ymax, scores[N,C])."""
    gh, gw, na, _ = t.dims
    anchors = [a if isinstance(a, Anchor) else Anchor(*a) for a in anchors]
    if len(anchors) != na:
        raise ConfigError(f"tensor has {na} anchors per cell but {len(anchors)} configured")
    v = t.values.astype(np.float64)
    cols = np.arange(gw, dtype=np.float64)[None, :, None]
    rows = np.arange(gh, dtype=np.float64)[:, None, None]
    pw = np.array([a.pw for a in anchors])[None, None, :]
    ph = np.array([a.ph for a in anchors])[None, None, :]
    bx = (sigmoid(v[..., 0]) + cols) * t.stride
    by = (sigmoid(v[..., 1]) + rows) * t.stride
    bw = pw * np.exp(v[..., 2])
    bh = ph * np.exp(v[..., 3])
    scores = sigmoid(v[..., 4])[..., None] * sigmoid(v[..., 5:])
    boxes = np.stack([bx - bw / 2, by - bh / 2, bx + bw / 2, by + bh / 2], axis=-1)
    return boxes.reshape(-1, 4), scores.reshape(-1, t.num_classes)


def decode_yolo_grid(t: TensorFile, anchors) -> list[Candidate]:
    """One candidate per (row, col, anchor) in row-major order."""
    boxes, scores = decode_grid_arrays(t, anchors)
    return [
        Candidate(PixelBox(*map(float, b)), tuple(map(float, s))) for b, s in zip(boxes, scores)
    ]


def filter_by_confidence(cands, conf_threshold: float) -> list[Detection]:
    out = []
    for c in cands:
        cid = int(np.argmax(c.scores))  # first max wins
        score = c.scores[cid]
        if score >= conf_threshold:
            out.append(Detection(c.box, cid, float(score)))
    return out


def nms(dets, iou_threshold: float) -> list[Detection]:
    """Greedy per-class suppression; output ordered by score descending."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].class_id, i))
    kept: list[Detection] = []
    by_class: dict[int, list[PixelBox]] = {}
    for i in order:
        d = dets[i]
        survivors = by_class.setdefault(d.class_id, [])
        if any(iou(d.box, k) > iou_threshold for k in survivors):
            continue
        survivors.append(d.box)
        kept.append(d)
    return kept


def label_detections(dets, classes: ClassList) -> list[Detection]:
    out = []
    for d in dets:
        if not 0 <= d.class_id < len(classes):
            raise ConfigError(f"class id {d.class_id} out of range for {len(classes)} classes")
        out.append(replace(d, class_name=classes[d.class_id]))
    return out


@dataclass
class DetectConfig:
    conf_threshold: float = DEFAULT_CONF
    nms_iou: float = DEFAULT_NMS_IOU
    anchors: dict = field(default_factory=lambda: dict(DEFAULT_ANCHORS))

    def anchors_for(self, t: TensorFile):
        try:
            return self.anchors[t.stride]
        except KeyError:
            raise ConfigError(f"no anchors configured for stride {t.stride}") from None


def detect(tensors, classes: ClassList, cfg: DetectConfig | None = None) -> list[Detection]:
    """Decode every scale, filter, merge, suppress, and label."""
    cfg = cfg or DetectConfig()
    dets = []
    for t in tensors:
        dets += filter_by_confidence(decode_yolo_grid(t, cfg.anchors_for(t)), cfg.conf_threshold)
    return label_detections(nms(dets, cfg.nms_iou), classes)


def run_inference_command(image_path, command: str) -> list[TensorFile]:
    """Run an external inference command that writes SANT files.

    ``command`` may use ``{input}`` (image path) and ``{output}`` (a directory
    the command fills with ``*.snt`` files).
    """
    if not command:
        raise ConfigError("no inference command configured")
    with tempfile.TemporaryDirectory(prefix="sanip-infer-") as out:
        argv = [
            a.replace("{input}", str(image_path)).replace("{output}", out)
            for a in shlex.split(command)
        ]
        proc = subprocess.run(argv, capture_output=True)
        if proc.returncode != 0:
            raise ConfigError(
                f"inference command exited {proc.returncode}: "
                f"{proc.stderr.decode('utf-8', 'replace').strip()}"
            )
        return [read_tensor(p) for p in sorted(Path(out).glob("*.snt"))]
