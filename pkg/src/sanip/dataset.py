"""LabelImg-style YOLO annotations, class lists, and box geometry."""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field

from .errors import ParseError

COORD_TOL = 1e-6
DEFAULT_CLASSES = ("Parle-G", "Lays", "Tide", "Cart", "EXIT")


@dataclass(frozen=True)
class ClassList:
    names: tuple = ()

    def __post_init__(self):
        names = tuple(self.names)
        seen = set()
        for name in names:
            if not name or "\n" in name or "\r" in name:
                raise ParseError(f"invalid class name {name!r}")
            if name in seen:
                raise ParseError(f"duplicate class name {name!r}")
            seen.add(name)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, idx):
        return self.names[idx]

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


def load_class_list(text: str) -> ClassList:
    names = [line.rstrip() for line in text.splitlines()]
    return ClassList(tuple(n for n in names if n))


def dump_class_list(classes: ClassList) -> str:
    return "".join(f"{n}\n" for n in classes)


@dataclass(frozen=True)
class AnnotationRecord:
    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def problems(self) -> list[str]:
        out = []
        if self.class_id < 0:
            out.append(f"negative class id {self.class_id}")
        for name in ("cx", "cy"):
            v = getattr(self, name)
            if not (-COORD_TOL <= v <= 1 + COORD_TOL):
                out.append(f"{name}={v} outside [0,1]")
        for name in ("w", "h"):
            v = getattr(self, name)
            if not (0 < v <= 1 + COORD_TOL):
                out.append(f"{name}={v} outside (0,1]")
        return out


@dataclass(frozen=True)
class PixelBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(f"inverted box {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.xmin + self.xmax) / 2, (self.ymin + self.ymax) / 2

    def union(self, other: "PixelBox") -> "PixelBox":
        return PixelBox(
            min(self.xmin, other.xmin),
            min(self.ymin, other.ymin),
            max(self.xmax, other.xmax),
            max(self.ymax, other.ymax),
        )

    def as_tuple(self):
        return (self.xmin, self.ymin, self.xmax, self.ymax)


def parse_yolo_annotation(text: str, classes: ClassList) -> list[AnnotationRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", line=lineno)
        try:
            class_id = int(fields[0])
            cx, cy, w, h = (float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in (cx, cy, w, h)):
            raise ParseError("non-finite coordinate", line=lineno)
        if not 0 <= class_id < len(classes):
            raise ParseError(
                f"class id {class_id} out of range for {len(classes)} classes", line=lineno
            )
        rec = AnnotationRecord(class_id, cx, cy, w, h)
        bad = rec.problems()
        if bad:
            raise ParseError("; ".join(bad), line=lineno)
        records.append(rec)
    return records


def emit_yolo_annotation(records) -> str:
    return "".join(
        f"{r.class_id} {r.cx:.6f} {r.cy:.6f} {r.w:.6f} {r.h:.6f}\n" for r in records
    ).rstrip("\n")


def normalized_to_pixel(r: AnnotationRecord, img_w: float, img_h: float) -> PixelBox:
    def clamp(v, hi):
        return min(max(v, 0.0), hi)

    return PixelBox(
        clamp((r.cx - r.w / 2) * img_w, img_w),
        clamp((r.cy - r.h / 2) * img_h, img_h),
        clamp((r.cx + r.w / 2) * img_w, img_w),
        clamp((r.cy + r.h / 2) * img_h, img_h),
    )


def pixel_to_normalized(box: PixelBox, img_w: float, img_h: float, class_id: int = 0):
    return AnnotationRecord(
        class_id,
        (box.xmin + box.xmax) / 2 / img_w,
        (box.ymin + box.ymax) / 2 / img_h,
        box.width / img_w,
        box.height / img_h,
    )


def iou(a: PixelBox, b: PixelBox) -> float:
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def parse_voc_xml(text: str) -> list[tuple[str, PixelBox]]:
    """Best-effort read of a PASCAL VOC file; returns (name, box) pairs."""
    root = ET.fromstring(text)
    out = []
    for obj in root.iter("object"):
        name = (obj.findtext("name") or "").strip()
        bb = obj.find("bndbox")
        if bb is None or not name:
            continue
        try:
            coords = [float(bb.findtext(k)) for k in ("xmin", "ymin", "xmax", "ymax")]
        except (TypeError, ValueError):
            continue
        out.append((name, PixelBox(*coords)))
    return out


@dataclass
class ValidationReport:
    class_counts: dict = field(default_factory=dict)
    total_images: int = 0
    annotated_images: int = 0
    orphan_annotations: list = field(default_factory=list)
    unannotated_images: list = field(default_factory=list)
    malformed: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.malformed and not self.orphan_annotations

    @property
    def total(self) -> int:
        return self.annotated_images

    def lines(self) -> list[str]:
        out = [f"ok {str(self.ok).lower()}", f"images {self.total_images}", f"annotated {self.total}"]
        out += [f"class {name} {n}" for name, n in self.class_counts.items()]
        out += [f"orphan {o}" for o in self.orphan_annotations]
        out += [f"unannotated {u}" for u in self.unannotated_images]
        out += [f"malformed {name}:{line} {msg}" for name, line, msg in self.malformed]
        return out

    def records(self) -> list[dict]:
        """JSON-lines view."""
        out = [
            {"kind": "class_count", "class": name, "count": n}
            for name, n in self.class_counts.items()
        ]
        out += [{"kind": "orphan", "annotation": o} for o in self.orphan_annotations]
        out += [{"kind": "unannotated", "image": u} for u in self.unannotated_images]
        out += [
            {"kind": "malformed", "annotation": name, "line": line, "message": msg}
            for name, line, msg in self.malformed
        ]
        out.append(
            {
                "kind": "summary",
                "ok": self.ok,
                "images": self.total_images,
                "annotated": self.total,
            }
        )
        return out


_STEM = re.compile(r"^(.*?)(\.[^.]*)?$")


def _stem(name: str) -> str:
    return _STEM.match(name).group(1)


def validate_dataset(images, annotations: dict, classes: ClassList) -> ValidationReport:
    """Cross-check image names against ``{annotation name: text}``.

    Per-class counts are the number of annotated images containing the class.
    An annotation whose stem has no image is an orphan and makes the report
    not ok, as does any malformed line.
    """
    report = ValidationReport(class_counts={n: 0 for n in classes})
    image_stems = {_stem(n): n for n in images}
    ann_stems = {}
    report.total_images = len(image_stems)
    for ann_name in sorted(annotations):
        stem = _stem(ann_name)
        ann_stems[stem] = ann_name
        if stem not in image_stems:
            report.orphan_annotations.append(ann_name)
            continue
        try:
            recs = parse_yolo_annotation(annotations[ann_name], classes)
        except ParseError as exc:
            report.malformed.append((ann_name, exc.line, str(exc)))
            continue
        report.annotated_images += 1
        for cid in sorted({r.class_id for r in recs}):
            report.class_counts[classes[cid]] += 1
    report.unannotated_images = sorted(
        name for stem, name in image_stems.items() if stem not in ann_stems
    )
    return report


IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".pgm", ".ppm", ".pnm", ".bmp"}


def validate_directory(path, classes: ClassList | None = None) -> ValidationReport:
    """Validate a LabelImg folder: images, ``<stem>.txt`` sidecars, classes.txt."""
    from pathlib import Path

    root = Path(path)
    if classes is None:
        classes = load_class_list((root / "classes.txt").read_text(encoding="utf-8"))
    images = [p.name for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES]
    annotations = {
        p.name: p.read_text(encoding="utf-8")
        for p in root.glob("*.txt")
        if p.name != "classes.txt"
    }
    return validate_dataset(images, annotations, classes)
