"""``sanip`` command line. Results go to stdout, diagnostics to stderr."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import assistant
from .barcode import DEFAULT_ROWS, decode_image
from .dataset import load_class_list, validate_directory
from .detect import DEFAULT_CONF, DEFAULT_NMS_IOU, DetectConfig, detect, read_tensor
from .errors import NotFoundError, SanipError, StageError
from .qr import decode_qr
from .raster import read_image
from .textloc import EXIT_THRESHOLD, detect_exit_sign

log = logging.getLogger("sanip")


def _err(msg):
    print(f"sanip: {msg}", file=sys.stderr)


def _classes(path):
    if path is None:
        return None
    return load_class_list(Path(path).read_text(encoding="utf-8"))


def _stages(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def cmd_pipeline(args) -> int:
    classes = _classes(args.classes)
    if args.stages is not None:
        stages = _stages(args.stages)
    else:
        # every stage whose inputs are configured
        stages = tuple(
            s for s in assistant.STAGES
            if (s != "detect" or classes is not None) and (s != "ocr" or args.ocr_cmd)
        )
    cfg = assistant.PipelineConfig(
        conf_threshold=args.conf,
        nms_iou=args.nms_iou,
        debounce=args.debounce,
        stages=stages,
        classes=classes,
        ocr_cmd=args.ocr_cmd,
        tts_cmd=args.tts_cmd,
        infer_cmd=args.infer_cmd,
        tensor_source="command" if args.infer_cmd else "file",
    )
    # stdout carries the event stream, so untethered speech goes to stderr
    speaker = assistant.Speaker(args.tts_cmd, stream=sys.stderr) if not args.quiet else None
    try:
        return assistant.run_pipeline(args.frames, cfg, sys.stdout, speaker)
    finally:
        if speaker is not None:
            speaker.close()


def cmd_detect(args) -> int:
    classes = _classes(args.classes)
    tensors = [read_tensor(p) for p in args.tensor]
    for d in detect(tensors, classes, DetectConfig(args.conf, args.nms_iou)):
        print(json.dumps(d.to_dict()))
    return 0


def cmd_barcode(args) -> int:
    try:
        payload = decode_image(read_image(args.image), args.rows)
    except NotFoundError as exc:
        _err(str(exc))
        print("NOT_FOUND")
        return 1
    print(payload.digits)
    return 0


def cmd_qr(args) -> int:
    try:
        res = decode_qr(read_image(args.image))
    except StageError as exc:
        _err(f"qr {exc}")
        return 1
    if args.verbose:
        _err(f"version {res.version} level {res.ec_level} mask {res.mask_id} corrections {res.corrections}")
    print(res.data.text)
    return 0


def cmd_exit_sign(args) -> int:
    m = detect_exit_sign(read_image(args.image), threshold=args.threshold)
    if m is None:
        print("NOT_FOUND")
        return 1
    print(json.dumps({"score": round(m.score, 6), "scale": m.scale, "box": list(m.location.as_tuple())}))
    return 0


def cmd_dataset_validate(args) -> int:
    report = validate_directory(args.dir, _classes(args.classes))
    if args.json:
        for rec in report.records():
            print(json.dumps(rec))
    else:
        for line in report.lines():
            print(line)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sanip", description="Shopping-assistant decode stack.")
    p.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("pipeline", help="run all detectors over a frame directory")
    pp.add_argument("--frames", required=True, help="directory of PNM frames (sorted by name)")
    pp.add_argument("--classes", help="class list, one name per line")
    pp.add_argument("--conf", type=float, default=DEFAULT_CONF)
    pp.add_argument("--nms-iou", type=float, default=DEFAULT_NMS_IOU)
    pp.add_argument("--debounce", type=int, default=assistant.DEFAULT_DEBOUNCE)
    pp.add_argument("--stages", help="comma list of " + ",".join(assistant.STAGES))
    pp.add_argument("--tts-cmd", help="speech command template, {text} is substituted")
    pp.add_argument("--ocr-cmd", help="OCR command template, {input} is an image path")
    pp.add_argument("--infer-cmd", help="inference command template with {input} and {output}")
    pp.add_argument("--quiet", action="store_true", help="do not speak announcements")
    pp.set_defaults(func=cmd_pipeline)

    dp = sub.add_parser("detect", help="decode YOLO head tensors")
    dp.add_argument("--tensor", action="append", required=True, help="SANT file (repeatable)")
    dp.add_argument("--classes", required=True)
    dp.add_argument("--conf", type=float, default=DEFAULT_CONF)
    dp.add_argument("--nms-iou", type=float, default=DEFAULT_NMS_IOU)
    dp.set_defaults(func=cmd_detect)

    bp = sub.add_parser("barcode", help="decode an EAN-13 / UPC-A symbol")
    bp.add_argument("--image", required=True)
    bp.add_argument("--rows", type=int, default=DEFAULT_ROWS)
    bp.set_defaults(func=cmd_barcode)

    qp = sub.add_parser("qr", help="decode a QR symbol (versions 1-6)")
    qp.add_argument("--image", required=True)
    qp.set_defaults(func=cmd_qr)

    ep = sub.add_parser("exit-sign", help="match the EXIT template")
    ep.add_argument("--image", required=True)
    ep.add_argument("--threshold", type=float, default=EXIT_THRESHOLD)
    ep.set_defaults(func=cmd_exit_sign)

    ds = sub.add_parser("dataset", help="dataset utilities")
    dsub = ds.add_subparsers(dest="action", required=True)
    vp = dsub.add_parser("validate", help="check a YOLO-format annotation folder")
    vp.add_argument("dir")
    vp.add_argument("--classes", help="class list (default: DIR/classes.txt)")
    vp.add_argument("--json", action="store_true", help="JSON-lines output")
    vp.set_defaults(func=cmd_dataset_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (SanipError, OSError) as exc:
        _err(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
