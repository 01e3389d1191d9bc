"""Write a small frame directory exercising every stage of the pipeline.

    python3 scripts/make_demo_frames.py demo_frames
    sanip pipeline --frames demo_frames --classes demo_frames/classes.txt
"""
import argparse
from pathlib import Path

import numpy as np

from sanip.barcode import encode_ean13
from sanip.dataset import DEFAULT_CLASSES, ClassList, dump_class_list
from sanip.detect import TensorFile, write_tensor
from sanip.qr import encode_qr
from sanip.raster import Image, write_image
from sanip.textloc import render_exit

W, H = 420, 240


def canvas():
    return np.full((H, W), 255, np.uint8)


def paste(px, patch, y, x):
    px[y : y + patch.shape[0], x : x + patch.shape[1]] = patch
    return px


def tensors(class_id=None):
    """Head outputs with at most one confident box, for both default scales."""
    out = []
    for stride in (32, 16):
        g = 416 // stride
        v = np.full((g, g, 3, 5 + len(DEFAULT_CLASSES)), -8.0, np.float32)
        if class_id is not None and stride == 32:
            v[6, 6, 1, 4] = v[6, 6, 1, 5 + class_id] = 4.0
        out.append(TensorFile(v, stride))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    args = ap.parse_args()
    root = args.out
    root.mkdir(parents=True, exist_ok=True)
    (root / "classes.txt").write_text(dump_class_list(ClassList(DEFAULT_CLASSES)), encoding="utf-8")
    barcode = encode_ean13("9789352607990", module_px=3, quiet_px=30, height_px=80).pixels
    qr = encode_qr("https://example.com/item/9789352607990", 4, "M", 2, module_px=4).pixels
    frames = []
    frames += [(canvas(), 0)] * 3  # Parle-G held up
    frames += [(paste(canvas(), barcode, 60, 40), None)] * 4
    frames += [(paste(canvas(), qr, 10, 120), None)] * 3
    frames += [(paste(canvas(), render_exit(2.0), 70, 130), 4)] * 3
    frames += [(canvas(), None)] * 2
    for i, (px, cls) in enumerate(frames):
        stem = f"frame_{i:03d}"
        write_image(root / f"{stem}.pgm", Image.from_array(px))
        for k, t in enumerate(tensors(cls)):
            write_tensor(root / f"{stem}.{k}.snt", t)
    print(f"wrote {len(frames)} frames to {root}")


if __name__ == "__main__":
    main()
