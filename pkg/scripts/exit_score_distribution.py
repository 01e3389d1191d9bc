"""NCC score distribution of the EXIT detector on positives and negatives.

Used to sanity-check the 0.70 decision threshold.

    python3 scripts/exit_score_distribution.py --n 100
"""
import argparse

import numpy as np

from sanip.raster import Image
from sanip.textloc import detect_exit_sign, render_exit


def best_score(px):
    m = detect_exit_sign(Image.from_array(px), threshold=-1.0)
    return m.score if m else float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--sigma", type=float, default=8.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rs = np.random.default_rng(args.seed)
    pos = []
    for k in range(args.n):
        scale = rs.uniform(0.5, 2.0)
        sign = render_exit(scale)
        px = np.full((max(160, sign.shape[0] + 20), max(240, sign.shape[1] + 20)), 255, np.uint8)
        y = rs.integers(0, px.shape[0] - sign.shape[0] + 1)
        x = rs.integers(0, px.shape[1] - sign.shape[1] + 1)
        px[y : y + sign.shape[0], x : x + sign.shape[1]] = sign
        px = np.clip(px + rs.normal(0, args.sigma, px.shape), 0, 255).astype(np.uint8)
        pos.append(best_score(px))
    neg = []
    for k in range(args.n):
        if k % 2:
            px = rs.integers(0, 256, (160, 240)).astype(np.uint8)
        else:
            px = np.clip(rs.normal(128, 30, (160, 240)), 0, 255).astype(np.uint8)
        neg.append(best_score(px))
    for name, s in (("positives", pos), ("negatives", neg)):
        s = np.asarray(s)
        print(f"{name:>9}: min {np.nanmin(s):.3f}  median {np.nanmedian(s):.3f}  max {np.nanmax(s):.3f}")
    print(f"positives >= 0.70: {np.mean(np.asarray(pos) >= 0.70):.1%}")
    print(f"negatives >= 0.70: {np.mean(np.asarray(neg) >= 0.70):.1%}")


if __name__ == "__main__":
    main()
