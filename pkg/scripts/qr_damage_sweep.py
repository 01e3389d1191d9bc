"""QR decode rate versus damaged modules, per EC level.

Damage is a contiguous run of modules along the codeword placement path
(a burst, which stays within a few codewords) or scattered random modules.

    python3 scripts/qr_damage_sweep.py --version 3 --trials 50
"""
import argparse
import random

import numpy as np

from sanip.errors import StageError
from sanip.qr import QrMatrix, decode_qr, encode_matrix, render_matrix
from sanip.qr.matrix import zigzag_order


def damaged(m, frac, burst, rnd):
    mods = m.modules.copy()
    order = zigzag_order(m.version)
    k = int(round(frac * mods.size))
    if burst:
        start = rnd.randrange(0, len(order) - k)
        cells = order[start : start + k]
    else:
        cells = rnd.sample(order, k)
    for r, c in cells:
        mods[r, c] ^= True
    return QrMatrix(m.version, mods)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--version", type=int, default=2)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.0, 0.02, 0.04, 0.08, 0.12, 0.16])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rnd = random.Random(args.seed)
    text = "9789352607990"
    print(f"{'level':>5} {'damage':>7} {'burst':>7} {'scatter':>8}")
    for level in "LMQH":
        for frac in args.fractions:
            rates = []
            for burst in (True, False):
                ok = 0
                for t in range(args.trials):
                    m = encode_matrix(text, args.version, level, t % 8)
                    try:
                        ok += decode_qr(render_matrix(damaged(m, frac, burst, rnd), 4)).data.text == text
                    except StageError:
                        pass
                rates.append(ok / args.trials)
            print(f"{level:>5} {frac:>7.0%} {rates[0]:>7.0%} {rates[1]:>8.0%}")


if __name__ == "__main__":
    main()
