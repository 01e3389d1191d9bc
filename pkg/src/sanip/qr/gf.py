"""GF(256) arithmetic over x^8 + x^4 + x^3 + x^2 + 1 and Reed-Solomon coding.

Polynomials are lists of coefficients, highest degree first, matching the
order in which QR codeword bytes are transmitted.
"""
from __future__ import annotations

from ..errors import UncorrectableError

PRIMITIVE = 0x11D


class GF256:
    def __init__(self, primitive: int = PRIMITIVE):
        self.exp = [0] * 512
        self.log = [0] * 256
        x = 1
        for i in range(255):
            self.exp[i] = x
            self.log[x] = i
            x <<= 1
            if x & 0x100:
                x ^= primitive
        for i in range(255, 512):
            self.exp[i] = self.exp[i - 255]

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(256)")
        if a == 0:
            return 0
        return self.exp[(self.log[a] - self.log[b]) % 255]

    def inverse(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in GF(256)")
        return self.exp[255 - self.log[a]]

    def pow(self, a: int, n: int) -> int:
        if a == 0:
            return 0 if n else 1
        return self.exp[(self.log[a] * n) % 255]


GF = GF256()


def poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= GF.mul(a, b)
    return out


def poly_eval(p, x: int) -> int:
    """Horner evaluation, highest degree first."""
    y = 0
    for c in p:
        y = GF.mul(y, x) ^ c
    return y


_generators: dict[int, list[int]] = {}


def generator_poly(n_ec: int) -> list[int]:
    """prod_{i < n_ec} (x - a^i)."""
    if n_ec not in _generators:
        g = [1]
        for i in range(n_ec):
            g = poly_mul(g, [1, GF.exp[i]])
        _generators[n_ec] = g
    return _generators[n_ec]


def rs_encode(msg, n_ec: int) -> bytes:
    """Return ``msg`` followed by its ``n_ec`` parity bytes."""
    gen = generator_poly(n_ec)
    rem = list(msg) + [0] * n_ec
    for i in range(len(msg)):
        coef = rem[i]
        if coef:
            for j in range(1, len(gen)):
                rem[i + j] ^= GF.mul(gen[j], coef)
    return bytes(msg) + bytes(rem[len(msg) :])


def syndromes(codeword, n_ec: int) -> list[int]:
    return [poly_eval(codeword, GF.exp[j]) for j in range(n_ec)]


def berlekamp_massey(synd) -> list[int]:
    """Error locator Lambda(x), lowest degree first, Lambda(0) = 1."""
    lam = [1]
    prev = [1]
    length = 0
    shift = 1
    prev_disc = 1
    for k, s in enumerate(synd):
        disc = s
        for i in range(1, length + 1):
            if i < len(lam):
                disc ^= GF.mul(lam[i], synd[k - i])
        if disc == 0:
            shift += 1
            continue
        coef = GF.div(disc, prev_disc)
        update = [0] * shift + [GF.mul(coef, c) for c in prev]
        new = lam + [0] * max(0, len(update) - len(lam))
        for i, c in enumerate(update):
            new[i] ^= c
        if 2 * length <= k:
            prev, length, prev_disc, shift = lam, k + 1 - length, disc, 1
        else:
            shift += 1
        lam = new
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    if len(lam) - 1 != length:
        raise UncorrectableError("error locator degree inconsistent with syndromes")
    return lam


def _eval_low(p, x: int) -> int:
    y = 0
    for c in reversed(p):
        y = GF.mul(y, x) ^ c
    return y


def rs_decode(codeword, n_ec: int) -> tuple[bytes, int]:
    """Correct up to ``n_ec // 2`` byte errors.

    Returns ``(data bytes, number of corrections)``; raises
    UncorrectableError when the block cannot be repaired consistently.
    """
    if n_ec < 2:
        raise ValueError("need at least 2 parity bytes")
    cw = list(codeword)
    n = len(cw)
    if n <= n_ec or n > 255:
        raise ValueError(f"codeword length {n} invalid for {n_ec} parity bytes")
    synd = syndromes(cw, n_ec)
    if not any(synd):
        return bytes(cw[: n - n_ec]), 0

    lam = berlekamp_massey(synd)
    n_err = len(lam) - 1
    if n_err > n_ec // 2:
        raise UncorrectableError(f"{n_err} errors exceed capacity {n_ec // 2}")

    # Chien search: position p (0 = first byte) has locator X = a^(n-1-p)
    positions = []
    for p in range(n):
        x_inv = GF.exp[(255 - (n - 1 - p)) % 255]
        if _eval_low(lam, x_inv) == 0:
            positions.append(p)
    if len(positions) != n_err:
        raise UncorrectableError("error locator roots do not match its degree")

    # Forney, first consecutive root a^0: Y = X * Omega(X^-1) / Lambda'(X^-1)
    omega = [0] * n_ec
    for i, s in enumerate(synd):
        for j, l in enumerate(lam):
            if i + j < n_ec:
                omega[i + j] ^= GF.mul(s, l)
    dlam = [lam[i] if i % 2 == 1 else 0 for i in range(1, len(lam))]
    for p in positions:
        x = GF.exp[n - 1 - p]
        x_inv = GF.inverse(x)
        denom = _eval_low(dlam, x_inv)
        if denom == 0:
            raise UncorrectableError("zero derivative in Forney step")
        cw[p] ^= GF.mul(x, GF.div(_eval_low(omega, x_inv), denom))

    if any(syndromes(cw, n_ec)):
        raise UncorrectableError("residual syndromes after correction")
    return bytes(cw[: n - n_ec]), n_err
