"""Kronecker-substitution products of integral polynomials over O_K.

A polynomial over O_K is handled as ``d = e*r`` integer polynomials, one per
basis element ``pi**i * zeta**j``. Each integer polynomial is packed into a
single big integer (one fixed-width slot per coefficient) so that a product of
packed integers is the packed product of polynomials; the ring relations are
applied afterwards on plain integer vectors.
"""

from __future__ import annotations

from .ring import RingConfig

Components = list[list[int]]


def _slot_bytes(ring: RingConfig, length: int) -> int:
    bound = ring.d * max(length, 1) * ring.modulus * ring.modulus
    return (bound.bit_length() + 8) // 8


def _pack(vec: list[int], nbytes: int) -> int:
    return int.from_bytes(b"".join(x.to_bytes(nbytes, "little") for x in vec), "little")


def _unpack(x: int, nbytes: int, length: int) -> list[int]:
    x &= (1 << (8 * nbytes * length)) - 1
    raw = x.to_bytes(nbytes * length, "little")
    return [int.from_bytes(raw[k * nbytes:(k + 1) * nbytes], "little") for k in range(length)]


def nonneg(ring: RingConfig, comps: Components) -> Components:
    M = ring.modulus
    return [[x % M for x in row] for row in comps]


def mul(ring: RingConfig, A: Components, B: Components, length: int) -> Components:
    """Product of two component polynomials truncated to ``length`` coefficients.

    Inputs must be reduced to ``[0, M)``; the output is reduced the same way.
    """
    e, r, d, M = ring.e, ring.r, ring.d, ring.modulus
    A = [row[:length] for row in A]
    B = [row[:length] for row in B]
    la = max(len(row) for row in A)
    lb = max(len(row) for row in B)
    nb = _slot_bytes(ring, min(la, lb))
    pa = [_pack(row, nb) if any(row) else 0 for row in A]
    pb = [_pack(row, nb) if any(row) else 0 for row in B]
    acc: dict[tuple[int, int], int] = {}
    for ia in range(e):
        for ja in range(r):
            x = pa[ia * r + ja]
            if not x:
                continue
            for ib in range(e):
                for jb in range(r):
                    y = pb[ib * r + jb]
                    if y:
                        key = (ia + ib, ja + jb)
                        acc[key] = acc.get(key, 0) + x * y
    if d == 1:
        prod = acc.get((0, 0), 0)
        return [[v % M for v in _unpack(prod, nb, length)]]
    grid = [[None] * (2 * r - 1) for _ in range(2 * e - 1)]
    for (i, j), val in acc.items():
        grid[i][j] = _unpack(val, nb, length)
    zero = [0] * length
    for i in range(2 * e - 1):
        for j in range(2 * r - 1):
            if grid[i][j] is None:
                grid[i][j] = list(zero)
    h, E = ring.h, ring.E
    for row in grid:
        for j in range(2 * r - 2, r - 1, -1):
            c = row[j]
            if any(c):
                for k in range(r):
                    if h[k]:
                        tgt, hk = row[j - r + k], h[k]
                        for n in range(length):
                            tgt[n] -= hk * c[n]
    for i in range(2 * e - 2, e - 1, -1):
        row = grid[i]
        for k in range(e):
            if E[k]:
                tgt_row, Ek = grid[i - e + k], E[k]
                for j in range(r):
                    src, tgt = row[j], tgt_row[j]
                    if any(src):
                        for n in range(length):
                            tgt[n] -= Ek * src[n]
    return [[v % M for v in grid[i][j]] for i in range(e) for j in range(r)]


def add(ring: RingConfig, A: Components, B: Components) -> Components:
    M = ring.modulus
    out = []
    for ra, rb in zip(A, B):
        n = max(len(ra), len(rb))
        ra = ra + [0] * (n - len(ra))
        rb = rb + [0] * (n - len(rb))
        out.append([(x + y) % M for x, y in zip(ra, rb)])
    return out


def compose(ring: RingConfig, S: Components, T: Components, length: int) -> Components:
    """Horner evaluation of S(T) with T free of constant term, truncated."""
    deg = 0
    for row in S:
        for k in range(min(len(row), length) - 1, -1, -1):
            if row[k]:
                deg = max(deg, k)
                break
    result = [[row[deg] if deg < len(row) else 0] for row in S]
    for k in range(deg - 1, -1, -1):
        result = mul(ring, result, T, length)
        for j, row in enumerate(S):
            if k < len(row) and row[k]:
                result[j][0] = (result[j][0] + row[k]) % ring.modulus
    return [row + [0] * (length - len(row)) for row in result]
