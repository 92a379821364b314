"""Arithmetic in O_K = W(F_q)[pi]/(E(pi)) modulo p**n_prec.

An element is stored as a flat tuple of ``e * r`` integers; the entry at
index ``i * r + j`` is the coefficient of ``pi**i * zeta**j`` where ``zeta``
generates the unramified subring through ``h``. Residues are kept in the
balanced range ``(-M/2, M/2]`` with ``M = p**n_prec`` so that small integers
lift unchanged to a higher working precision.

The valuation is normalised so that ``valuation(p) == e``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import ConfigMismatch, InvalidConfig, NotAUnit

__all__ = [
    "RingConfig",
    "OKScalar",
    "ZERO_TO_PRECISION",
    "ZeroToPrecision",
    "coprimality_hypothesis",
    "embeds_in_Zp",
    "is_irreducible_mod_p",
    "vp",
]


class ZeroToPrecision:
    """Marker returned by valuations of elements that vanish to the working precision."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ZeroToPrecision"

    def __reduce__(self):
        return (ZeroToPrecision, ())


ZERO_TO_PRECISION = ZeroToPrecision()


def vp(x: int, p: int) -> float:
    """p-adic valuation of an integer; ``math.inf`` for zero."""
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# --- polynomials over F_p, ascending coefficient lists ---------------------

def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mod(a: list[int], m: list[int], p: int) -> list[int]:
    a = _fp_trim([x % p for x in a])
    inv = pow(m[-1], -1, p)
    dm = len(m) - 1
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv % p
        shift = len(a) - 1 - dm
        for k, mk in enumerate(m):
            a[shift + k] = (a[shift + k] - c * mk) % p
        _fp_trim(a)
    return a


def _fp_mulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _fp_mod(out, m, p)


def _fp_powmod(a: list[int], k: int, m: list[int], p: int) -> list[int]:
    result, base = [1], _fp_mod(a, m, p)
    while k:
        if k & 1:
            result = _fp_mulmod(result, base, m, p)
        base = _fp_mulmod(base, base, m, p)
        k >>= 1
    return result


def _fp_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _fp_trim([x % p for x in a]), _fp_trim([x % p for x in b])
    while b:
        a, b = b, _fp_mod(a, b, p)
    return a


def _fp_sub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _fp_trim([(x - y) % p for x, y in zip(a, b)])


def is_irreducible_mod_p(h: Sequence[int], p: int) -> bool:
    """Rabin's irreducibility test for a monic polynomial over F_p."""
    h = _fp_trim([x % p for x in h])
    r = len(h) - 1
    if r < 1:
        return False
    if r == 1:
        return True
    x = [0, 1]
    if _fp_sub(_fp_powmod(x, p**r, h, p), x, p):
        return False
    for q in _prime_factors(r):
        g = _fp_gcd(h, _fp_sub(_fp_powmod(x, p ** (r // q), h, p), x, p), p)
        if len(g) != 1:
            return False
    return True


def _default_h(p: int, r: int) -> tuple[int, ...]:
    if r == 1:
        return (0, 1)
    # smallest monic irreducible in lexicographic order of the low coefficients
    for code in range(p**r):
        low = [(code // p**k) % p for k in range(r)]
        if low[0] == 0:
            continue
        cand = low + [1]
        if is_irreducible_mod_p(cand, p):
            return tuple(cand)
    raise InvalidConfig(f"no irreducible polynomial of degree {r} mod {p}")


@dataclass(frozen=True)
class RingConfig:
    """The tower Z_p < W(F_q) < O_K together with the storage precision."""

    p: int
    r: int = 1
    e: int = 1
    h: tuple[int, ...] = ()
    E: tuple[int, ...] = ()
    n_prec: int = 20

    def __post_init__(self):
        p, r, e = self.p, self.r, self.e
        if not _is_prime(p):
            raise InvalidConfig(f"p={p} is not prime")
        if r < 1 or e < 1:
            raise InvalidConfig("residue degree and ramification index must be >= 1")
        if self.n_prec < 1:
            raise InvalidConfig("n_prec must be >= 1")
        for name, poly in (("h", self.h), ("E", self.E)):
            if any(isinstance(c, bool) or not isinstance(c, int) for c in poly):
                raise InvalidConfig(f"{name} must have integer coefficients")
        h = tuple(int(c) for c in self.h) if self.h else _default_h(p, r)
        E = tuple(int(c) for c in self.E) if self.E else (-p,) + (0,) * (e - 1) + (1,)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "E", E)
        if len(h) != r + 1 or h[-1] != 1:
            raise InvalidConfig(f"h must be monic of degree {r}")
        if not is_irreducible_mod_p(h, p):
            raise InvalidConfig(f"h={list(h)} is reducible modulo {p}")
        if len(E) != e + 1 or E[-1] != 1:
            raise InvalidConfig(f"E must be monic of degree {e}")
        if any(c % p for c in E[:-1]) or E[0] % (p * p) == 0:
            raise InvalidConfig(f"E={list(E)} is not Eisenstein at {p}")

    # ------------------------------------------------------------------ derived

    @cached_property
    def d(self) -> int:
        return self.e * self.r

    @cached_property
    def q(self) -> int:
        return self.p**self.r

    @cached_property
    def modulus(self) -> int:
        return self.p**self.n_prec

    @cached_property
    def capacity(self) -> int:
        """Valuation precision of storage: e * n_prec."""
        return self.e * self.n_prec

    @cached_property
    def _pi_inverse_data(self) -> tuple[tuple[int, ...], int]:
        # pi * (pi^(e-1) + E_{e-1} pi^(e-2) + ... + E_1) = -E_0 = p * w
        e, r = self.e, self.r
        Q = [0] * self.d
        for k in range(1, e + 1):
            Q[(k - 1) * r] = self.E[k]
        w = -self.E[0] // self.p
        return tuple(Q), pow(w, -1, self.modulus)

    def with_precision(self, n_prec: int) -> "RingConfig":
        return RingConfig(self.p, self.r, self.e, self.h, self.E, n_prec)

    def same_field(self, other: "RingConfig") -> bool:
        return (self.p, self.r, self.e, self.h, self.E) == (
            other.p, other.r, other.e, other.h, other.E)

    # ------------------------------------------------------------ raw tuples

    def reduce(self, c: Iterable[int]) -> tuple[int, ...]:
        M, half = self.modulus, self.modulus // 2
        out = []
        for x in c:
            x %= M
            out.append(x - M if x > half else x)
        return tuple(out)

    def raw_mul(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        """Exact integer product reduced by the relations h(zeta)=0, E(pi)=0."""
        e, r = self.e, self.r
        if self.d == 1:
            return [a[0] * b[0]]
        R, C = 2 * e - 1, 2 * r - 1
        acc = [[0] * C for _ in range(R)]
        for i1 in range(e):
            for j1 in range(r):
                x = a[i1 * r + j1]
                if not x:
                    continue
                for i2 in range(e):
                    row = acc[i1 + i2]
                    for j2 in range(r):
                        y = b[i2 * r + j2]
                        if y:
                            row[j1 + j2] += x * y
        return self._reduce_relations(acc)

    def _reduce_relations(self, acc: list[list[int]]) -> list[int]:
        e, r, h, E = self.e, self.r, self.h, self.E
        for row in acc:
            for j in range(len(row) - 1, r - 1, -1):
                c = row[j]
                if c:
                    row[j] = 0
                    for k in range(r):
                        if h[k]:
                            row[j - r + k] -= c * h[k]
        for i in range(len(acc) - 1, e - 1, -1):
            row = acc[i]
            if any(row):
                for k in range(e):
                    if E[k]:
                        tgt = acc[i - e + k]
                        for j in range(r):
                            tgt[j] -= E[k] * row[j]
                acc[i] = [0] * len(row)
        return [acc[i][j] for i in range(e) for j in range(r)]

    def mul_t(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        if self.d == 1:
            M, half = self.modulus, self.modulus // 2
            x = (a[0] * b[0]) % M
            return (x - M if x > half else x,)
        return self.reduce(self.raw_mul(a, b))

    def add_t(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return self.reduce(x + y for x, y in zip(a, b))

    def sub_t(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return self.reduce(x - y for x, y in zip(a, b))

    def val_t(self, a: Sequence[int]) -> float:
        """Valuation of a stored tuple; ``math.inf`` if it is zero mod p**n_prec."""
        p, e, r = self.p, self.e, self.r
        best = math.inf
        for i in range(e):
            if i >= best:
                break
            vrow = min(vp(a[i * r + j], p) for j in range(r))
            if vrow < math.inf:
                best = min(best, e * vrow + i)
        return best

    def pi_power_t(self, k: int) -> tuple[int, ...]:
        return self._pi_powers(k)

    def _pi_powers(self, k: int) -> tuple[int, ...]:
        cache = self.__dict__.setdefault("_pi_cache", {})
        if k not in cache:
            if k == 0:
                cache[k] = self.one_t()
            else:
                cache[k] = self.mul_t(self._pi_powers(k - 1), self.pi_t())
        return cache[k]

    def one_t(self) -> tuple[int, ...]:
        return (1,) + (0,) * (self.d - 1)

    def zero_t(self) -> tuple[int, ...]:
        return (0,) * self.d

    def pi_t(self) -> tuple[int, ...]:
        if self.e == 1:
            return self.reduce((-self.E[0],) + (0,) * (self.d - 1))
        t = [0] * self.d
        t[self.r] = 1
        return tuple(t)

    def from_int_t(self, n: int) -> tuple[int, ...]:
        return self.reduce((n,) + (0,) * (self.d - 1))

    def div_pi_t(self, a: Sequence[int], k: int = 1) -> tuple[int, ...]:
        """Divide an element of valuation >= k by pi**k.

        The result is only determined modulo pi**(e*n_prec - k); the caller
        tracks that loss.
        """
        Q, winv = self._pi_inverse_data
        p = self.p
        out = list(a)
        for _ in range(k):
            y = self.raw_mul(out, Q) if self.e > 1 else list(out)
            if any(c % p for c in y):
                raise ArithmeticError("element not divisible by pi")
            out = list(self.reduce((c // p) * winv for c in y))
        return tuple(out)

    def residue_t(self, a: Sequence[int]) -> tuple[int, ...]:
        return tuple(x % self.p for x in a[: self.r])

    def inverse_t(self, a: Sequence[int]) -> tuple[int, ...]:
        p, r = self.p, self.r
        res = self.residue_t(a)
        if not any(res):
            raise NotAUnit("element is not a unit")
        if r == 1:
            y0 = (pow(res[0], -1, p),) + (0,) * (self.d - 1)
        else:
            inv = _fp_powmod(list(res), self.q - 2, list(self.h), p)
            y0 = tuple(inv + [0] * (r - len(inv))) + (0,) * (self.d - r)
        y = self.reduce(y0)
        one = self.one_t()
        two = self.from_int_t(2)
        for _ in range(2 * (self.capacity.bit_length() + 2)):
            xy = self.mul_t(a, y)
            if xy == one:
                return y
            y = self.mul_t(y, self.sub_t(two, xy))
        raise ArithmeticError("Newton inversion failed to converge")

    # ------------------------------------------------------------ elements

    def element(self, c: Iterable[int] | int) -> "OKScalar":
        if isinstance(c, int):
            return OKScalar(self, self.from_int_t(c))
        c = tuple(c)
        if len(c) < self.d:
            c = c + (0,) * (self.d - len(c))
        if len(c) != self.d:
            raise InvalidConfig(f"expected {self.d} components, got {len(c)}")
        return OKScalar(self, self.reduce(c))

    def pi(self) -> "OKScalar":
        return OKScalar(self, self.pi_t())

    def zeta(self) -> "OKScalar":
        t = [0] * self.d
        if self.r > 1:
            t[1] = 1
        else:
            t[0] = -self.h[0]
        return OKScalar(self, self.reduce(t))

    # ------------------------------------------------------------ JSON

    def to_json(self) -> dict:
        return {"p": self.p, "r": self.r, "e": self.e, "h": list(self.h),
                "E": list(self.E), "n_prec": self.n_prec}

    @classmethod
    def from_json(cls, data: dict | str) -> "RingConfig":
        if isinstance(data, str):
            data = json.loads(data)
        unknown = set(data) - {"p", "r", "e", "h", "E", "n_prec"}
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        return cls(p=int(data["p"]), r=int(data.get("r", 1)), e=int(data.get("e", 1)),
                   h=tuple(data.get("h") or ()), E=tuple(data.get("E") or ()),
                   n_prec=int(data.get("n_prec", 20)))


@dataclass(frozen=True)
class OKScalar:
    """An element of O_K modulo p**n_prec, in canonical reduced form."""

    cfg: RingConfig = field(repr=False)
    c: tuple[int, ...]

    def _check(self, other: "OKScalar") -> None:
        if self.cfg != other.cfg:
            raise ConfigMismatch("operands belong to different ring configurations")

    def _coerce(self, other) -> "OKScalar":
        if isinstance(other, int):
            return self.cfg.element(other)
        self._check(other)
        return other

    def __add__(self, other) -> "OKScalar":
        other = self._coerce(other)
        return OKScalar(self.cfg, self.cfg.add_t(self.c, other.c))

    __radd__ = __add__

    def __sub__(self, other) -> "OKScalar":
        other = self._coerce(other)
        return OKScalar(self.cfg, self.cfg.sub_t(self.c, other.c))

    def __rsub__(self, other) -> "OKScalar":
        return self._coerce(other) - self

    def __neg__(self) -> "OKScalar":
        return OKScalar(self.cfg, self.cfg.reduce(-x for x in self.c))

    def __mul__(self, other) -> "OKScalar":
        other = self._coerce(other)
        return OKScalar(self.cfg, self.cfg.mul_t(self.c, other.c))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "OKScalar":
        base = self if k >= 0 else self.invert()
        k = abs(k)
        result = self.cfg.element(1)
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def valuation(self) -> int | ZeroToPrecision:
        v = self.cfg.val_t(self.c)
        return ZERO_TO_PRECISION if v == math.inf else int(v)

    def is_zero(self) -> bool:
        return not any(self.c)

    def invert(self) -> "OKScalar":
        return OKScalar(self.cfg, self.cfg.inverse_t(self.c))

    def residue(self) -> tuple[int, ...]:
        """Image in F_q = F_p[zeta]/(h), as ascending coefficients in zeta."""
        return self.cfg.residue_t(self.c)

    def embeds_in_Zp(self) -> bool:
        return not any(self.c[1:])

    def to_int(self) -> int:
        """The Z/(p**n) component; only meaningful when ``embeds_in_Zp``."""
        return self.c[0]

    def __repr__(self) -> str:
        return f"OKScalar({list(self.c)})"


def coprimality_hypothesis(cfg: RingConfig) -> bool:
    return math.gcd(cfg.e, cfg.p * cfg.p - cfg.p) == 1


def embeds_in_Zp(x: OKScalar) -> bool:
    return x.embeds_in_Zp()
