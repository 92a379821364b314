"""Truncated power series over O_K and K.

Coefficients are :class:`KScalar` values ``unit * pi**(-shift)`` that carry
their own absolute precision: a coefficient with ``prec == A`` is known modulo
``pi**A``. Exact inputs (small integers typed by a user) have infinite
precision until they take part in arithmetic, after which precision is capped
by the storage modulus ``p**n_prec``.

Products and compositions of integral series go through a Kronecker
substitution fast path; anything involving a non-integral coefficient is
done coefficient by coefficient with full precision propagation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable, Mapping, Sequence

from . import _kron
from .errors import ConfigMismatch, NonIntegralSeries, NotInvertible, PrecisionExhausted
from .ring import OKScalar, RingConfig, ZERO_TO_PRECISION

__all__ = [
    "KScalar",
    "TruncSeries1",
    "TruncSeries2",
    "TruncSeriesM",
    "NoUnitCoefficient",
    "NO_UNIT_COEFFICIENT",
    "compose",
    "comp_inverse",
    "weierstrass_degree",
    "derivative",
    "subst2",
    "subst2_sep",
    "subst2_outer",
    "solve_composition",
    "iterate",
]

INF = math.inf


class KScalar:
    """Element ``num * pi**(-shift)`` of K, known modulo ``pi**prec``."""

    __slots__ = ("ring", "num", "shift", "prec", "_v")

    def __init__(self, ring: RingConfig, num: tuple, shift: int, prec, _v=None):
        self.ring = ring
        self.num = num
        self.shift = shift
        self.prec = prec
        self._v = _v

    # -------------------------------------------------------------- builders

    @classmethod
    def make(cls, ring: RingConfig, num: tuple, shift: int, prec) -> "KScalar":
        """Normalise and cap precision at what storage can hold."""
        cap = ring.capacity - shift
        if prec > cap:
            prec = cap
        vnum = ring.val_t(num)
        if vnum - shift >= prec:
            return cls(ring, ring.zero_t(), 0, prec, INF)
        if shift and vnum:
            k = min(shift, vnum)
            num = ring.div_pi_t(num, k)
            shift -= k
            vnum -= k
        return cls(ring, num, shift, prec, vnum - shift)

    @classmethod
    def from_int(cls, ring: RingConfig, n: int) -> "KScalar":
        M = ring.modulus
        if 2 * abs(n) < M:
            num = ring.from_int_t(n)
            return cls(ring, num, 0, INF, ring.val_t(num))
        return cls.make(ring, ring.from_int_t(n), 0, ring.capacity)

    @classmethod
    def from_components(cls, ring: RingConfig, comps: Sequence[int], shift: int = 0,
                        prec=None) -> "KScalar":
        """Build from raw components; exact unless ``prec`` is given or reduction changed them."""
        comps = tuple(int(x) for x in comps) + (0,) * (ring.d - len(comps))
        num = ring.reduce(comps)
        if prec is None:
            prec = INF if num == comps else ring.capacity
        if prec == INF and shift == 0:
            return cls(ring, num, 0, INF, ring.val_t(num))
        if prec == INF:
            vnum = ring.val_t(num)
            if vnum == INF:
                return cls(ring, num, 0, INF, INF)
            if vnum:
                # exact rescaling: absorb pi-powers into the shift by hand
                k = min(shift, int(vnum))
                out = cls.make(ring, num, shift, ring.capacity - shift)
                return out if k else cls(ring, num, shift, INF, vnum - shift)
            return cls(ring, num, shift, INF, -shift)
        return cls.make(ring, num, shift, prec)

    @classmethod
    def from_ok(cls, x: OKScalar) -> "KScalar":
        return cls.make(x.cfg, x.c, 0, x.cfg.capacity)

    @classmethod
    def zero(cls, ring: RingConfig) -> "KScalar":
        return cls(ring, ring.zero_t(), 0, INF, INF)

    @classmethod
    def one(cls, ring: RingConfig) -> "KScalar":
        return cls(ring, ring.one_t(), 0, INF, 0)

    # -------------------------------------------------------------- queries

    @property
    def v(self) -> float:
        """Valuation; ``math.inf`` when zero to precision."""
        if self._v is None:
            vnum = self.ring.val_t(self.num)
            self._v = INF if vnum - self.shift >= self.prec else vnum - self.shift
        return self._v

    def valuation(self):
        return ZERO_TO_PRECISION if self.v == INF else int(self.v)

    @property
    def unit_part(self) -> OKScalar:
        return OKScalar(self.ring, self.num)

    @property
    def is_exact(self) -> bool:
        return self.prec == INF

    def is_zero(self) -> bool:
        return self.v == INF

    def is_exact_zero(self) -> bool:
        return self.prec == INF and self._v == INF

    @property
    def integral(self) -> bool:
        return self.shift == 0

    def is_unit(self) -> bool:
        return self.shift == 0 and self.v == 0

    # -------------------------------------------------------------- arithmetic

    def _check(self, other: "KScalar") -> None:
        if other.ring is not self.ring and other.ring != self.ring:
            raise ConfigMismatch("operands belong to different ring configurations")

    def __add__(self, other: "KScalar") -> "KScalar":
        if other._v == INF and other.prec == INF:
            return self
        if self._v == INF and self.prec == INF:
            return other
        ring = self.ring
        sa, sb = self.shift, other.shift
        if sa == sb:
            num = ring.add_t(self.num, other.num)
            s = sa
        elif sa > sb:
            num = ring.add_t(self.num, ring.mul_t(other.num, ring.pi_power_t(sa - sb)))
            s = sa
        else:
            num = ring.add_t(ring.mul_t(self.num, ring.pi_power_t(sb - sa)), other.num)
            s = sb
        prec = self.prec if self.prec < other.prec else other.prec
        if prec == INF:
            prec = ring.capacity
        return KScalar.make(ring, num, s, prec)

    def __neg__(self) -> "KScalar":
        return KScalar(self.ring, self.ring.reduce(-x for x in self.num), self.shift,
                       self.prec, self._v)

    def __sub__(self, other: "KScalar") -> "KScalar":
        return self + (-other)

    def __mul__(self, other: "KScalar") -> "KScalar":
        if isinstance(other, int):
            other = KScalar.from_int(self.ring, other)
        if (self._v == INF and self.prec == INF) or (other._v == INF and other.prec == INF):
            return KScalar.zero(self.ring)
        ring = self.ring
        va, vb = self.v, other.v
        pa = self.prec + vb if vb != INF else self.prec + other.prec
        pb = other.prec + va if va != INF else other.prec + self.prec
        prec = pa if pa < pb else pb
        if va == INF or vb == INF:
            return KScalar(ring, ring.zero_t(), 0, min(prec, ring.capacity), INF)
        num = ring.mul_t(self.num, other.num)
        return KScalar.make(ring, num, self.shift + other.shift, prec)

    __rmul__ = __mul__

    def inverse(self) -> "KScalar":
        ring = self.ring
        v = self.v
        if v == INF:
            raise PrecisionExhausted("cannot invert an element that is zero to precision")
        v = int(v)
        if self.shift:
            unit = self.num
            inv = ring.inverse_t(unit)
            num = ring.mul_t(inv, ring.pi_power_t(self.shift))
            shift = 0
        else:
            unit = ring.div_pi_t(self.num, v) if v else self.num
            num = ring.inverse_t(unit)
            shift = v
        prec = self.prec - 2 * v
        if prec == INF:
            prec = ring.capacity - shift
        return KScalar.make(ring, num, shift, prec)

    def __truediv__(self, other: "KScalar") -> "KScalar":
        if isinstance(other, int):
            other = KScalar.from_int(self.ring, other)
        return self * other.inverse()

    def agrees(self, other: "KScalar", prec=None) -> bool:
        d = self - other
        if prec is None:
            return d.is_zero()
        return d.v >= prec and d.prec >= prec

    def to_ring(self, ring: RingConfig) -> "KScalar":
        """Move to a ring over the same field with a different storage precision."""
        if not ring.same_field(self.ring):
            raise ConfigMismatch("cannot move a scalar between different fields")
        num = ring.reduce(self.num)
        if ring.n_prec >= self.ring.n_prec:
            return KScalar(ring, num, self.shift, self.prec, self._v)
        return KScalar.make(ring, num, self.shift, self.prec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KScalar):
            return NotImplemented
        return (self.ring == other.ring and self.num == other.num
                and self.shift == other.shift and self.prec == other.prec)

    def __hash__(self):
        return hash((self.num, self.shift, self.prec))

    def __repr__(self) -> str:
        body = list(self.num) if self.ring.d > 1 else self.num[0]
        tail = f", prec={self.prec}" if self.prec != INF else ""
        return f"KScalar({body}, shift={self.shift}{tail})"

    # -------------------------------------------------------------- JSON

    def to_json(self) -> dict:
        out = {"shift": self.shift, "val": list(self.num)}
        if self.prec != INF:
            out["prec"] = int(self.prec)
        return out

    @classmethod
    def from_json(cls, ring: RingConfig, data: Mapping) -> "KScalar":
        return cls.from_components(ring, data["val"], int(data.get("shift", 0)),
                                   data.get("prec"))


def _prec_json(prec):
    return None if prec == INF else int(prec)


def _absent(ring: RingConfig, data: Mapping) -> KScalar:
    """Coefficients missing from JSON are zero to the series' certified precision."""
    prec = data.get("certified_prec")
    if prec is None:
        return KScalar.zero(ring)
    return KScalar(ring, ring.zero_t(), 0, min(int(prec), ring.capacity), INF)


def _as_k(ring: RingConfig, c) -> KScalar:
    if isinstance(c, KScalar):
        return c
    if isinstance(c, int):
        return KScalar.from_int(ring, c)
    if isinstance(c, OKScalar):
        return KScalar.from_ok(c)
    return KScalar.from_components(ring, c)


def _ksum(ring: RingConfig, terms: Iterable[KScalar]) -> KScalar:
    total = KScalar.zero(ring)
    for t in terms:
        total = total + t
    return total


class NoUnitCoefficient:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NoUnitCoefficient"


NO_UNIT_COEFFICIENT = NoUnitCoefficient()


# =========================================================================
# one variable
# =========================================================================


@dataclass(frozen=True, eq=False)
class TruncSeries1:
    """A power series truncated after degree ``N``; ``coeffs[i]`` is the X**i term."""

    ring: RingConfig
    N: int
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.N + 1:
            raise ValueError("coeffs must have length N + 1")

    # ---------------------------------------------------------- construction

    @classmethod
    def from_coeffs(cls, ring: RingConfig, coeffs: Mapping[int, object] | Sequence, N: int
                    ) -> "TruncSeries1":
        """Build from ``{degree: value}`` or a list indexed by degree.

        Values may be ints, component lists, :class:`OKScalar` or :class:`KScalar`.
        """
        out = [KScalar.zero(ring)] * (N + 1)
        items = coeffs.items() if isinstance(coeffs, Mapping) else enumerate(coeffs)
        for i, c in items:
            if i <= N:
                out[i] = _as_k(ring, c)
        return cls(ring, N, tuple(out))

    @classmethod
    def X(cls, ring: RingConfig, N: int) -> "TruncSeries1":
        return cls.from_coeffs(ring, {1: 1}, N)

    @classmethod
    def zero(cls, ring: RingConfig, N: int) -> "TruncSeries1":
        return cls.from_coeffs(ring, {}, N)

    # ---------------------------------------------------------- queries

    def __getitem__(self, i: int) -> KScalar:
        return self.coeffs[i]

    @property
    def linear(self) -> KScalar:
        return self.coeffs[1] if self.N >= 1 else KScalar.zero(self.ring)

    @property
    def integral(self) -> bool:
        return all(c.shift == 0 for c in self.coeffs)

    @property
    def has_constant(self) -> bool:
        return not self.coeffs[0].is_zero()

    @property
    def certified_prec(self):
        return min(c.prec for c in self.coeffs)

    def degree(self) -> int:
        for i in range(self.N, -1, -1):
            if not self.coeffs[i].is_exact_zero():
                return i
        return 0

    def is_zero(self, prec=None) -> bool:
        if prec is None:
            return all(c.is_zero() for c in self.coeffs)
        return all(c.v >= prec for c in self.coeffs)

    def agrees(self, other: "TruncSeries1", prec=None) -> bool:
        """Coefficientwise equality up to the known precision (or ``prec``)."""
        n = min(self.N, other.N)
        return all(a.agrees(b, prec) for a, b in zip(self.coeffs[:n + 1], other.coeffs[:n + 1]))

    def __repr__(self) -> str:
        terms = [f"{c!r}*X^{i}" for i, c in enumerate(self.coeffs) if not c.is_zero()]
        return f"TruncSeries1(N={self.N}: " + (" + ".join(terms) or "0") + ")"

    # ---------------------------------------------------------- reshaping

    def truncate(self, N: int) -> "TruncSeries1":
        if N > self.N:
            raise ValueError("cannot extend a truncated series")
        return TruncSeries1(self.ring, N, self.coeffs[:N + 1])

    def to_ring(self, ring: RingConfig) -> "TruncSeries1":
        return TruncSeries1(ring, self.N, tuple(c.to_ring(ring) for c in self.coeffs))

    def map(self, fn) -> "TruncSeries1":
        return TruncSeries1(self.ring, self.N, tuple(fn(c) for c in self.coeffs))

    # ---------------------------------------------------------- arithmetic

    def _check(self, other: "TruncSeries1") -> int:
        if other.ring != self.ring:
            raise ConfigMismatch("series belong to different ring configurations")
        return min(self.N, other.N)

    def __add__(self, other: "TruncSeries1") -> "TruncSeries1":
        N = self._check(other)
        return TruncSeries1(self.ring, N, tuple(a + b for a, b in zip(self.coeffs[:N + 1], other.coeffs)))

    def __sub__(self, other: "TruncSeries1") -> "TruncSeries1":
        N = self._check(other)
        return TruncSeries1(self.ring, N, tuple(a - b for a, b in zip(self.coeffs[:N + 1], other.coeffs)))

    def __neg__(self) -> "TruncSeries1":
        return self.map(lambda c: -c)

    def scale(self, k) -> "TruncSeries1":
        k = _as_k(self.ring, k)
        return self.map(lambda c: c * k)

    def __mul__(self, other: "TruncSeries1") -> "TruncSeries1":
        N = self._check(other)
        if self.integral and other.integral:
            comps = _kron.mul(self.ring, _components(self, N), _components(other, N), N + 1)
            prec = [min(a, b) for a, b in zip(_prefix_prec(self, N), _prefix_prec(other, N))]
            return _from_components(self.ring, N, comps, prec)
        ring = self.ring
        a, b = self.coeffs, other.coeffs
        nz_a = [i for i in range(N + 1) if not a[i].is_exact_zero()]
        out = []
        for n in range(N + 1):
            total = KScalar.zero(ring)
            for i in nz_a:
                if i > n:
                    break
                bj = b[n - i]
                if not bj.is_exact_zero():
                    total = total + a[i] * bj
            out.append(total)
        return TruncSeries1(ring, N, tuple(out))

    def __pow__(self, k: int) -> "TruncSeries1":
        result = TruncSeries1.from_coeffs(self.ring, {0: 1}, self.N)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def powers(self, kmax: int) -> list["TruncSeries1"]:
        """``[1, s, s**2, ..., s**kmax]``."""
        out = [TruncSeries1.from_coeffs(self.ring, {0: 1}, self.N)]
        for _ in range(kmax):
            out.append(out[-1] * self)
        return out

    # ---------------------------------------------------------- JSON

    def to_json(self) -> dict:
        coeffs = []
        for i, c in enumerate(self.coeffs):
            if not c.is_zero():
                coeffs.append({"i": i, **c.to_json()})
        return {"N": self.N, "certified_prec": _prec_json(self.certified_prec), "coeffs": coeffs}

    @classmethod
    def from_json(cls, ring: RingConfig, data: Mapping | str) -> "TruncSeries1":
        if isinstance(data, str):
            data = json.loads(data)
        N = int(data["N"])
        out = [_absent(ring, data)] * (N + 1)
        for entry in data.get("coeffs", []):
            i = int(entry["i"])
            if not 0 <= i <= N:
                raise ValueError(f"coefficient index {i} outside 0..{N}")
            out[i] = KScalar.from_json(ring, entry)
        return cls(ring, N, tuple(out))


def _components(s: TruncSeries1, N: int) -> _kron.Components:
    M = s.ring.modulus
    d = s.ring.d
    comps = [[0] * (N + 1) for _ in range(d)]
    for n in range(N + 1):
        num = s.coeffs[n].num
        for j in range(d):
            if num[j]:
                comps[j][n] = num[j] % M
    return comps


def _prefix_prec(s: TruncSeries1, N: int) -> list:
    out, cur = [], INF
    for n in range(N + 1):
        p = s.coeffs[n].prec
        if p < cur:
            cur = p
        out.append(cur)
    return out


def _from_components(ring: RingConfig, N: int, comps: _kron.Components, prec: Sequence
                     ) -> TruncSeries1:
    cap = ring.capacity
    out = []
    for n in range(N + 1):
        num = ring.reduce(row[n] for row in comps)
        p = prec[n]
        out.append(KScalar.make(ring, num, 0, cap if p > cap else p))
    return TruncSeries1(ring, N, tuple(out))


# =========================================================================
# operations on one-variable series
# =========================================================================


def compose(s: TruncSeries1, t: TruncSeries1) -> TruncSeries1:
    """``s(t(X))`` truncated at the smaller of the two degrees."""
    N = s._check(t)
    if t.has_constant:
        raise ValueError("inner series must have no constant term")
    if s.integral and t.integral:
        comps = _kron.compose(s.ring, _components(s, N), _components(t, N), N + 1)
        prec = [min(a, b) for a, b in zip(_prefix_prec(s, N), _prefix_prec(t, N))]
        return _from_components(s.ring, N, comps, prec)
    t = t.truncate(N)
    deg = s.truncate(N).degree()
    acc = TruncSeries1.from_coeffs(s.ring, {0: s.coeffs[deg]}, N)
    for k in range(deg - 1, -1, -1):
        acc = acc * t
        if not s.coeffs[k].is_exact_zero():
            c = list(acc.coeffs)
            c[0] = c[0] + s.coeffs[k]
            acc = TruncSeries1(s.ring, N, tuple(c))
    return acc


def iterate(s: TruncSeries1, n: int) -> TruncSeries1:
    """``s`` composed with itself ``n`` times (``n >= 0``), by binary powering."""
    if n < 0:
        return iterate(comp_inverse(s), -n)
    result = TruncSeries1.X(s.ring, s.N)
    base = s
    while n:
        if n & 1:
            result = compose(result, base)
        n >>= 1
        if n:
            base = compose(base, base)
    return result


def solve_composition(L: TruncSeries1, R: TruncSeries1) -> TruncSeries1:
    """The series ``h`` without constant term with ``L(h(X)) = R(X)``.

    Requires ``L`` to have a unit linear coefficient and no constant term.
    Solved degree by degree; the power table ``[h^k]_n`` is grown alongside.
    """
    ring = L.ring
    N = L._check(R)
    if L.has_constant:
        raise ValueError("outer series must have no constant term")
    lead = L.coeffs[1] if N >= 1 else KScalar.one(ring)
    if not lead.is_unit():
        raise NotInvertible("linear coefficient is not a unit")
    lead_inv = lead.inverse()
    zero = KScalar.zero(ring)
    h = [zero] * (N + 1)
    # pw[k][n] = coefficient of X^n in h^k, for k >= 2
    pw: list[list[KScalar]] = [[], []] + [[zero] * (N + 1) for _ in range(2, N + 1)]
    Lc = L.coeffs
    for n in range(1, N + 1):
        for k in range(2, n + 1):
            prev = h if k == 2 else pw[k - 1]
            row = pw[k]
            total = zero
            for i in range(1, n - k + 2):
                hi = h[i]
                if hi.is_exact_zero():
                    continue
                other = prev[n - i]
                if not other.is_exact_zero():
                    total = total + hi * other
            row[n] = total
        rhs = R.coeffs[n]
        for k in range(2, n + 1):
            Lk = Lc[k]
            if not Lk.is_exact_zero():
                term = pw[k][n]
                if not term.is_exact_zero():
                    rhs = rhs - Lk * term
        h[n] = rhs * lead_inv
    return TruncSeries1(ring, N, tuple(h))


def comp_inverse(s: TruncSeries1) -> TruncSeries1:
    """Compositional inverse; requires ``s'(0)`` to be a unit."""
    if s.has_constant:
        raise ValueError("series must have no constant term")
    if s.N < 1 or not s.linear.is_unit():
        raise NotInvertible("s'(0) is not a unit")
    return solve_composition(s, TruncSeries1.X(s.ring, s.N))


def weierstrass_degree(s: TruncSeries1):
    """Index of the first unit coefficient, or ``NO_UNIT_COEFFICIENT``."""
    for i in range(1, s.N + 1):
        c = s.coeffs[i]
        if c.shift:
            continue
        if c.v == 0:
            return i
        if c.v == INF and c.prec <= 0:
            raise PrecisionExhausted(f"coefficient {i} is unknown; cannot decide whether it is a unit")
    return NO_UNIT_COEFFICIENT


def derivative(s: TruncSeries1) -> TruncSeries1:
    """Termwise derivative; result has degree ``N - 1`` and a constant term ``s'(0)``."""
    ring = s.ring
    out = tuple(s.coeffs[n] * KScalar.from_int(ring, n) for n in range(1, s.N + 1))
    return TruncSeries1(ring, s.N - 1, out)


# =========================================================================
# several variables
# =========================================================================


def _monomials(nv: int, N: int):
    """Exponent tuples of total degree 0..N."""
    for exps in iproduct(range(N + 1), repeat=nv):
        if sum(exps) <= N:
            yield exps


@dataclass(frozen=True, eq=False)
class TruncSeriesM:
    """Series in ``nvars`` variables truncated at total degree ``N``.

    ``coeffs`` maps exponent tuples to :class:`KScalar`; absent keys are
    exact zeros.
    """

    ring: RingConfig
    nvars: int
    N: int
    coeffs: Mapping

    def __getitem__(self, exps) -> KScalar:
        return self.coeffs.get(tuple(exps), KScalar.zero(self.ring))

    @property
    def integral(self) -> bool:
        return all(c.shift == 0 for c in self.coeffs.values())

    @property
    def certified_prec(self):
        return min((c.prec for c in self.coeffs.values()), default=INF)

    def is_zero(self, prec=None) -> bool:
        if prec is None:
            return all(c.is_zero() for c in self.coeffs.values())
        return all(c.v >= prec for c in self.coeffs.values())

    def __sub__(self, other: "TruncSeriesM") -> "TruncSeriesM":
        return _m_lincomb(self, other, -1)

    def __add__(self, other: "TruncSeriesM") -> "TruncSeriesM":
        return _m_lincomb(self, other, 1)

    def __mul__(self, other: "TruncSeriesM") -> "TruncSeriesM":
        return _m_mul(self, other)

    def agrees(self, other: "TruncSeriesM", prec=None) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        N = min(self.N, other.N)
        return all(self[k].agrees(other[k], prec) for k in keys if sum(k) <= N)

    def scale(self, k: KScalar) -> "TruncSeriesM":
        return type(self)._build(self.ring, self.nvars, self.N,
                                 {e: c * k for e, c in self.coeffs.items()})

    @classmethod
    def _build(cls, ring, nvars, N, coeffs):
        coeffs = {e: c for e, c in coeffs.items() if not c.is_exact_zero()}
        if cls is TruncSeries2 or (cls is TruncSeriesM and nvars == 2):
            return TruncSeries2(ring, 2, N, coeffs)
        return TruncSeriesM(ring, nvars, N, coeffs)

    @classmethod
    def variable(cls, ring: RingConfig, nvars: int, index: int, N: int) -> "TruncSeriesM":
        exps = tuple(1 if k == index else 0 for k in range(nvars))
        return cls._build(ring, nvars, N, {exps: KScalar.one(ring)})

    @classmethod
    def embed(cls, s: TruncSeries1, nvars: int, index: int) -> "TruncSeriesM":
        """A one-variable series viewed as a series in variable ``index``."""
        coeffs = {}
        for n, c in enumerate(s.coeffs):
            coeffs[tuple(n if k == index else 0 for k in range(nvars))] = c
        return cls._build(s.ring, nvars, s.N, coeffs)

    def to_nvars(self, nvars: int, placement: Sequence[int]) -> "TruncSeriesM":
        """Rename variables: old variable ``k`` becomes new variable ``placement[k]``."""
        out = {}
        for e, c in self.coeffs.items():
            new = [0] * nvars
            for k, ek in enumerate(e):
                new[placement[k]] += ek
            out[tuple(new)] = c
        return TruncSeriesM._build(self.ring, nvars, self.N, out)


def _m_lincomb(a: TruncSeriesM, b: TruncSeriesM, sign: int) -> TruncSeriesM:
    N = min(a.N, b.N)
    out = {}
    for k in set(a.coeffs) | set(b.coeffs):
        if sum(k) <= N:
            out[k] = a[k] + b[k] if sign > 0 else a[k] - b[k]
    return TruncSeriesM._build(a.ring, a.nvars, N, out)


def _m_mul(a: TruncSeriesM, b: TruncSeriesM) -> TruncSeriesM:
    if a.ring != b.ring or a.nvars != b.nvars:
        raise ConfigMismatch("series belong to different rings or variable counts")
    ring, nv = a.ring, a.nvars
    N = min(a.N, b.N)
    if a.integral and b.integral:
        return _m_mul_fast(a, b, N)
    out: dict = {}
    bitems = [(k, c) for k, c in b.coeffs.items() if sum(k) <= N]
    for ka, ca in a.coeffs.items():
        da = sum(ka)
        if da > N:
            continue
        for kb, cb in bitems:
            if da + sum(kb) > N:
                continue
            key = tuple(x + y for x, y in zip(ka, kb))
            term = ca * cb
            out[key] = out[key] + term if key in out else term
    return TruncSeriesM._build(ring, nv, N, out)


def _m_mul_fast(a: TruncSeriesM, b: TruncSeriesM, N: int) -> TruncSeriesM:
    ring, nv = a.ring, a.nvars
    S = 2 * N + 1
    length = S**nv
    strides = [S ** (nv - 1 - k) for k in range(nv)]

    def pack(s: TruncSeriesM):
        comps = [[0] * length for _ in range(ring.d)]
        M = ring.modulus
        for e, c in s.coeffs.items():
            if sum(e) <= N:
                idx = sum(x * st for x, st in zip(e, strides))
                for j in range(ring.d):
                    comps[j][idx] = c.num[j] % M
        return comps

    comps = _kron.mul(ring, pack(a), pack(b), length)
    prec = min(a.certified_prec, b.certified_prec)
    out = {}
    for e in _monomials(nv, N):
        idx = sum(x * st for x, st in zip(e, strides))
        num = ring.reduce(row[idx] for row in comps)
        if any(num) or prec != INF:
            out[e] = KScalar.make(ring, num, 0, prec)
    return TruncSeriesM._build(ring, nv, N, out)


class TruncSeries2(TruncSeriesM):
    """Two-variable series; ``coeffs[(i, j)]`` is the X**i Y**j term."""

    @classmethod
    def from_coeffs(cls, ring: RingConfig, coeffs: Mapping, N: int) -> "TruncSeries2":
        return cls._build(ring, 2, N, {tuple(k): _as_k(ring, v) for k, v in coeffs.items()
                                       if sum(k) <= N})

    def swap(self) -> "TruncSeries2":
        return TruncSeries2(self.ring, 2, self.N, {(j, i): c for (i, j), c in self.coeffs.items()})

    def symmetric(self, prec=None) -> bool:
        return self.agrees(self.swap(), prec)

    def has_constant(self) -> bool:
        return not self[(0, 0)].is_zero()

    def to_json(self) -> dict:
        coeffs = [{"ij": [i, j], **c.to_json()}
                  for (i, j), c in sorted(self.coeffs.items()) if not c.is_zero()]
        return {"N": self.N, "certified_prec": _prec_json(self.certified_prec), "coeffs": coeffs}

    @classmethod
    def from_json(cls, ring: RingConfig, data: Mapping | str) -> "TruncSeries2":
        if isinstance(data, str):
            data = json.loads(data)
        N = int(data["N"])
        absent = _absent(ring, data)
        coeffs = {k: absent for k in _monomials(2, N) if sum(k)} if absent.prec != INF else {}
        for entry in data.get("coeffs", []):
            i, j = (int(x) for x in entry["ij"])
            if i < 0 or j < 0 or i + j > N:
                raise ValueError(f"coefficient index {(i, j)} outside total degree {N}")
            coeffs[(i, j)] = KScalar.from_json(ring, entry)
        return cls._build(ring, 2, N, coeffs)

    def __repr__(self) -> str:
        terms = [f"{c!r}*X^{i}Y^{j}" for (i, j), c in sorted(self.coeffs.items()) if not c.is_zero()]
        return f"TruncSeries2(N={self.N}: " + (" + ".join(terms) or "0") + ")"


def _m_one(ring, nv, N) -> TruncSeriesM:
    return TruncSeriesM._build(ring, nv, N, {(0,) * nv: KScalar.one(ring)})


def compose_outer(s: TruncSeries1, G: TruncSeriesM) -> TruncSeriesM:
    """``s(G)`` for a one-variable ``s`` and multivariate ``G`` without constant term."""
    ring, nv = G.ring, G.nvars
    N = min(s.N, G.N)
    if not G[(0,) * nv].is_zero():
        raise ValueError("inner series must have no constant term")
    deg = s.truncate(N).degree()
    acc = TruncSeriesM._build(ring, nv, N, {(0,) * nv: s.coeffs[deg]})
    for k in range(deg - 1, -1, -1):
        acc = acc * G
        c = s.coeffs[k]
        if not c.is_exact_zero():
            coeffs = dict(acc.coeffs)
            key = (0,) * nv
            coeffs[key] = coeffs[key] + c if key in coeffs else c
            acc = TruncSeriesM._build(ring, nv, N, coeffs)
    return acc


def _power_table(G, N: int) -> list[dict]:
    """Coefficient dicts of ``G**0 .. G**N`` for a one- or multi-variable series."""
    if isinstance(G, TruncSeries1):
        pows = G.truncate(N).powers(N)
        return [{(n,): c for n, c in enumerate(P.coeffs) if not c.is_exact_zero()} for P in pows]
    out = [_m_one(G.ring, G.nvars, N).coeffs]
    acc = _m_one(G.ring, G.nvars, N)
    for _ in range(N):
        acc = acc * G
        out.append(acc.coeffs)
    return out


def _nvars(G) -> int:
    return 1 if isinstance(G, TruncSeries1) else G.nvars


def substitute_separated(F: TruncSeries2, G, H) -> TruncSeriesM:
    """``F(G, H)`` where ``G`` and ``H`` use disjoint blocks of variables.

    The variables of ``G`` come first in the result. With ``c`` the
    coefficients of ``F`` the result is ``sum c_ij [G^i]_a [H^j]_b``, done as
    two products against power tables.
    """
    ring = F.ring
    if G.ring != ring or H.ring != ring:
        raise ConfigMismatch("series belong to different ring configurations")
    N = min(F.N, G.N, H.N)
    gz, hz = (0,) * _nvars(G), (0,) * _nvars(H)
    g0 = G.coeffs[0] if isinstance(G, TruncSeries1) else G[gz]
    h0 = H.coeffs[0] if isinstance(H, TruncSeries1) else H[hz]
    if not (g0.is_zero() and h0.is_zero()):
        raise ValueError("substituted series must have no constant term")
    PG, PH = _power_table(G, N), _power_table(H, N)
    # T[j][a] = sum_i c_ij [G^i]_a
    T: list[dict] = [{} for _ in range(N + 1)]
    for (i, j), c in F.coeffs.items():
        if i + j > N or c.is_exact_zero():
            continue
        row = T[j]
        for a, ga in PG[i].items():
            if sum(a) + j <= N:
                term = c * ga
                row[a] = row[a] + term if a in row else term
    out: dict = {}
    for j in range(N + 1):
        for a, t in T[j].items():
            room = N - sum(a)
            for b, hb in PH[j].items():
                if sum(b) <= room:
                    key = a + b
                    term = t * hb
                    out[key] = out[key] + term if key in out else term
    return TruncSeriesM._build(ring, len(gz) + len(hz), N, out)


def subst2(F: TruncSeries2, s: TruncSeries1, t: TruncSeries1) -> TruncSeries1:
    """``F(s(X), t(X))`` as a one-variable series."""
    if F.ring != s.ring or F.ring != t.ring:
        raise ConfigMismatch("series belong to different ring configurations")
    both = substitute_separated(F, s, t)
    N = both.N
    out = [KScalar.zero(F.ring)] * (N + 1)
    for (a, b), c in both.coeffs.items():
        out[a + b] = out[a + b] + c
    return TruncSeries1(F.ring, N, tuple(out))


def subst2_sep(F: TruncSeries2, s: TruncSeries1, t: TruncSeries1) -> TruncSeries2:
    """``F(s(X), t(Y))`` as a two-variable series."""
    return substitute_separated(F, s, t)


def subst2_outer(s: TruncSeries1, F: TruncSeries2) -> TruncSeries2:
    """``s(F(X, Y))``."""
    if F.ring != s.ring:
        raise ConfigMismatch("series belong to different ring configurations")
    return compose_outer(s, F)


def require_integral(s: TruncSeries1) -> None:
    if not s.integral:
        bad = next(i for i, c in enumerate(s.coeffs) if c.shift)
        raise NonIntegralSeries(f"coefficient of X^{bad} is not integral")
