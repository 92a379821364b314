"""Commuting pairs (f, u), their hypotheses and invariants, and instance generators."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .errors import (
    HypothesisViolation,
    InvalidTemplate,
    MismatchWithTheorem,
    NonIntegralSeries,
    NotAUnit,
    NotCommuting,
    PrecisionExhausted,
    TruncationTooShallow,
)
from .lubin import formal_group, mult_by_m
from .newton import simple_roots_criterion
from .ring import ZERO_TO_PRECISION, RingConfig, coprimality_hypothesis
from .series import (
    NO_UNIT_COEFFICIENT,
    KScalar,
    TruncSeries1,
    TruncSeries2,
    comp_inverse,
    compose,
    iterate,
    subst2_outer,
    subst2_sep,
    weierstrass_degree,
)

log = logging.getLogger(__name__)

__all__ = [
    "DynPair",
    "Check",
    "HypothesisReport",
    "ConjectureVerdict",
    "check_hypotheses",
    "normalize_u",
    "ell",
    "v_of_m",
    "fixed_point_count",
    "stabilizer_exponent",
    "cell_count",
    "tilt_valuation",
    "make_lubin_tate",
    "multiplicative_pair",
    "conjugate_pair",
    "random_conjugator",
    "verify_conjecture",
]

INF = math.inf


@dataclass(frozen=True, eq=False)
class DynPair:
    """Commuting series ``f`` (not invertible) and ``u`` (invertible) over O_K."""

    f: TruncSeries1
    u: TruncSeries1
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.f.ring != self.u.ring:
            raise HypothesisViolation("f and u live over different rings")
        if not (self.f.integral and self.u.integral):
            raise NonIntegralSeries("f and u must have coefficients in O_K")
        if self.check:
            lhs, rhs = compose(self.f, self.u), compose(self.u, self.f)
            diff = lhs - rhs
            if not diff.is_zero():
                bad = next(i for i, c in enumerate(diff.coeffs) if not c.is_zero())
                raise NotCommuting(f"f(u(X)) and u(f(X)) differ at degree {bad}")

    @property
    def ring(self) -> RingConfig:
        return self.f.ring

    @property
    def N(self) -> int:
        return min(self.f.N, self.u.N)

    @cached_property
    def wdeg_f(self):
        return weierstrass_degree(self.f)

    @property
    def f1(self) -> KScalar:
        return self.f.linear

    @property
    def u1(self) -> KScalar:
        return self.u.linear

    @cached_property
    def normalized(self) -> bool:
        """Whether ``u'(0)`` lies in ``1 + p Z_p``."""
        lam = self.u1
        if not _in_Zp(lam):
            return False
        return (lam - KScalar.one(self.ring)).v >= self.ring.e

    @cached_property
    def ell(self) -> int:
        return ell(self)

    @cached_property
    def hypotheses(self) -> "HypothesisReport":
        return check_hypotheses(self)

    def truncate(self, N: int) -> "DynPair":
        return DynPair(self.f.truncate(N), self.u.truncate(N), check=False)

    def to_json(self) -> dict:
        return {"config": self.ring.to_json(), "f": self.f.to_json(), "u": self.u.to_json()}

    @classmethod
    def from_json(cls, data: Mapping | str) -> "DynPair":
        if isinstance(data, str):
            data = json.loads(data)
        ring = RingConfig.from_json(data["config"])
        return cls(TruncSeries1.from_json(ring, data["f"]), TruncSeries1.from_json(ring, data["u"]))


def _in_Zp(x: KScalar) -> bool:
    return x.shift == 0 and not any(x.num[1:])


def _instance(pair: DynPair, **extra) -> dict:
    return {**pair.to_json(), **extra}


# =========================================================================
# hypotheses
# =========================================================================


@dataclass(frozen=True)
class Check:
    """A tri-state verdict: True, False, or None when undecidable at this precision."""

    value: bool | None
    precision: float = INF
    note: str = ""

    def to_json(self) -> dict:
        out = {"value": self.value, "precision": None if self.precision == INF else self.precision}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class HypothesisReport:
    coprime: Check
    wdeg_is_p: Check
    simple_roots: Check
    f1_uniformizer_in_Zp: Check
    u1_unit_in_Zp: Check
    u1_nontorsion: Check

    def items(self):
        return [(name, getattr(self, name)) for name in self.__dataclass_fields__]

    @property
    def failed(self) -> list[str]:
        return [name for name, c in self.items() if c.value is False]

    @property
    def all_true(self) -> bool:
        return all(c.value is True for _, c in self.items())

    @property
    def none_false(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        return {name: c.to_json() for name, c in self.items()}


def _nontorsion(lam: KScalar, ring: RingConfig, bound: int) -> Check:
    if not (_in_Zp(lam) and lam.v == 0):
        return Check(None, lam.prec, "u'(0) is not a unit of Z_p")
    t = lam.num[0]
    if lam.prec == INF:
        # exact integer: the only roots of unity in Z are 1 and -1
        return Check(t not in (1, -1), INF)
    x = lam.unit_part ** (ring.q - 1)
    cap = min(lam.prec, ring.capacity)
    for k in range(bound + 1):
        v = (x - 1).valuation()
        if v is ZERO_TO_PRECISION or v >= cap:
            return Check(None, cap, f"u'(0)^(p^{k}(q-1)) = 1 to precision")
        x = x ** ring.p
    return Check(True, cap, f"checked p^k(q-1) powers for k <= {bound}")


def check_hypotheses(pair: DynPair, torsion_bound: int = 2) -> HypothesisReport:
    ring = pair.ring
    p, e = ring.p, ring.e
    fprec = pair.f.certified_prec
    coprime = Check(coprimality_hypothesis(ring))
    try:
        w = pair.wdeg_f
        wdeg = Check(w is not NO_UNIT_COEFFICIENT and w == p, fprec,
                     f"Weierstrass degree {w}")
    except PrecisionExhausted as exc:
        wdeg = Check(None, fprec, str(exc))
    if not coprime.value:
        simple = Check(None, fprec, "criterion needs gcd(e, p^2 - p) = 1")
    else:
        try:
            simple = Check(simple_roots_criterion(pair.f), fprec)
        except PrecisionExhausted as exc:
            simple = Check(None, fprec, str(exc))
    f1 = pair.f1
    if f1.v == INF:
        unif = Check(None, f1.prec, "f'(0) is zero to precision")
    else:
        unif = Check(_in_Zp(f1) and f1.v == e, f1.prec)
    u1 = pair.u1
    unit = Check(_in_Zp(u1) and u1.v == 0, u1.prec)
    nontors = _nontorsion(u1, ring, torsion_bound)
    return HypothesisReport(coprime, wdeg, simple, unif, unit, nontors)


# =========================================================================
# invariants
# =========================================================================


def _order_mod_p(a: int, p: int) -> int:
    a %= p
    k, x = 1, a
    while x != 1:
        x = x * a % p
        k += 1
    return k


def normalize_u(pair: DynPair) -> DynPair:
    """Replace ``u`` by ``u^{ok}`` with ``k`` the order of ``u'(0)`` mod p."""
    u1 = pair.u1
    if not (_in_Zp(u1) and u1.v == 0):
        raise NotAUnit("u'(0) must be a unit of Z_p")
    k = _order_mod_p(u1.num[0], pair.ring.p)
    if k == 1:
        return pair
    return DynPair(pair.f, iterate(pair.u, k))


def _require_normalized(pair: DynPair) -> None:
    if not pair.normalized:
        raise HypothesisViolation("u'(0) must lie in 1 + pZ_p; normalise u first")


def _v_of(pair: DynPair, m: int) -> int:
    ring = pair.ring
    lam = pair.u1
    x = lam.unit_part ** m - 1
    v = x.valuation()
    cap = min(lam.prec, ring.capacity)
    if v is ZERO_TO_PRECISION or v >= cap:
        raise PrecisionExhausted(f"u'(0)^{m} - 1 vanishes to precision {cap}")
    if v % ring.e:
        raise MismatchWithTheorem(f"valuation {v} of u'(0)^{m} - 1 is not a multiple of e",
                                  _instance(pair, m=m))
    return v // ring.e


def ell(pair: DynPair) -> int:
    """``v_K(u'(0) - 1) / e``."""
    _require_normalized(pair)
    return _v_of(pair, 1)


def v_of_m(pair: DynPair, m: int) -> int:
    """``v_K(u'(0)**m - 1) / e``: the level at which ``u^{om}`` gets its fixed points."""
    if m == 0:
        raise ValueError("m must be nonzero")
    _require_normalized(pair)
    return _v_of(pair, m)


def fixed_point_count(pair: DynPair, m: int) -> int:
    """Weierstrass degree of ``u^{om}(X) - X``, checked against ``p**v(m)``."""
    p = pair.ring.p
    v = v_of_m(pair, m)
    target = p**v
    if pair.u.N < target:
        raise TruncationTooShallow(f"need degree >= {target} for m = {m}")
    u = pair.u.truncate(target)
    um = iterate(u, m)
    diff = um - TruncSeries1.X(pair.ring, target)
    count = weierstrass_degree(diff)
    log.debug("m=%d v(m)=%d count=%s", m, v, count)
    if count is NO_UNIT_COEFFICIENT or count != target:
        raise MismatchWithTheorem(
            f"u^(o{m})(X) - X has Weierstrass degree {count}, expected {target}",
            _instance(pair, m=m, v_of_m=v, count=str(count)))
    return count


def stabilizer_exponent(pair: DynPair, n: int) -> int:
    """``p**(n - ell)``, cross-checked through ``v``."""
    p = pair.ring.p
    l = ell(pair)
    if n <= l:
        raise HypothesisViolation(f"need n > ell = {l}")
    k = n - l
    hi, lo = v_of_m(pair, p**k), v_of_m(pair, p ** (k - 1))
    if not (hi >= n > lo):
        raise MismatchWithTheorem(
            f"v(p^{k}) = {hi}, v(p^{k - 1}) = {lo}, expected v(p^{k}) >= {n} > v(p^{k - 1})",
            _instance(pair, n=n, ell=l))
    return p**k


def cell_count(pair: DynPair) -> int:
    p, l = pair.ring.p, ell(pair)
    return p**l - p ** (l - 1)


def tilt_valuation(cfg: RingConfig, terms: int = 4) -> Fraction:
    """``lim q**m * v_p(pi_{mr})`` with ``v_p(pi_n) = 1 / (p**(n-1) (p-1))``.

    Every term of the sequence already equals the limit; all are computed
    and compared.
    """
    p, r, q = cfg.p, cfg.r, cfg.q
    values = {q**m * Fraction(1, p ** (m * r - 1) * (p - 1)) for m in range(1, terms + 1)}
    if len(values) != 1:
        raise MismatchWithTheorem("tilt sequence is not constant", {"config": cfg.to_json()})
    return values.pop()


# =========================================================================
# generators
# =========================================================================


def _scalar(ring: RingConfig, value) -> KScalar:
    if isinstance(value, int):
        return KScalar.from_int(ring, value)
    return KScalar.from_components(ring, value)


def make_lubin_tate(cfg: RingConfig, N: int, middle: Mapping | None = None, a: int | None = None
                    ) -> DynPair:
    """``f = pX + middle + X**p`` and ``u = [a]_f`` (default ``a = 1 + p``)."""
    p, e = cfg.p, cfg.e
    if N < p:
        raise TruncationTooShallow(f"degree {N} is below p = {p}")
    coeffs = {1: KScalar.from_int(cfg, p), p: KScalar.from_int(cfg, 1)}
    for k, value in (middle or {}).items():
        k = int(k)
        c = _scalar(cfg, value)
        if k < 2:
            raise InvalidTemplate("f must be congruent to pX modulo degree 2")
        if c.shift or c.v < e:
            raise InvalidTemplate(f"coefficient of X^{k} must be divisible by p")
        if k <= N:
            coeffs[k] = coeffs[k] + c if k in coeffs else c
    f = TruncSeries1.from_coeffs(cfg, coeffs, N)
    a = 1 + p if a is None else int(a)
    if a % p == 0:
        raise InvalidTemplate("a must be a unit")
    u = mult_by_m(f, a)
    pair = DynPair(f, u)
    return pair


def multiplicative_pair(cfg: RingConfig, N: int, a: int | None = None) -> DynPair:
    """``f = (1+X)**p - 1`` and ``u = (1+X)**a - 1`` (default ``a = 1 + p``)."""
    p = cfg.p
    a = 1 + p if a is None else a
    return DynPair(_binomial_series(cfg, p, N), _binomial_series(cfg, a, N))


def _binomial_series(cfg: RingConfig, a: int, N: int) -> TruncSeries1:
    """``(1+X)**a - 1`` for any integer ``a``."""
    coeffs, c = {}, 1
    for k in range(1, N + 1):
        c = c * (a - k + 1) // k
        if c == 0 and a >= 0:
            break
        coeffs[k] = c
    return TruncSeries1.from_coeffs(cfg, coeffs, N)


def random_conjugator(cfg: RingConfig, N: int, seed: int, degree: int | None = None
                      ) -> TruncSeries1:
    """``X + c_2 X**2 + ...`` with coefficients drawn uniformly from O_K / p**n_prec."""
    rng = random.Random(seed)
    M = cfg.modulus
    degree = N if degree is None else min(degree, N)
    coeffs = {1: 1}
    for k in range(2, degree + 1):
        coeffs[k] = list(cfg.reduce(rng.randrange(M) for _ in range(cfg.d)))
    return TruncSeries1.from_coeffs(cfg, coeffs, N)


def conjugate_pair(pair: DynPair, w: TruncSeries1) -> DynPair:
    """``(w^{-1} o f o w, w^{-1} o u o w)`` for integral ``w`` with ``w'(0) = 1``."""
    if not w.integral:
        raise NonIntegralSeries("w must have coefficients in O_K")
    if not w.linear.agrees(KScalar.one(w.ring)):
        raise HypothesisViolation("w'(0) must be 1")
    winv = comp_inverse(w)
    f = compose(winv, compose(pair.f, w))
    u = compose(winv, compose(pair.u, w))
    return DynPair(f, u)


# =========================================================================
# end-to-end verification
# =========================================================================


@dataclass(frozen=True, eq=False)
class ConjectureVerdict:
    F: TruncSeries2
    integral: bool
    offending: tuple | None
    endo_f: bool | None
    endo_u: bool | None
    certified_degree: int
    certified_prec: float
    hypotheses: HypothesisReport

    @property
    def holds(self) -> bool:
        return bool(self.integral and self.endo_f and self.endo_u)

    def to_json(self) -> dict:
        return {
            "integral": self.integral,
            "offending": list(self.offending) if self.offending else None,
            "endo_f": self.endo_f,
            "endo_u": self.endo_u,
            "certified_degree": self.certified_degree,
            "certified_prec": None if self.certified_prec == INF else self.certified_prec,
            "hypotheses": self.hypotheses.to_json(),
            "F": self.F.to_json(),
        }


def _endo_residual(F: TruncSeries2, s: TruncSeries1):
    res = subst2_sep(F, s, s) - subst2_outer(s, F)
    return res.is_zero(), res.certified_prec


def verify_conjecture(pair: DynPair, N: int | None = None) -> ConjectureVerdict:
    """Compute F from f and check integrality and that f, u are endomorphisms of F."""
    report = pair.hypotheses
    if report.failed:
        raise HypothesisViolation("hypotheses fail: " + ", ".join(report.failed))
    N = pair.N if N is None else N
    if N > pair.N:
        raise TruncationTooShallow(f"pair is only known to degree {pair.N}")
    f, u = pair.f.truncate(N), pair.u.truncate(N)
    F = formal_group(f)
    offending = None
    for key in sorted(F.coeffs, key=lambda k: (sum(k), k)):
        c = F.coeffs[key]
        if c.shift and not c.is_zero():
            offending = (key[0], key[1], c.shift)
            break
    integral = offending is None
    precs = [F.certified_prec]
    endo_f = endo_u = None
    if integral:
        endo_f, pf = _endo_residual(F, f)
        endo_u, pu = _endo_residual(F, u)
        precs += [pf, pu]
    return ConjectureVerdict(F, integral, offending, endo_f, endo_u, N, min(precs), report)
